#pragma once

#include <cstdint>
#include <string>

#include "asp/core.hpp"
#include "asp/rng.hpp"

namespace asp {

/// Synthetic instance with the generating interior point kept for the
/// relative-error metric.
struct GeneratedInstance {
  enum class Kind { kGaussianFeasibility, kPdGaussian };

  ProblemInstance problem;
  Vector x_int;
  Kind kind;
  std::uint64_t seed;
};

std::string to_string(GeneratedInstance::Kind k);
GeneratedInstance::Kind instance_kind_from_string(const std::string& s);

/// A and x_int i.i.d. standard normal, b = A x_int + |eps| with eps standard
/// normal, so A x_int <= b holds by construction. With normalize_rows the
/// rows of A are scaled to unit norm before b is generated, matching the
/// unit-row assumption of the Kaczmarz-family benchmarks.
GeneratedInstance gen_gaussian(Index m, Index n, std::uint64_t seed,
                               bool normalize_rows = false);

/// A = G^T G for square standard-normal G (symmetric positive definite
/// almost surely), b generated as in gen_gaussian.
GeneratedInstance gen_pd_gaussian(Index n, std::uint64_t seed);

}  // namespace asp
