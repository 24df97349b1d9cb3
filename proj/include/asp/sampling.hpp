#pragma once

#include <optional>

#include "asp/core.hpp"
#include "asp/loss.hpp"
#include "asp/rng.hpp"

namespace asp {

/// Index-selection rule descriptor. Greedy(1) matches Uniform in
/// distribution, Greedy(q) matches MaxDistance deterministically.
struct SamplingRule {
  enum class Kind { kUniform, kMaxDistance, kGreedy, kCapped };
  enum class Threshold { kExact, kLowerBound };

  Kind kind = Kind::kUniform;
  Index tau = 1;          // greedy sample size
  double theta = 0.5;     // capped mixing weight in [0, 1]
  Index tau1 = 1;         // capped first threshold sample size
  Index tau2 = 1;         // capped second threshold sample size
  Threshold threshold = Threshold::kExact;
  // Optional selection weights for the uniform rule (probabilities
  // proportional to the given nonnegative entries).
  std::optional<Vector> weights;

  static SamplingRule Uniform();
  static SamplingRule WeightedUniform(Vector weights);
  static SamplingRule MaxDistance();
  static SamplingRule Greedy(Index tau);
  static SamplingRule Capped(double theta, Index tau1, Index tau2,
                             Threshold threshold = Threshold::kExact);

  std::string name() const;
  void validate(Index q) const;
};

/// Result of one selection: either an index (with its sketched value, when
/// the rule computed it) or the already-feasible signal raised when every
/// sketched loss is exactly zero.
struct Selection {
  bool already_feasible = false;
  Index index = -1;
  double value = 0.0;  // S_i^T(Ax-b) at the selected index
};

/// Stateless selection logic bound to one (problem, metric, sketch set) and
/// owning its RNG stream plus scratch buffers. Identical seed and call
/// sequence give identical index streams.
class Sampler {
 public:
  Sampler(SamplingRule rule, const ProblemInstance& p, const MetricMatrix& b,
          const SketchSet& s, Rng rng);

  Selection select(const Vector& x);

  const SamplingRule& rule() const { return rule_; }

  /// True when the last select() computed the sketched value of every index
  /// (max-distance and capped rules; also the feasibility verification path).
  bool has_full_values() const { return has_full_values_; }
  const Vector& full_values() const { return values_; }

 private:
  Selection select_uniform(const Vector& x);
  Selection select_greedy(const Vector& x, Index tau);
  Selection select_max_distance(const Vector& x);
  Selection select_capped(const Vector& x);
  void compute_full_values(const Vector& x);
  Selection verify_or_return(const Vector& x, Index idx, double value);

  SamplingRule rule_;
  const ProblemInstance& p_;
  const MetricMatrix& b_;
  const SketchSet& s_;
  Rng rng_;
  std::vector<Index> fisher_yates_;  // index buffer, identity between calls
  std::vector<Index> undo_;          // swap rollback scratch
  Vector values_;
  Vector cumulative_;  // weighted-uniform CDF
  bool has_full_values_ = false;
};

/// Low-level selectors used by the sampler and exposed for direct testing.
Index select_uniform(Index q, Rng& rng);
Index select_max_distance(const Vector& losses);

}  // namespace asp
