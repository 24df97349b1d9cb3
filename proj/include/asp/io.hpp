#pragma once

#include <optional>
#include <string>

#include "asp/core.hpp"
#include "asp/instances.hpp"
#include "asp/solver.hpp"

namespace asp::io {

/// Parses a Matrix Market file (coordinate or array, real or integer field,
/// general or symmetric). Coordinate data loads into sparse storage, array
/// data into dense. 1-based indices are converted; malformed headers, indices
/// out of bounds and dimension mismatches raise distinct errors.
ConstraintMatrix load_matrix_market_matrix(const std::string& path);

/// Loads A from a Matrix Market file and b from a whitespace-separated vector
/// file of length m; an empty b path gives b = 0.
ProblemInstance load_matrix_market(const std::string& path_a,
                                   const std::string& path_b = "");

/// Writes dense matrices in array format, sparse in coordinate format, with
/// 17 significant digits so a reload reproduces the entries exactly.
void write_matrix_market(const ConstraintMatrix& a, const std::string& path);

Vector load_vector(const std::string& path);
void write_vector(const Vector& v, const std::string& path);

/// Instance directory layout: A.mtx, b.txt, meta.json (m, n, kind, seed and,
/// for generated instances, the interior point).
void write_instance(const GeneratedInstance& inst, const std::string& dir);

struct LoadedInstance {
  ProblemInstance problem;
  std::optional<Vector> x_int;
  std::string kind;
  std::uint64_t seed = 0;
};

LoadedInstance load_instance(const std::string& dir);

/// CSV schema: "iter,time_s,pos_residual,rel_error,fsc", one row per trace
/// record, 17 significant digits, rel_error empty when absent.
void write_trace_csv(const SolveReport& report, const std::string& path);

std::string format_double(double v);  // %.17g

}  // namespace asp::io
