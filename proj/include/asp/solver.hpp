#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asp/core.hpp"
#include "asp/sampling.hpp"

namespace asp {

struct SolverConfig {
  double delta = 1.0;        // projection parameter, in (0, 2)
  double gamma = 0.0;        // momentum parameter, in [0, 1)
  SamplingRule rule;
  long max_iters = 300000;
  double residual_tol = 1e-5;
  std::uint64_t seed = 0;
  bool track_cesaro = true;
  // Stopping-residual recomputation stride; 0 picks 1 for small instances
  // and 100 for m > 10^4, where the O(mn) residual dominates cheap rules.
  long check_every = 0;
  long log_every = 0;  // trace stride (multiple of check_every); 0 = auto
  bool keep_iterates = false;

  void validate() const;
};

enum class Termination { kTolerance, kMaxIters, kAlreadyFeasible };

std::string to_string(Termination t);

struct TraceRecord {
  long iter = 0;
  double time_s = 0.0;
  double pos_residual = 0.0;
  std::optional<double> rel_error;
  double fsc = 0.0;
};

struct SolveReport {
  std::vector<TraceRecord> trace;
  Vector final_x;
  Vector cesaro_x;
  Termination terminated_by = Termination::kMaxIters;
  SolverConfig config;
  long iterations = 0;
  double elapsed_s = 0.0;
  double final_residual = 0.0;
  double final_fsc = 0.0;
  std::vector<Vector> iterates;  // x_0..x_k when keep_iterates
};

/// Solver state across iterations; x_prev = x_curr = x0 at start.
struct IterateState {
  Vector x_curr;
  Vector x_prev;
  long k = 0;
  Vector cesaro_sum;
  Rng rng;

  IterateState(Vector x0, Rng r)
      : x_curr(x0), x_prev(std::move(x0)), cesaro_sum(Vector::Zero(x_curr.size())), rng(r) {}
};

/// One projection step: x - delta * grad_B f_i(x). Pure.
Vector asp_step(const ProblemInstance& p, const MetricMatrix& b,
                const SketchSet& s, const Vector& x, Index i, double delta);

/// One momentum step applied in place:
/// x_next = x_curr - delta*grad_B f_i(x_curr) + gamma*(x_curr - x_prev),
/// then the state shifts and the Cesaro sum accumulates x_next.
/// The sketched value S_i^T(Ax-b) may be supplied when already computed.
void aspm_step(IterateState& st, const ProblemInstance& p,
               const MetricMatrix& b, const SketchSet& s, Index i,
               double delta, double gamma,
               std::optional<double> value = std::nullopt);

/// Fraction of satisfied constraints, exact nonstrict comparison.
double metric_fsc(const ProblemInstance& p, const Vector& x);

/// ||x - x_ref||_B / ||x0 - x_ref||_B.
double metric_relative_error(const MetricMatrix& b, const Vector& x,
                             const Vector& x_ref, const Vector& x0);

/// Runs the momentum iteration until ||(Ax-b)^+||_2 <= residual_tol or
/// max_iters, honoring the sampler's already-feasible short-circuit.
/// x0 defaults to 1000*(1,..,1); x_ref enables the relative-error column.
SolveReport solve(const ProblemInstance& p, const MetricMatrix& b,
                  const SketchSet& s, const SolverConfig& config,
                  std::optional<Vector> x0 = std::nullopt,
                  std::optional<Vector> x_ref = std::nullopt);

/// Named method presets. The Kaczmarz family (mrk, mmr, mskm, mck) uses
/// B = I with coordinate sketches; the coordinate-descent family (mrcd,
/// mmcd, mscd, mccd) requires square SPD A and uses B = A, stepping along
/// unit coordinates; the least-squares family (mrcd_ls, mmcd_ls, mscd_ls,
/// mccd_ls) requires A >= 0 elementwise, sketches with the rows of the
/// pseudo-inverse and is guarded to n <= 500.
struct PresetBundle {
  MetricMatrix B;
  SketchSet S;
  SamplingRule rule;
};

struct PresetParams {
  Index tau = 1;
  double theta = 0.5;
  std::optional<Index> tau1;  // default q
  std::optional<Index> tau2;  // default 1
  bool weighted = false;      // uniform selection weighted by w_i
};

PresetBundle preset(const std::string& name, const ProblemInstance& p,
                    const PresetParams& params = {});

const std::vector<std::string>& preset_names();

}  // namespace asp
