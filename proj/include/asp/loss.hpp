#pragma once

#include "asp/core.hpp"

namespace asp {

/// Positive parts of the sketched residual, [S_i^T(Ax-b)]^+ for all i.
struct SketchedResidual {
  Vector values;
  Index nonzero_count = 0;
};

/// Sketched loss f_i(x) = |[S_i^T(Ax-b)]^+|^2 / (2 w_i); zero exactly when
/// the i-th sketched constraint is satisfied.
double loss_i(const ProblemInstance& p, const MetricMatrix& b,
              const SketchSet& s, const Vector& x, Index i);

/// Loss from an already computed sketched value S_i^T(Ax-b).
inline double loss_from_value(const SketchSet& s, double value, Index i) {
  const double pos = value > 0.0 ? value : 0.0;
  return pos * pos / (2.0 * s.norms()[i]);
}

/// B-gradient of f_i: ([S_i^T(Ax-b)]^+ / w_i) B^{-1} A^T S_i.
Vector grad_b_loss_i(const ProblemInstance& p, const MetricMatrix& b,
                     const SketchSet& s, const Vector& x, Index i);

/// Plain (Euclidean) gradient of f_i: ([S_i^T(Ax-b)]^+ / w_i) A^T S_i.
Vector grad_loss_i(const ProblemInstance& p, const MetricMatrix& b,
                   const SketchSet& s, const Vector& x, Index i);

SketchedResidual sketched_residual(const ProblemInstance& p,
                                   const MetricMatrix& b, const SketchSet& s,
                                   const Vector& x);

/// Exact expectation of the sampled loss under greedy selection with sample
/// size tau: losses are sorted ascending (ties by original index) and the
/// entry at sorted position tau-1+j is weighted by C(tau-1+j, tau-1)/C(q,tau).
/// tau = 1 gives the plain mean, tau = q the maximum.
double expected_loss_greedy(const ProblemInstance& p, const MetricMatrix& b,
                            const SketchSet& s, const Vector& x, Index tau);

/// Same expectation computed from a precomputed loss vector.
double expected_loss_greedy_from_losses(const Vector& losses, Index tau);

/// ||[R(Ax-b)]^+||^2 / (2 w_max q): a cheap lower bound on the greedy
/// expectation for every tau, used by the capped rule's fast threshold mode.
double expected_loss_lower_bound(const ProblemInstance& p,
                                 const MetricMatrix& b, const SketchSet& s,
                                 const Vector& x);

double expected_loss_lower_bound_from_residual(const SketchSet& s,
                                               const SketchedResidual& r);

/// Selection weights of the greedy rule over sorted positions: weight of
/// sorted position tau-1+j is C(tau-1+j, tau-1)/C(q, tau). Computed by a
/// downward multiplicative recurrence starting from tau/q, which stays in
/// (0, 1] and never forms a raw binomial coefficient.
Vector greedy_position_weights(Index q, Index tau);

/// losses[i] for all i, with batch evaluation of the sketched residual.
Vector all_losses(const ProblemInstance& p, const MetricMatrix& b,
                  const SketchSet& s, const Vector& x);

}  // namespace asp
