#include "asp/loss.hpp"

#include <algorithm>
#include <numeric>

namespace asp {

double loss_i(const ProblemInstance& p, const MetricMatrix& b,
              const SketchSet& s, const Vector& x, Index i) {
  (void)b;
  return loss_from_value(s, s.value(p, x, i), i);
}

Vector grad_b_loss_i(const ProblemInstance& p, const MetricMatrix& b,
                     const SketchSet& s, const Vector& x, Index i) {
  const double v = s.value(p, x, i);
  if (v <= 0.0) return Vector::Zero(p.n());
  return (v / s.norms()[i]) * b.apply_inverse(s.at_s(p, i));
}

Vector grad_loss_i(const ProblemInstance& p, const MetricMatrix& b,
                   const SketchSet& s, const Vector& x, Index i) {
  (void)b;
  const double v = s.value(p, x, i);
  if (v <= 0.0) return Vector::Zero(p.n());
  return (v / s.norms()[i]) * s.at_s(p, i);
}

SketchedResidual sketched_residual(const ProblemInstance& p,
                                   const MetricMatrix& b, const SketchSet& s,
                                   const Vector& x) {
  (void)b;
  SketchedResidual out;
  out.values.resize(s.q());
  s.values_into(p, x, out.values);
  out.nonzero_count = 0;
  for (Index i = 0; i < out.values.size(); ++i) {
    if (out.values[i] > 0.0) {
      ++out.nonzero_count;
    } else {
      out.values[i] = 0.0;
    }
  }
  return out;
}

Vector greedy_position_weights(Index q, Index tau) {
  if (tau < 1 || tau > q)
    throw std::invalid_argument("greedy expectation: tau out of range");
  Vector w = Vector::Zero(q);
  // Top position first: weight of position q-1 is C(q-1,tau-1)/C(q,tau)=tau/q.
  w[q - 1] = static_cast<double>(tau) / static_cast<double>(q);
  for (Index j = q - tau; j >= 1; --j) {
    const Index pos = tau - 1 + j;
    w[pos - 1] = w[pos] * static_cast<double>(j) /
                 static_cast<double>(tau + j - 1);
  }
  return w;
}

double expected_loss_greedy_from_losses(const Vector& losses, Index tau) {
  const Index q = losses.size();
  if (tau < 1 || tau > q)
    throw std::invalid_argument("greedy expectation: tau out of range");
  if (tau == 1) return losses.mean();
  if (tau == q) return losses.maxCoeff();
  std::vector<Index> order(q);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index c) { return losses[a] < losses[c]; });
  const Vector w = greedy_position_weights(q, tau);
  double acc = 0.0;
  for (Index pos = tau - 1; pos < q; ++pos)
    acc += w[pos] * losses[order[pos]];
  return acc;
}

Vector all_losses(const ProblemInstance& p, const MetricMatrix& b,
                  const SketchSet& s, const Vector& x) {
  (void)b;
  Vector vals(s.q());
  s.values_into(p, x, vals);
  for (Index i = 0; i < vals.size(); ++i)
    vals[i] = loss_from_value(s, vals[i], i);
  return vals;
}

double expected_loss_greedy(const ProblemInstance& p, const MetricMatrix& b,
                            const SketchSet& s, const Vector& x, Index tau) {
  return expected_loss_greedy_from_losses(all_losses(p, b, s, x), tau);
}

double expected_loss_lower_bound_from_residual(const SketchSet& s,
                                               const SketchedResidual& r) {
  return r.values.squaredNorm() /
         (2.0 * s.omega_max() * static_cast<double>(s.q()));
}

double expected_loss_lower_bound(const ProblemInstance& p,
                                 const MetricMatrix& b, const SketchSet& s,
                                 const Vector& x) {
  SketchedResidual r = sketched_residual(p, b, s, x);
  return expected_loss_lower_bound_from_residual(s, r);
}

}  // namespace asp
