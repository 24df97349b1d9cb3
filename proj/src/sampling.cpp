#include "asp/sampling.hpp"

#include <algorithm>
#include <numeric>

namespace asp {

SamplingRule SamplingRule::Uniform() { return SamplingRule{}; }

SamplingRule SamplingRule::WeightedUniform(Vector weights) {
  SamplingRule r;
  r.kind = Kind::kUniform;
  r.weights = std::move(weights);
  return r;
}

SamplingRule SamplingRule::MaxDistance() {
  SamplingRule r;
  r.kind = Kind::kMaxDistance;
  return r;
}

SamplingRule SamplingRule::Greedy(Index tau) {
  SamplingRule r;
  r.kind = Kind::kGreedy;
  r.tau = tau;
  return r;
}

SamplingRule SamplingRule::Capped(double theta, Index tau1, Index tau2,
                                  Threshold threshold) {
  SamplingRule r;
  r.kind = Kind::kCapped;
  r.theta = theta;
  r.tau1 = tau1;
  r.tau2 = tau2;
  r.threshold = threshold;
  return r;
}

std::string SamplingRule::name() const {
  switch (kind) {
    case Kind::kUniform:
      return weights ? "weighted-uniform" : "uniform";
    case Kind::kMaxDistance:
      return "maxdist";
    case Kind::kGreedy:
      return "greedy(" + std::to_string(tau) + ")";
    case Kind::kCapped:
      return "capped(" + std::to_string(theta) + "," + std::to_string(tau1) +
             "," + std::to_string(tau2) + ")";
  }
  return "?";
}

void SamplingRule::validate(Index q) const {
  switch (kind) {
    case Kind::kUniform:
      if (weights) {
        if (weights->size() != q)
          throw std::invalid_argument("rule: weight vector length mismatch");
        if ((weights->array() < 0.0).any() || weights->sum() <= 0.0)
          throw std::invalid_argument("rule: weights must be nonnegative with positive sum");
      }
      break;
    case Kind::kMaxDistance:
      break;
    case Kind::kGreedy:
      if (tau < 1 || tau > q)
        throw std::invalid_argument("rule: greedy tau out of range [1, q]");
      break;
    case Kind::kCapped:
      if (theta < 0.0 || theta > 1.0)
        throw std::invalid_argument("rule: capped theta out of range [0, 1]");
      if (tau1 < 1 || tau1 > q || tau2 < 1 || tau2 > q)
        throw std::invalid_argument("rule: capped tau out of range [1, q]");
      break;
  }
}

Index select_uniform(Index q, Rng& rng) {
  if (q < 1) throw std::invalid_argument("select: q must be positive");
  return rng.uniform_index(q);
}

Index select_max_distance(const Vector& losses) {
  Index best = 0;
  for (Index i = 1; i < losses.size(); ++i)
    if (losses[i] > losses[best]) best = i;
  return best;
}

Sampler::Sampler(SamplingRule rule, const ProblemInstance& p,
                 const MetricMatrix& b, const SketchSet& s, Rng rng)
    : rule_(std::move(rule)), p_(p), b_(b), s_(s), rng_(rng) {
  rule_.validate(s_.q());
  fisher_yates_.resize(s_.q());
  std::iota(fisher_yates_.begin(), fisher_yates_.end(), Index{0});
  values_.resize(s_.q());
  if (rule_.weights) {
    cumulative_.resize(s_.q());
    double acc = 0.0;
    for (Index i = 0; i < s_.q(); ++i) {
      acc += (*rule_.weights)[i];
      cumulative_[i] = acc;
    }
  }
}

void Sampler::compute_full_values(const Vector& x) {
  s_.values_into(p_, x, values_);
  has_full_values_ = true;
}

// Uniform and greedy rules only evaluate the sampled sketches, so they can
// certify global sketch-feasibility only when a batch evaluation already
// produced every value; the solver's stopping checks own exact termination
// otherwise. Scanning the full set on every zero-loss draw would put an
// O(mn) pass on the hot path.
Selection Sampler::verify_or_return(const Vector& x, Index idx, double value) {
  (void)x;
  if (value > 0.0) return Selection{false, idx, value};
  if (has_full_values_ && (values_.array() <= 0.0).all())
    return Selection{true, -1, 0.0};
  return Selection{false, idx, value};
}

Selection Sampler::select_uniform(const Vector& x) {
  Index idx;
  if (rule_.weights) {
    const double u = rng_.uniform01() * cumulative_[s_.q() - 1];
    idx = std::distance(
        cumulative_.data(),
        std::upper_bound(cumulative_.data(), cumulative_.data() + s_.q(), u));
    if (idx >= s_.q()) idx = s_.q() - 1;
  } else {
    idx = asp::select_uniform(s_.q(), rng_);
  }
  double value;
  if (s_.kind() == SketchSet::Kind::kExplicit) {
    compute_full_values(x);  // one residual pass instead of one per value
    value = values_[idx];
  } else {
    value = s_.value(p_, x, idx);
  }
  return verify_or_return(x, idx, value);
}

Selection Sampler::select_greedy(const Vector& x, Index tau) {
  const Index q = s_.q();
  if (tau == q && s_.kind() == SketchSet::Kind::kCoordinateBasis &&
      rule_.kind == SamplingRule::Kind::kGreedy) {
    // Full sample: identical to max-distance, and the batch evaluation is
    // cheaper than q row dots.
    return select_max_distance(x);
  }
  // Fisher-Yates prefix over the index buffer: tau distinct indices, O(tau)
  // per draw. The swaps are rolled back afterwards so every selection starts
  // from the identity arrangement; with tau = 1 the index stream is then
  // bit-identical to the uniform rule's.
  const bool explicit_batch = s_.kind() == SketchSet::Kind::kExplicit;
  if (explicit_batch) compute_full_values(x);
  Index best = -1;
  double best_loss = -1.0;
  double best_value = 0.0;
  undo_.resize(tau);
  for (Index j = 0; j < tau; ++j) {
    const Index swap_with = j + rng_.uniform_index(q - j);
    std::swap(fisher_yates_[j], fisher_yates_[swap_with]);
    undo_[j] = swap_with;
    const Index idx = fisher_yates_[j];
    const double v =
        explicit_batch ? values_[idx] : p_.A.row_dot(idx, x) - p_.b[idx];
    const double loss = loss_from_value(s_, v, idx);
    if (loss > best_loss || (loss == best_loss && idx < best)) {
      best = idx;
      best_loss = loss;
      best_value = v;
    }
  }
  for (Index j = tau - 1; j >= 0; --j)
    std::swap(fisher_yates_[j], fisher_yates_[undo_[j]]);
  return verify_or_return(x, best, best_value);
}

Selection Sampler::select_max_distance(const Vector& x) {
  compute_full_values(x);
  Index best = 0;
  double best_loss = loss_from_value(s_, values_[0], 0);
  for (Index i = 1; i < s_.q(); ++i) {
    const double loss = loss_from_value(s_, values_[i], i);
    if (loss > best_loss) {
      best = i;
      best_loss = loss;
    }
  }
  if (best_loss == 0.0) return Selection{true, -1, 0.0};
  return Selection{false, best, values_[best]};
}

Selection Sampler::select_capped(const Vector& x) {
  compute_full_values(x);
  double max_loss = 0.0;
  for (Index i = 0; i < s_.q(); ++i)
    max_loss = std::max(max_loss, loss_from_value(s_, values_[i], i));
  if (max_loss == 0.0) return Selection{true, -1, 0.0};

  double t;
  if (rule_.threshold == SamplingRule::Threshold::kExact) {
    Vector losses(s_.q());
    for (Index i = 0; i < s_.q(); ++i)
      losses[i] = loss_from_value(s_, values_[i], i);
    t = rule_.theta * expected_loss_greedy_from_losses(losses, rule_.tau1) +
        (1.0 - rule_.theta) *
            expected_loss_greedy_from_losses(losses, rule_.tau2);
  } else {
    double sq = 0.0;
    for (Index i = 0; i < s_.q(); ++i)
      if (values_[i] > 0.0) sq += values_[i] * values_[i];
    t = sq / (2.0 * s_.omega_max() * static_cast<double>(s_.q()));
    t = std::min(t, max_loss);  // keep W nonempty under the loose bound
  }

  // W = {i : f_i >= T}; nonempty since max f_i >= T. Uniform draw within W.
  Index count = 0;
  for (Index i = 0; i < s_.q(); ++i)
    if (loss_from_value(s_, values_[i], i) >= t) ++count;
  Index pick = rng_.uniform_index(count);
  for (Index i = 0; i < s_.q(); ++i) {
    if (loss_from_value(s_, values_[i], i) >= t) {
      if (pick == 0) return Selection{false, i, values_[i]};
      --pick;
    }
  }
  throw std::logic_error("capped selection: W unexpectedly empty");
}

Selection Sampler::select(const Vector& x) {
  has_full_values_ = false;
  switch (rule_.kind) {
    case SamplingRule::Kind::kUniform:
      return select_uniform(x);
    case SamplingRule::Kind::kMaxDistance:
      return select_max_distance(x);
    case SamplingRule::Kind::kGreedy:
      return select_greedy(x, rule_.tau);
    case SamplingRule::Kind::kCapped:
      return select_capped(x);
  }
  throw std::logic_error("unknown sampling rule");
}

}  // namespace asp
