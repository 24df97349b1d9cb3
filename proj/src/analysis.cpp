#include "asp/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace asp {

double largest_eigenvalue_sym(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("eigensolve: matrix must be square");
  if (m.rows() < 2000) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }
  // Power iteration on the PSD matrices this is used for.
  Rng rng(12345);
  Vector v(m.rows());
  for (Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vector w = m * v;
    const double next = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    if (std::abs(next - lambda) <= 1e-10 * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
    v = w;
  }
  return lambda;
}

double hoffman_consistent(const ConstraintMatrix& a) {
  Matrix dense = a.to_dense();
  Matrix gram = dense.transpose() * dense;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  if (!(lmax > 0.0))
    throw std::invalid_argument("hoffman: A must be nonzero");
  const double floor = lmax * 1e-12;
  double lmin_pos = lmax;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev[i] > floor) lmin_pos = std::min(lmin_pos, ev[i]);
  return 1.0 / lmin_pos;
}

double hoffman_bruteforce(const ProblemInstance& p, const MetricMatrix& b,
                          const SketchSet& s, Index samples,
                          std::uint64_t seed,
                          const std::vector<Vector>* extra_points) {
  if (p.m() > 20 || p.n() > 6)
    throw std::invalid_argument("hoffman oracle: guarded to m <= 20, n <= 6");
  Rng rng(seed);
  Vector values(s.q());
  double best = 0.0;

  auto ratio_at = [&](const Vector& x) {
    s.values_into(p, x, values);
    double denom = 0.0;
    for (Index i = 0; i < values.size(); ++i)
      if (values[i] > 0.0) denom += values[i] * values[i];
    if (denom <= 0.0) return;  // x feasible for every sketch
    const double d2 = exact_distance_sq_smallscale(p, b, x);
    if (d2 <= 0.0) return;
    best = std::max(best, d2 / denom);
  };

  // Mixed radii around the origin plus points pushed outward from their own
  // projections, which probe the binding faces.
  const double scales[] = {0.3, 1.0, 3.0, 10.0, 100.0};
  Vector x(p.n());
  for (Index t = 0; t < samples; ++t) {
    const double scale = scales[t % 5];
    for (Index j = 0; j < p.n(); ++j) x[j] = scale * rng.normal();
    ratio_at(x);
    if (t % 7 == 0) {
      try {
        Vector proj = exact_projection_smallscale(p, b, x);
        Vector pushed = proj + 1e-3 * (x - proj);
        ratio_at(pushed);
      } catch (const std::runtime_error&) {
        // infeasible systems have no projection; plain samples still count
      }
    }
  }
  if (extra_points)
    for (const Vector& pt : *extra_points) ratio_at(pt);
  if (!(best > 0.0))
    throw std::runtime_error("hoffman oracle: no infeasible sample found");
  return best;
}

namespace {

Matrix sketch_gram_whitened(const ProblemInstance& p, const MetricMatrix& b,
                            const SketchSet& s) {
  // B^{-1/2} A^T R^T R A B^{-1/2} (as a similar symmetric matrix).
  Matrix ra;
  if (s.kind() == SketchSet::Kind::kCoordinateBasis) {
    ra = p.A.to_dense();
  } else {
    ra = s.sketch_matrix() * p.A.to_dense();
  }
  Matrix gram = ra.transpose() * ra;
  return b.whiten_sym(gram);
}

}  // namespace

SpectralConstants mu_bounds_greedy(const ProblemInstance& p,
                                   const MetricMatrix& b, const SketchSet& s,
                                   Index tau, double sigma_hoffman,
                                   std::optional<Index> zero_count) {
  const Index q = s.q();
  if (tau < 1 || tau > q)
    throw std::invalid_argument("mu bounds: tau out of range");
  if (!(sigma_hoffman > 0.0))
    throw std::invalid_argument("mu bounds: sigma must be positive");
  const Index zeros = zero_count.value_or(0);
  if (zeros < 0 || zeros > q)
    throw std::invalid_argument("mu bounds: zero count out of range");

  SpectralConstants c;
  c.hoffman_sigma = sigma_hoffman;
  c.omega1 = s.omega_min();
  c.omega2 = s.omega_max();

  const double inv_tail = 1.0 / static_cast<double>(q - tau + 1);
  const double inv_support =
      zeros < q ? 1.0 / static_cast<double>(q - zeros) : 1.0;
  c.mu1 = std::min(inv_tail, inv_support) / (sigma_hoffman * c.omega2);

  const double lmax = largest_eigenvalue_sym(sketch_gram_whitened(p, b, s));
  c.mu2 = std::min(1.0, static_cast<double>(tau) * lmax /
                            (c.omega1 * static_cast<double>(q)));
  return c;
}

SpectralConstants mu_bounds_capped(
    double theta, Index tau1, Index tau2, Index q,
    const std::function<SpectralConstants(Index)>& constants_fn) {
  if (theta < 0.0 || theta > 1.0)
    throw std::invalid_argument("mu bounds: theta out of range [0, 1]");
  SpectralConstants c1 = constants_fn(tau1);
  SpectralConstants c2 = constants_fn(tau2);
  SpectralConstants out = c1;
  out.mu1 = theta * c1.mu1 + (1.0 - theta) * c2.mu1;
  // mu2 at full sample size, i.e. the max-loss bound.
  out.mu2 = constants_fn(q).mu2;
  return out;
}

double mu2_operator(const ProblemInstance& p, const MetricMatrix& b,
                    const SketchSet& s, const Vector& probabilities) {
  if (probabilities.size() != s.q())
    throw std::invalid_argument("mu2 operator: probability vector length");
  if ((probabilities.array() < 0.0).any() ||
      std::abs(probabilities.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("mu2 operator: probabilities must sum to 1");

  // A^T Z A with Z = sum_i p_i S_i S_i^T / w_i, assembled as a weighted Gram.
  Matrix ra;
  if (s.kind() == SketchSet::Kind::kCoordinateBasis)
    ra = p.A.to_dense();
  else
    ra = s.sketch_matrix() * p.A.to_dense();
  for (Index i = 0; i < s.q(); ++i)
    ra.row(i) *= std::sqrt(probabilities[i] / s.norms()[i]);
  Matrix gram = ra.transpose() * ra;
  return largest_eigenvalue_sym(b.whiten_sym(gram));
}

double rate_basic(double delta, double mu1) {
  if (!(delta > 0.0 && delta < 2.0))
    throw std::invalid_argument("rate: delta must lie in (0, 2)");
  if (!(mu1 > 0.0 && mu1 <= 1.0))
    throw std::invalid_argument("rate: mu1 must lie in (0, 1]");
  const double eta = 2.0 * delta - delta * delta;
  return 1.0 - eta * mu1;
}

GammaBound momentum_gamma_max(double delta, double mu1, double mu2) {
  const double h = rate_basic(delta, mu1);
  const double sh = std::sqrt(h);
  const double sm2 = std::sqrt(mu2);
  GammaBound g;
  g.boundary = (1.0 - sh) / (1.0 - sh + delta * sm2);

  const double t1 = mu1 / (mu1 + sm2);
  const double r = 1.0 - std::sqrt(1.0 - mu1);
  const double t2 = r / (r + sm2);
  g.piecewise = delta <= 1.0 ? t1 - (t1 - t2) * delta : t2 * (2.0 - delta);
  return g;
}

RegionCheck region_check(double delta, double gamma,
                         std::optional<double> zeta, double mu1, double mu2) {
  RegionCheck rc;

  if (!(delta > 0.0 && delta < 2.0)) {
    rc.q_violation = rc.r_violation = "delta outside (0, 2)";
  } else if (gamma < 0.0) {
    rc.q_violation = rc.r_violation = "gamma negative";
  } else {
    const double bound = momentum_gamma_max(delta, mu1, mu2).boundary;
    if (gamma < bound) {
      rc.in_q = true;
    } else {
      rc.q_violation = "gamma >= (1-sqrt(h))/(1-sqrt(h)+delta*sqrt(mu2)) = " +
                       std::to_string(bound);
    }
  }

  if (!zeta) {
    rc.r_violation = rc.s_violation = "zeta not supplied";
    return rc;
  }
  const double z = *zeta;
  if (!(delta > 0.0 && delta < 2.0)) {
    // message already set
  } else if (z < 0.0) {
    rc.r_violation = "zeta negative";
  } else if (!(gamma >= 0.0 && gamma < z / (1.0 + z))) {
    rc.r_violation = "gamma outside [0, zeta/(1+zeta))";
  } else {
    rc.in_r = true;
  }

  const double mid = 2.0 / (1.0 + z) - delta + gamma;
  if (!(gamma * mu2 / mu1 < mid)) {
    rc.s_violation = "gamma*mu2/mu1 >= 2/(1+zeta) - delta + gamma";
  } else if (!(mid <= (1.0 + gamma) / (delta * mu1 * (1.0 + z)))) {
    rc.s_violation = "2/(1+zeta) - delta + gamma > (1+gamma)/(delta*mu1*(1+zeta))";
  } else {
    rc.in_s = true;
  }
  return rc;
}

MomentumRateL1 momentum_rate_l1(double delta, double gamma, double mu1,
                                double mu2) {
  RegionCheck rc = region_check(delta, gamma, std::nullopt, mu1, mu2);
  if (!rc.in_q)
    throw std::invalid_argument("momentum rate: (delta, gamma) not in Q: " +
                                rc.q_violation);
  const double pi1 = std::sqrt(rate_basic(delta, mu1));
  const double pi2 = gamma;
  const double pi3 = delta * std::sqrt(mu2);
  const double pi4 = gamma;
  const double disc = (pi1 - pi4) * (pi1 - pi4) + 4.0 * pi2 * pi3;
  const double sq = std::sqrt(disc);
  if (!(sq > 0.0))
    throw std::invalid_argument("momentum rate: degenerate recurrence (h = 0)");
  MomentumRateL1 r;
  r.gamma1 = (pi1 - pi4 + sq) / (2.0 * pi3);
  r.gamma2 = (pi1 - pi4 - sq) / (2.0 * pi3);
  r.gamma3 = pi3 / sq;
  r.rho1 = 0.5 * (pi1 + pi4 - sq);
  r.rho2 = 0.5 * (pi1 + pi4 + sq);
  return r;
}

MomentumRateL2 momentum_rate_l2(double delta, double gamma, double zeta,
                                double mu1, double mu2) {
  RegionCheck rc = region_check(delta, gamma, zeta, mu1, mu2);
  if (!rc.in_r)
    throw std::invalid_argument("momentum rate: (delta, gamma, zeta) not in R: " +
                                rc.r_violation);
  if (!rc.in_s)
    throw std::invalid_argument("momentum rate: (delta, gamma, zeta) not in S: " +
                                rc.s_violation);

  const double beta1 =
      1.0 + gamma + delta * mu1 * ((1.0 + zeta) * (delta - gamma) - 2.0);
  const double beta2 = gamma * (delta * (1.0 + zeta) * mu2 - 1.0);
  const double beta3 = zeta * gamma * gamma + gamma * gamma + gamma;

  MomentumRateL2 r;
  if (delta * mu2 * (1.0 + zeta) <= 1.0) {
    // Contraction already holds for the combined distance coefficient.
    const double combined = beta1 + beta2;
    r.alpha = std::max(0.0, beta3 / zeta - combined);
    r.rho = std::max(combined, beta3 / zeta);
  } else {
    const double root = 0.5 * (-beta1 + std::sqrt(beta1 * beta1 + 4.0 * beta2));
    r.alpha = std::max({0.0, beta3 / zeta - beta1, root});
    r.rho = std::max(beta3 / zeta,
                     0.5 * (beta1 + std::sqrt(beta1 * beta1 + 4.0 * beta2)));
  }
  if (!(r.rho < 1.0))
    throw std::invalid_argument("momentum rate: rho >= 1 despite region membership");
  return r;
}

double cesaro_bound(double delta, double gamma, long k, double d0_sq,
                    double f0) {
  if (!(delta > 0.0 && gamma >= 0.0 && gamma < 1.0 &&
        delta < 2.0 * (1.0 - gamma)))
    throw std::invalid_argument("cesaro bound: requires 0 < delta < 2(1-gamma)");
  if (k < 1) throw std::invalid_argument("cesaro bound: k must be positive");
  const double num =
      (1.0 - gamma) * (1.0 - gamma) * d0_sq + 2.0 * delta * gamma * f0;
  return num / (2.0 * delta * static_cast<double>(k) *
                (2.0 - 2.0 * gamma - delta));
}

double sigma_encoding(const ConstraintMatrix& a, const Vector& b) {
  double acc = 0.0;
  Matrix dense = a.to_dense();
  for (Index i = 0; i < dense.rows(); ++i)
    for (Index j = 0; j < dense.cols(); ++j)
      acc += std::log(std::abs(dense(i, j)) + 1.0);
  for (Index i = 0; i < b.size(); ++i) acc += std::log(std::abs(b[i]) + 1.0);
  acc += std::log(static_cast<double>(dense.rows()) *
                  static_cast<double>(dense.cols()));
  return acc + 2.0;
}

double max_violation(const ProblemInstance& p, const Vector& x) {
  double worst = 0.0;
  for (Index i = 0; i < p.m(); ++i)
    worst = std::max(worst, p.A.row_dot(i, x) - p.b[i]);
  return std::max(worst, 0.0);
}

CertificateInputs CertificateInputs::from_instance(const ProblemInstance& p,
                                                   const MetricMatrix& b) {
  CertificateInputs c;
  c.sigma_enc = sigma_encoding(p.A, p.b);
  c.psi = p.A.max_row_norm();
  c.xi = b.lambda_max() / b.lambda_min();
  c.n = p.n();
  return c;
}

CertificateReport certificate_report(const ProblemInstance& p,
                                     const MetricMatrix& b, const Vector& x,
                                     long k, const CertificateRates& rates,
                                     const CertificateInputs& inputs) {
  (void)b;
  if (!(rates.rho_bar > 0.0 && rates.rho_bar < 1.0))
    throw std::invalid_argument("certificate: rho_bar must lie in (0, 1)");
  CertificateReport rep;
  const double sigma = inputs.sigma_enc;
  rep.threshold = std::exp2(1.0 - sigma);
  rep.is_certificate = max_violation(p, x) < rep.threshold;

  // Logarithms base 2, matching the powers of 2 the bound is built from.
  rep.iteration_lower_bound =
      (4.0 * sigma - 4.0 - std::log2(static_cast<double>(inputs.n)) +
       std::log2(1.0 + rates.alpha) + std::log2(inputs.xi) +
       2.0 * std::log2(inputs.psi)) /
          std::log2(1.0 / rates.rho_bar) +
      1.0;

  const double raw =
      std::sqrt(inputs.xi * (1.0 + rates.alpha) / static_cast<double>(inputs.n)) *
      inputs.psi * std::exp2(2.0 * sigma - 2.0) *
      std::pow(rates.rho_bar, (static_cast<double>(k) - 1.0) / 2.0);
  rep.failure_prob_bound = std::clamp(raw, 0.0, 1.0);
  return rep;
}

}  // namespace asp
