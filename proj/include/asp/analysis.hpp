#pragma once

#include <functional>
#include <optional>
#include <string>

#include "asp/core.hpp"
#include "asp/rng.hpp"

namespace asp {

/// Spectral constants sandwiching the expected sketched loss:
/// mu1/2 d_B(x,X)^2 <= E[f_i(x)] <= mu2/2 d_B(x,X)^2.
struct SpectralConstants {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double hoffman_sigma = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
};

/// L1 momentum rate: the two-sequence recurrence constants and its roots,
/// with 0 <= |rho1| <= rho2 < 1 inside the admissible region.
struct MomentumRateL1 {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
  double rho1 = 0.0;
  double rho2 = 0.0;
};

/// L2 momentum rate: E[d^2_B(x_k, X)] <= rho^k (1+alpha) d0^2.
struct MomentumRateL2 {
  double alpha = 0.0;
  double rho = 0.0;
};

/// Admissible-region membership with the binding inequality on rejection.
struct RegionCheck {
  bool in_q = false;
  bool in_r = false;
  bool in_s = false;
  std::string q_violation;
  std::string r_violation;
  std::string s_violation;
};

struct CertificateInputs {
  double sigma_enc = 0.0;  // binary encoding length (>= 2)
  double psi = 0.0;        // max row 2-norm
  double xi = 1.0;         // lambda_max(B) / lambda_min(B)
  Index n = 0;

  static CertificateInputs from_instance(const ProblemInstance& p,
                                         const MetricMatrix& b);
};

struct CertificateRates {
  double rho_bar = 0.0;  // max{rho2^2, rho}, must be < 1
  double alpha = 0.0;    // 0 on the L1 route
};

struct CertificateReport {
  bool is_certificate = false;
  double threshold = 0.0;             // 2^{1 - sigma}
  double iteration_lower_bound = 0.0; // k must exceed this for the p-bound
  double failure_prob_bound = 0.0;    // clamped to [0, 1]
};

/// 1 / lambda^+_min(A^T A): the distance-to-solution constant of consistent
/// systems (smallest strictly positive eigenvalue).
double hoffman_consistent(const ConstraintMatrix& a);

/// Sampled lower estimate of sigma = sup d_B(x,X)^2 / ||[R(Ax-b)]^+||^2 over
/// infeasible x, using the exact projection oracle. Guarded to m <= 20,
/// n <= 6. `extra_points` lets callers fold in the exact ratio at probe
/// points of interest, keeping the sandwich valid there.
double hoffman_bruteforce(const ProblemInstance& p, const MetricMatrix& b,
                          const SketchSet& s, Index samples = 10000,
                          std::uint64_t seed = 0,
                          const std::vector<Vector>* extra_points = nullptr);

/// Greedy-rule constants:
/// mu1 = (1/(sigma w2)) min{1/(q-tau+1), 1/(q-s)} (s = 0 worst case when
/// absent), mu2 = min{1, (tau/(w1 q)) lmax(B^-1/2 A^T R^T R A B^-1/2)}.
SpectralConstants mu_bounds_greedy(const ProblemInstance& p,
                                   const MetricMatrix& b, const SketchSet& s,
                                   Index tau, double sigma_hoffman,
                                   std::optional<Index> zero_count = std::nullopt);

/// Capped-rule constants: mu1 convex combination, mu2 evaluated at tau = q.
SpectralConstants mu_bounds_capped(
    double theta, Index tau1, Index tau2, Index q,
    const std::function<SpectralConstants(Index)>& constants_fn);

/// mu2 = lmax(B^-1/2 A^T Z A B^-1/2), Z = sum_i p_i S_i S_i^T / w_i, for a
/// fixed selection-probability vector; always <= 1 up to roundoff.
double mu2_operator(const ProblemInstance& p, const MetricMatrix& b,
                    const SketchSet& s, const Vector& probabilities);

/// Basic rate h(delta) = 1 - (2 delta - delta^2) mu1.
double rate_basic(double delta, double mu1);

struct GammaBound {
  double boundary = 0.0;   // admissible-region boundary at this delta
  double piecewise = 0.0;  // piecewise-linear safe bound
};

/// Largest admissible momentum parameter at the given delta, plus the
/// piecewise-linear safe bound; both are < 0.5.
GammaBound momentum_gamma_max(double delta, double mu1, double mu2);

MomentumRateL1 momentum_rate_l1(double delta, double gamma, double mu1,
                                double mu2);

MomentumRateL2 momentum_rate_l2(double delta, double gamma, double zeta,
                                double mu1, double mu2);

RegionCheck region_check(double delta, double gamma,
                         std::optional<double> zeta, double mu1, double mu2);

/// Cesaro-average bound ((1-gamma)^2 d0^2 + 2 delta gamma f0) /
/// (2 delta k (2 - 2 gamma - delta)); requires 0 < delta < 2(1-gamma).
double cesaro_bound(double delta, double gamma, long k, double d0_sq,
                    double f0);

/// Binary encoding length sigma = sum ln(|a_ij|+1) + sum ln(|b_i|+1)
/// + ln(mn) + 2.
double sigma_encoding(const ConstraintMatrix& a, const Vector& b);

/// theta(x) = max_i (a_i^T x - b_i)^+.
double max_violation(const ProblemInstance& p, const Vector& x);

CertificateReport certificate_report(const ProblemInstance& p,
                                     const MetricMatrix& b, const Vector& x,
                                     long k, const CertificateRates& rates,
                                     const CertificateInputs& inputs);

/// Largest eigenvalue of a symmetric matrix: direct solve below n = 2000,
/// power iteration (tol 1e-10, <= 1e4 iterations) above.
double largest_eigenvalue_sym(const Matrix& m);

}  // namespace asp
