#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "asp/analysis.hpp"
#include "asp/instances.hpp"
#include "asp/loss.hpp"
#include "asp/sampling.hpp"
#include "asp/solver.hpp"

using namespace asp;

namespace {

Vector vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

ProblemInstance identity2() {
  return ProblemInstance(ConstraintMatrix(Matrix(Matrix::Identity(2, 2))),
                         Vector::Zero(2));
}

}  // namespace

TEST_CASE("hoffman_consistent") {
  CHECK(hoffman_consistent(ConstraintMatrix(Matrix(Matrix::Identity(2, 2)))) ==
        doctest::Approx(1.0).epsilon(1e-12));
  Matrix d(2, 2);
  d << 2, 0, 0, 1;
  CHECK(hoffman_consistent(ConstraintMatrix(d)) == doctest::Approx(1.0).epsilon(1e-12));
  Matrix r(2, 2);
  r << 1, 0, 1, 0;
  CHECK(hoffman_consistent(ConstraintMatrix(r)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("hoffman_bruteforce") {
  MetricMatrix b2 = MetricMatrix::Identity(2);
  SUBCASE("identity instance ratio is exactly 1") {
    ProblemInstance p = identity2();
    SketchSet s = SketchSet::coordinate_basis(p, b2);
    const double est = hoffman_bruteforce(p, b2, s, 500, 3);
    CHECK(est == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("single halfspace") {
    Matrix a(1, 2);
    a << 1, 0;
    ProblemInstance p(ConstraintMatrix(a), Vector::Zero(1));
    SketchSet s = SketchSet::coordinate_basis(p, b2);
    const double est = hoffman_bruteforce(p, b2, s, 500, 5);
    CHECK(est == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("lower-estimate contract against a certified bound") {
    // For B = I, coordinate sketches: d(x,X)^2 <= L_ineq^2 ||(Ax-b)^+||^2
    // where the sampled ratios can never exceed the true supremum; on the
    // identity instance that supremum is 1.
    ProblemInstance p = identity2();
    SketchSet s = SketchSet::coordinate_basis(p, b2);
    const double est = hoffman_bruteforce(p, b2, s, 2000, 11);
    CHECK(est <= 1.0 + 1e-9);
  }
  SUBCASE("guard") {
    GeneratedInstance gi = gen_gaussian(25, 3, 1);
    SketchSet s = SketchSet::coordinate_basis(
        gi.problem, MetricMatrix::Identity(3));
    CHECK_THROWS_AS(
        hoffman_bruteforce(gi.problem, MetricMatrix::Identity(3), s, 10, 0),
        std::invalid_argument);
  }
}

TEST_CASE("mu_bounds_greedy") {
  ProblemInstance p = identity2();
  MetricMatrix b = MetricMatrix::Identity(2);
  SketchSet s = SketchSet::coordinate_basis(p, b);

  SUBCASE("worst case (s absent) gives 1/(q sigma w2)") {
    for (Index tau = 1; tau <= 2; ++tau) {
      SpectralConstants c = mu_bounds_greedy(p, b, s, tau, 1.0);
      CHECK(c.mu1 == doctest::Approx(0.5).epsilon(1e-14));
    }
  }

  SUBCASE("pinned sandwich equality at x = (1, -1)") {
    // s(x) = 1 zero entry, tau = 1, sigma = 1: mu1 = min{1/2, 1} / 1 = 1/2.
    SpectralConstants c = mu_bounds_greedy(p, b, s, 1, 1.0, 1);
    CHECK(c.mu1 == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(c.mu2 == doctest::Approx(0.5).epsilon(1e-12));
    Vector x = vec({1, -1});
    const double d2 = exact_distance_sq_smallscale(p, b, x);
    CHECK(d2 == doctest::Approx(1.0).epsilon(1e-12));
    const double e = expected_loss_greedy(p, b, s, x, 1);
    CHECK(c.mu1 / 2.0 * d2 <= e + 1e-12);
    CHECK(e <= c.mu2 / 2.0 * d2 + 1e-12);
    CHECK(e == doctest::Approx(0.25).epsilon(1e-14));
  }

  SUBCASE("mskm form: normalized rows give mu2 = min(1, tau/m lmax(AtA))") {
    GeneratedInstance gi = gen_gaussian(8, 3, 51);
    Matrix a = gi.problem.A.to_dense();
    for (Index i = 0; i < a.rows(); ++i) a.row(i).normalize();
    ProblemInstance pn(ConstraintMatrix(a), gi.problem.b);
    MetricMatrix bi = MetricMatrix::Identity(3);
    SketchSet sn = SketchSet::coordinate_basis(pn, bi);
    const double lmax =
        Eigen::SelfAdjointEigenSolver<Matrix>(a.transpose() * a)
            .eigenvalues()
            .maxCoeff();
    for (Index tau : {Index{1}, Index{4}, Index{8}}) {
      SpectralConstants c = mu_bounds_greedy(pn, bi, sn, tau, 2.0);
      CHECK(c.mu2 == doctest::Approx(std::min(1.0, tau / 8.0 * lmax)).epsilon(1e-10));
      CHECK(c.mu1 == doctest::Approx(
                         std::min(1.0 / (8.0 - tau + 1.0), 1.0 / 8.0) / 2.0)
                         .epsilon(1e-12));
    }
  }
}

TEST_CASE("mu_bounds_capped") {
  auto fn = [](Index tau) {
    SpectralConstants c;
    c.mu1 = tau == 1 ? 0.2 : (tau == 3 ? 0.4 : 0.1);
    c.mu2 = tau == 5 ? 0.9 : 0.5;
    return c;
  };
  CHECK(mu_bounds_capped(1.0, 3, 1, 5, fn).mu1 == doctest::Approx(0.4));
  CHECK(mu_bounds_capped(0.0, 3, 1, 5, fn).mu1 == doctest::Approx(0.2));
  CHECK(mu_bounds_capped(0.5, 3, 1, 5, fn).mu1 == doctest::Approx(0.3));
  CHECK(mu_bounds_capped(0.5, 3, 1, 5, fn).mu2 == doctest::Approx(0.9));
}

TEST_CASE("mu2_operator") {
  ProblemInstance p = identity2();
  MetricMatrix b = MetricMatrix::Identity(2);
  SketchSet s = SketchSet::coordinate_basis(p, b);
  CHECK(mu2_operator(p, b, s, vec({0.5, 0.5})) == doctest::Approx(0.5).epsilon(1e-12));

  SUBCASE("single sketch gives exactly 1") {
    Matrix a(1, 2);
    a << 3, 4;
    ProblemInstance p1(ConstraintMatrix(a), Vector::Zero(1));
    SketchSet s1 = SketchSet::coordinate_basis(p1, b);
    CHECK(mu2_operator(p1, b, s1, vec({1.0})) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("never exceeds 1") {
    for (std::uint64_t seed : {3u, 9u, 27u}) {
      GeneratedInstance gi = gen_gaussian(10, 4, seed);
      MetricMatrix bi = MetricMatrix::Identity(4);
      SketchSet si = SketchSet::coordinate_basis(gi.problem, bi);
      Vector prob = Vector::Constant(10, 0.1);
      CHECK(mu2_operator(gi.problem, bi, si, prob) <= 1.0 + 1e-9);
      // weighted probabilities too
      Vector w = si.norms() / si.norms().sum();
      CHECK(mu2_operator(gi.problem, bi, si, w) <= 1.0 + 1e-9);
    }
  }

  SUBCASE("probability validation") {
    CHECK_THROWS_AS(mu2_operator(p, b, s, vec({0.7, 0.7})), std::invalid_argument);
    CHECK_THROWS_AS(mu2_operator(p, b, s, vec({1.5, -0.5})), std::invalid_argument);
  }
}

TEST_CASE("rate_basic") {
  // parabola in delta with its minimum at delta = 1
  for (double mu : {0.1, 0.5, 0.9}) {
    CHECK(rate_basic(1.0, mu) < rate_basic(0.5, mu));
    CHECK(rate_basic(1.0, mu) < rate_basic(1.5, mu));
    CHECK(rate_basic(0.5, mu) == doctest::Approx(rate_basic(1.5, mu)).epsilon(1e-14));
  }
  CHECK(rate_basic(1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rate_basic(1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rate_basic(1e-9, 0.5) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(rate_basic(2.0 - 1e-9, 0.5) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK_THROWS_AS(rate_basic(0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(rate_basic(2.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(rate_basic(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("momentum_gamma_max") {
  SUBCASE("small-delta limit approaches mu1/(mu1+sqrt(mu2))") {
    const double g = momentum_gamma_max(1e-9, 1.0, 1.0).boundary;
    CHECK(g == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("always below one half") {
    for (double mu1 : {0.05, 0.3, 0.9}) {
      for (double mu2 : {0.3, 0.6, 1.0}) {
        if (mu1 > mu2) continue;
        for (double delta : {0.1, 0.5, 1.0, 1.5, 1.9}) {
          GammaBound g = momentum_gamma_max(delta, mu1, mu2);
          CHECK(g.boundary < 0.5);
          CHECK(g.piecewise <= g.boundary + 1e-12);
        }
      }
    }
  }
  SUBCASE("pinned value at delta 1, mu 0.5/0.5") {
    const double g = momentum_gamma_max(1.0, 0.5, 0.5).boundary;
    const double expect = (1.0 - std::sqrt(0.5)) / 1.0;
    CHECK(g == doctest::Approx(expect).epsilon(1e-12));
    CHECK(g == doctest::Approx(0.29289321881).epsilon(1e-9));
  }
}

TEST_CASE("momentum_rate_l1") {
  SUBCASE("gamma = 0 collapses to sqrt(h)") {
    MomentumRateL1 r = momentum_rate_l1(1.0, 0.0, 0.5, 0.5);
    CHECK(r.rho2 == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(r.rho1 == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("rho2 equals the iteration-matrix spectral radius") {
    const double delta = 1.0, gamma = 0.1, mu1 = 0.5, mu2 = 0.5;
    MomentumRateL1 r = momentum_rate_l1(delta, gamma, mu1, mu2);
    Matrix m(2, 2);
    const double sh = std::sqrt(rate_basic(delta, mu1));
    m << sh, gamma, delta * std::sqrt(mu2), gamma;
    Eigen::EigenSolver<Matrix> es(m);
    const double spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(std::abs(r.rho2 - spectral_radius) <= 1e-10);
    CHECK(r.gamma3 >= 0.0);
    CHECK(std::abs(r.rho1) <= r.rho2);
    CHECK(r.rho2 < 1.0);
  }

  SUBCASE("contraction condition holds for accepted inputs") {
    Rng rng(17);
    int accepted = 0;
    while (accepted < 50) {
      const double delta = 0.05 + 1.9 * rng.uniform01();
      const double mu1 = 0.02 + 0.9 * rng.uniform01();
      const double mu2 = std::min(1.0, mu1 + (1.0 - mu1) * rng.uniform01());
      const double bound = momentum_gamma_max(delta, mu1, mu2).boundary;
      const double gamma = bound * rng.uniform01();
      MomentumRateL1 r{};
      try {
        r = momentum_rate_l1(delta, gamma, mu1, mu2);
      } catch (const std::invalid_argument&) {
        continue;
      }
      ++accepted;
      const double pi1 = std::sqrt(rate_basic(delta, mu1));
      // Pi1 + Pi4 < 1 + min{1, Pi1 Pi4 - Pi2 Pi3}
      const double lhs = pi1 + gamma;
      const double rhs = 1.0 + std::min(1.0, pi1 * gamma -
                                                 gamma * delta * std::sqrt(mu2));
      CHECK(lhs < rhs + 1e-12);
      CHECK(r.rho2 < 1.0);
    }
  }

  SUBCASE("rejects outside Q with the binding inequality") {
    CHECK_THROWS_WITH_AS(momentum_rate_l1(1.0, 0.6, 0.5, 0.5),
                         doctest::Contains("not in Q"), std::invalid_argument);
  }
}

TEST_CASE("momentum_rate_l2") {
  SUBCASE("gamma = 0 with small zeta approaches the basic rate") {
    // beta3 = 0, so rho = beta1 + beta2 = 1 - delta mu1 (2 - delta(1+zeta)).
    const double delta = 1.0, mu1 = 0.25, mu2 = 0.5, zeta = 1e-9;
    MomentumRateL2 r = momentum_rate_l2(delta, 0.0, zeta, mu1, mu2);
    CHECK(r.alpha == 0.0);
    CHECK(r.rho == doctest::Approx(rate_basic(delta, mu1)).epsilon(1e-6));
  }

  SUBCASE("rho at least beta1 + beta2, rho < 1, alpha >= 0") {
    Rng rng(23);
    int accepted = 0;
    while (accepted < 50) {
      const double delta = 0.05 + 1.9 * rng.uniform01();
      const double mu1 = 0.02 + 0.5 * rng.uniform01();
      const double mu2 = std::min(1.0, mu1 + rng.uniform01());
      const double zeta = 0.1 + 3.0 * rng.uniform01();
      const double gamma = 0.4 * rng.uniform01() * zeta / (1.0 + zeta);
      RegionCheck rc = region_check(delta, gamma, zeta, mu1, mu2);
      if (!(rc.in_r && rc.in_s)) continue;
      ++accepted;
      MomentumRateL2 r = momentum_rate_l2(delta, gamma, zeta, mu1, mu2);
      const double beta1 =
          1.0 + gamma + delta * mu1 * ((1.0 + zeta) * (delta - gamma) - 2.0);
      const double beta2 = gamma * (delta * (1.0 + zeta) * mu2 - 1.0);
      CHECK(r.rho >= beta1 + beta2 - 1e-12);
      CHECK(r.rho < 1.0);
      CHECK(r.alpha >= 0.0);
    }
  }

  SUBCASE("rejects outside R or S with the binding set named") {
    CHECK_THROWS_WITH_AS(momentum_rate_l2(1.0, 0.6, 1.0, 0.25, 0.5),
                         doctest::Contains("not in R"), std::invalid_argument);
  }
}

TEST_CASE("region_check") {
  CHECK(region_check(1.0, 0.0, std::nullopt, 0.5, 0.5).in_q);
  CHECK_FALSE(region_check(1.0, 0.5, std::nullopt, 0.5, 0.5).in_q);
  CHECK_FALSE(region_check(1.0, 0.55, std::nullopt, 0.9, 1.0).in_q);

  SUBCASE("sweep matches the independent inequality") {
    Rng rng(31);
    for (int t = 0; t < 10000; ++t) {
      const double delta = 0.05 + 1.9 * rng.uniform01();
      const double gamma = 0.6 * rng.uniform01();
      const double mu1 = 0.05 + 0.9 * rng.uniform01();
      const double mu2 = std::min(1.0, mu1 + (1.0 - mu1) * rng.uniform01());
      const double h = 1.0 - (2.0 * delta - delta * delta) * mu1;
      const double sh = std::sqrt(h);
      const bool lhs = gamma * (1.0 - sh + delta * std::sqrt(mu2)) < 1.0 - sh;
      CHECK(region_check(delta, gamma, std::nullopt, mu1, mu2).in_q == lhs);
    }
  }

  SUBCASE("r and s memberships evaluate their inequalities") {
    RegionCheck rc = region_check(0.5, 0.1, 1.0, 0.25, 0.5);
    CHECK(rc.in_r);  // 0.1 < 1/2
    // S: gamma mu2/mu1 = 0.2 < 2/2 - 0.5 + 0.1 = 0.6 <= 1.1/(0.5*0.25*2) = 2.2
    CHECK(rc.in_s);
    CHECK_FALSE(region_check(0.5, 0.6, 1.0, 0.25, 0.5).in_r);
    CHECK_FALSE(region_check(1.8, 0.01, 1.0, 0.25, 0.9).in_s);
  }
}

TEST_CASE("cesaro_bound") {
  SUBCASE("gamma 0 reduces to d0^2/(2 delta k (2 - delta))") {
    CHECK(cesaro_bound(1.0, 0.0, 10, 4.0, 99.0) ==
          doctest::Approx(4.0 / (2.0 * 10 * 1.0)).epsilon(1e-15));
  }
  SUBCASE("doubling k halves the bound exactly") {
    const double b1 = cesaro_bound(0.7, 0.2, 50, 3.0, 1.5);
    const double b2 = cesaro_bound(0.7, 0.2, 100, 3.0, 1.5);
    CHECK(b2 == b1 / 2.0);
  }
  SUBCASE("pinned hand value") {
    CHECK(cesaro_bound(1.0, 0.25, 100, 4.0, 1.0) ==
          doctest::Approx(0.0275).epsilon(1e-14));
  }
  CHECK_THROWS_AS(cesaro_bound(1.6, 0.25, 10, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("sigma_encoding") {
  ProblemInstance p = identity2();
  const double sigma = sigma_encoding(p.A, p.b);
  CHECK(sigma == doctest::Approx(4.0 * std::log(2.0) + 2.0).epsilon(1e-14));

  SUBCASE("monotone in the entries") {
    Matrix a2(2, 2);
    a2 << 2, 0, 0, 2;
    const double s2 = sigma_encoding(ConstraintMatrix(a2), Vector::Zero(2));
    CHECK(s2 > sigma);
  }
}

TEST_CASE("max_violation") {
  ProblemInstance p = identity2();
  CHECK(max_violation(p, vec({-1, -1})) == 0.0);
  CHECK(max_violation(p, vec({1, -1})) == 1.0);
  CHECK(max_violation(p, vec({3, 2})) == 3.0);
}

TEST_CASE("certificate_report") {
  ProblemInstance p = identity2();
  MetricMatrix b = MetricMatrix::Identity(2);
  CertificateInputs inputs = CertificateInputs::from_instance(p, b);
  CHECK(inputs.psi == 1.0);
  CHECK(inputs.xi == 1.0);
  CertificateRates rates{0.25, 0.0};

  SUBCASE("identity metric reduces to the xi = 1 form") {
    CertificateReport rep = certificate_report(p, b, vec({0, 0}), 10, rates, inputs);
    const double sigma = inputs.sigma_enc;
    const double expect = std::sqrt(1.0 / 2.0) * 1.0 *
                          std::exp2(2.0 * sigma - 2.0) *
                          std::pow(0.25, (10.0 - 1.0) / 2.0);
    CHECK(rep.failure_prob_bound ==
          doctest::Approx(std::min(1.0, expect)).epsilon(1e-12));
    CHECK(rep.is_certificate);  // theta(0) = 0 < 2^{1-sigma}
  }

  SUBCASE("failure bound decreases in k") {
    double prev = 2.0;
    for (long k : {5, 10, 20, 40, 80}) {
      CertificateReport rep = certificate_report(p, b, vec({5, 5}), k, rates, inputs);
      CHECK(rep.failure_prob_bound <= prev + 1e-15);
      prev = rep.failure_prob_bound;
      CHECK_FALSE(rep.is_certificate);  // theta = 5 is far above threshold
    }
  }

  SUBCASE("rho_bar >= 1 rejected") {
    CHECK_THROWS_AS(
        certificate_report(p, b, vec({0, 0}), 10, CertificateRates{1.0, 0.0}, inputs),
        std::invalid_argument);
  }
}

TEST_CASE("infeasible rational system keeps max violation above 2^(1-sigma)") {
  // {x <= 0, -x <= -1}
  Matrix a(2, 1);
  a << 1, -1;
  ProblemInstance p(ConstraintMatrix(a), vec({0, -1}));
  MetricMatrix b = MetricMatrix::Identity(1);
  SketchSet s = SketchSet::coordinate_basis(p, b);
  const double sigma = sigma_encoding(p.A, p.b);
  const double floor = 2.0 / std::exp2(sigma);

  SolverConfig cfg;
  cfg.rule = SamplingRule::Greedy(2);
  cfg.gamma = 0.2;
  cfg.seed = 3;
  cfg.max_iters = 3000;
  cfg.keep_iterates = true;
  SolveReport rep = solve(p, b, s, cfg, vec({0.0}));
  CHECK(rep.terminated_by == Termination::kMaxIters);
  for (const Vector& x : rep.iterates) CHECK(max_violation(p, x) >= floor);
}

TEST_CASE("largest_eigenvalue_sym power-iteration path") {
  // Exercise the > 2000 branch cheaply via a diagonal matrix.
  Matrix m = Matrix::Zero(2100, 2100);
  for (Index i = 0; i < 2100; ++i) m(i, i) = static_cast<double>(i % 97);
  CHECK(largest_eigenvalue_sym(m) == doctest::Approx(96.0).epsilon(1e-8));
}
