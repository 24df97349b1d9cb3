#include <doctest.h>

#include <cmath>

#include "asp/core.hpp"
#include "asp/instances.hpp"
#include "asp/rng.hpp"

using namespace asp;

namespace {

ProblemInstance identity2() {
  Matrix a = Matrix::Identity(2, 2);
  return ProblemInstance(ConstraintMatrix(a), Vector::Zero(2));
}

Vector vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("positive_part componentwise") {
  CHECK(positive_part(vec({1, -1, 0})) == vec({1, 0, 0}));
  CHECK(positive_part(vec({0, 0})) == vec({0, 0}));
  CHECK(positive_part(vec({-3.5, 2.25})) == vec({0, 2.25}));
}

TEST_CASE("b_norm across variants") {
  MetricMatrix id = MetricMatrix::Identity(2);
  CHECK(b_norm(id, vec({3, 4})) == doctest::Approx(5.0).epsilon(1e-14));

  MetricMatrix diag = MetricMatrix::Diagonal(vec({4, 1}));
  CHECK(b_norm(diag, vec({1, 1})) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));

  Matrix m(2, 2);
  m << 2, 0, 0, 2;
  MetricMatrix dense = MetricMatrix::DenseSpd(m);
  CHECK(b_norm(dense, vec({1, 0})) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  CHECK(b_norm(id, Vector::Zero(2)) == 0.0);
  CHECK_THROWS_AS(b_norm(id, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("apply_B_inverse") {
  MetricMatrix id = MetricMatrix::Identity(2);
  CHECK(apply_b_inverse(id, vec({1, 2})) == vec({1, 2}));

  MetricMatrix diag = MetricMatrix::Diagonal(vec({4, 1}));
  CHECK(apply_b_inverse(diag, vec({4, 3})) == vec({1, 3}));

  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  MetricMatrix dense = MetricMatrix::DenseSpd(m);
  Vector w = apply_b_inverse(dense, vec({3, 3}));
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metric validation") {
  CHECK_THROWS_AS(MetricMatrix::Diagonal(vec({1, 0})), std::invalid_argument);
  CHECK_THROWS_AS(MetricMatrix::Diagonal(vec({1, -2})), std::invalid_argument);
  Matrix notspd(2, 2);
  notspd << 1, 2, 2, 1;  // eigenvalues 3, -1
  CHECK_THROWS_AS(MetricMatrix::DenseSpd(notspd), std::invalid_argument);
  Matrix notsym(2, 2);
  notsym << 1, 2, 0, 1;
  CHECK_THROWS_AS(MetricMatrix::DenseSpd(notsym), std::invalid_argument);
}

TEST_CASE("metric apply/apply_inverse round trip") {
  Rng rng(7);
  Matrix g(3, 3);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) g(i, j) = rng.normal();
  Matrix spd = g.transpose() * g + 3.0 * Matrix::Identity(3, 3);
  std::vector<MetricMatrix> variants;
  variants.push_back(MetricMatrix::Identity(3));
  variants.push_back(MetricMatrix::Diagonal(vec({0.5, 2, 7})));
  variants.push_back(MetricMatrix::DenseSpd(spd));
  for (const auto& b : variants) {
    for (int t = 0; t < 20; ++t) {
      Vector v(3);
      for (Index j = 0; j < 3; ++j) v[j] = rng.normal();
      Vector back = b.apply_inverse(b.apply(v));
      CHECK((back - v).norm() <= 1e-10 * std::max(1.0, v.norm()));
      // ||v||_B^2 consistency with the inner product.
      const double nb = b.norm(v);
      CHECK(nb * nb == doctest::Approx(b.inner(v, v)).epsilon(1e-10));
    }
  }
}

TEST_CASE("problem validation") {
  Matrix zero_row(2, 2);
  zero_row << 1, 2, 0, 0;
  CHECK_THROWS_AS(ProblemInstance(ConstraintMatrix(zero_row), Vector::Zero(2)),
                  std::invalid_argument);
  Matrix ok = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(ProblemInstance(ConstraintMatrix(ok), Vector::Zero(3)),
                  std::invalid_argument);
}

TEST_CASE("dense and sparse storage agree") {
  Rng rng(3);
  Matrix a(5, 3);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 3; ++j)
      a(i, j) = (rng.uniform01() < 0.5) ? 0.0 : rng.normal();
  a(2, 0) = 1.0;  // no zero row
  a(4, 2) = 1.0;
  ConstraintMatrix dense(a);
  ConstraintMatrix sparse{SparseMat(a.sparseView())};
  Vector x(3);
  for (Index j = 0; j < 3; ++j) x[j] = rng.normal();
  Vector rd(5), rs(5);
  dense.multiply(x, rd);
  sparse.multiply(x, rs);
  CHECK(rd == rs);
  for (Index i = 0; i < 5; ++i) {
    CHECK(dense.row_dot(i, x) == doctest::Approx(sparse.row_dot(i, x)).epsilon(1e-15));
    CHECK(dense.row_squared_norm(i) ==
          doctest::Approx(sparse.row_squared_norm(i)).epsilon(1e-15));
  }
}

TEST_CASE("precompute_sketch_norms") {
  SUBCASE("identity instance, coordinate sketches") {
    ProblemInstance p = identity2();
    MetricMatrix b = MetricMatrix::Identity(2);
    SketchSet s = SketchSet::coordinate_basis(p, b);
    CHECK(s.norms() == vec({1, 1}));
    CHECK(s.omega_min() == 1.0);
    CHECK(s.omega_max() == 1.0);
  }
  SUBCASE("row scaling shows up in the norms") {
    Matrix a(2, 2);
    a << 2, 0, 0, 1;
    ProblemInstance p(ConstraintMatrix(a), Vector::Zero(2));
    MetricMatrix b = MetricMatrix::Identity(2);
    SketchSet s = SketchSet::coordinate_basis(p, b);
    CHECK(s.norms() == vec({4, 1}));
  }
  SUBCASE("diagonal metric divides") {
    ProblemInstance p = identity2();
    MetricMatrix b = MetricMatrix::Diagonal(vec({4, 1}));
    SketchSet s = SketchSet::coordinate_basis(p, b);
    CHECK(s.norms() == vec({0.25, 1}));
  }
  SUBCASE("explicit sketches equal coordinate ones for the basis") {
    ProblemInstance p = identity2();
    MetricMatrix b = MetricMatrix::Identity(2);
    std::vector<Vector> basis = {vec({1, 0}), vec({0, 1})};
    SketchSet s = precompute_sketch_norms(p, b, basis);
    CHECK(s.norms() == vec({1, 1}));
  }
  SUBCASE("degenerate sketch rejected") {
    // Rows of A cancel against the sketch: A^T S = 0.
    Matrix a(2, 1);
    a << 1, -1;
    ProblemInstance p(ConstraintMatrix(a), Vector::Zero(2));
    MetricMatrix b = MetricMatrix::Identity(1);
    std::vector<Vector> bad = {vec({1, 1})};
    CHECK_THROWS_AS(precompute_sketch_norms(p, b, bad), std::invalid_argument);
  }
  SUBCASE("negative sketch rejected") {
    ProblemInstance p = identity2();
    MetricMatrix b = MetricMatrix::Identity(2);
    std::vector<Vector> bad = {vec({1, -1})};
    CHECK_THROWS_AS(precompute_sketch_norms(p, b, bad), std::invalid_argument);
  }
  SUBCASE("omega bounds bracket every norm") {
    GeneratedInstance gi = gen_gaussian(9, 4, 42);
    MetricMatrix b = MetricMatrix::Identity(4);
    SketchSet s = SketchSet::coordinate_basis(gi.problem, b);
    for (Index i = 0; i < s.q(); ++i) {
      CHECK(s.norms()[i] >= s.omega_min());
      CHECK(s.norms()[i] <= s.omega_max());
    }
  }
}

TEST_CASE("exact projection oracle") {
  MetricMatrix id = MetricMatrix::Identity(2);
  SUBCASE("orthant projection") {
    ProblemInstance p = identity2();
    CHECK(exact_projection_smallscale(p, id, vec({1, -1})) == vec({0, -1}));
    CHECK(exact_projection_smallscale(p, id, vec({-2, -3})) == vec({-2, -3}));
  }
  SUBCASE("halfspace projection") {
    Matrix a(1, 2);
    a << 1, 1;
    ProblemInstance p(ConstraintMatrix(a), Vector::Zero(1));
    Vector y = exact_projection_smallscale(p, id, vec({1, 1}));
    CHECK(y[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("guard on m") {
    Matrix a = Matrix::Identity(21, 21);
    ProblemInstance p(ConstraintMatrix(a), Vector::Zero(21));
    MetricMatrix b = MetricMatrix::Identity(21);
    CHECK_THROWS_AS(exact_projection_smallscale(p, b, Vector::Ones(21)),
                    std::invalid_argument);
  }
  SUBCASE("infeasible system reported") {
    Matrix a(2, 1);
    a << 1, -1;
    Vector b = vec({0, -1});  // x <= 0 and x >= 1
    ProblemInstance p(ConstraintMatrix(a), b);
    MetricMatrix m1 = MetricMatrix::Identity(1);
    CHECK_THROWS_AS(exact_projection_smallscale(p, m1, vec({0.5})),
                    std::runtime_error);
  }
  SUBCASE("idempotent and closest among feasible points") {
    Rng rng(5);
    GeneratedInstance gi = gen_gaussian(8, 3, 17);
    MetricMatrix b = MetricMatrix::Diagonal(vec({1.0, 3.0, 0.5}));
    for (int t = 0; t < 25; ++t) {
      Vector x(3);
      for (Index j = 0; j < 3; ++j) x[j] = 4.0 * rng.normal();
      Vector y = exact_projection_smallscale(gi.problem, b, x);
      for (Index i = 0; i < gi.problem.m(); ++i)
        CHECK(gi.problem.A.row_dot(i, y) <= gi.problem.b[i] + 1e-9);
      Vector y2 = exact_projection_smallscale(gi.problem, b, y);
      CHECK((y2 - y).norm() <= 1e-9);
      // No feasible point is closer; the generator's point in particular.
      CHECK(b.norm(x - y) <= b.norm(x - gi.x_int) + 1e-12);
    }
  }
}

TEST_CASE("instances: generation invariants") {
  SUBCASE("gaussian feasibility by construction") {
    GeneratedInstance gi = gen_gaussian(40, 7, 123);
    Vector r(gi.problem.m());
    gi.problem.residual_into(gi.x_int, r);
    CHECK((r.array() <= 0.0).all());
  }
  SUBCASE("deterministic per seed, distinct across seeds") {
    GeneratedInstance a = gen_gaussian(6, 3, 9);
    GeneratedInstance b = gen_gaussian(6, 3, 9);
    GeneratedInstance c = gen_gaussian(6, 3, 10);
    CHECK(a.problem.A.to_dense() == b.problem.A.to_dense());
    CHECK(a.problem.b == b.problem.b);
    CHECK(a.x_int == b.x_int);
    CHECK(a.problem.A.to_dense() != c.problem.A.to_dense());
  }
  SUBCASE("pd gaussian is exactly symmetric and SPD") {
    GeneratedInstance gi = gen_pd_gaussian(12, 77);
    Matrix a = gi.problem.A.to_dense();
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_NOTHROW(MetricMatrix::DenseSpd(a));
  }
}
