#include "asp/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace asp {

Vector positive_part(const Vector& v) { return v.cwiseMax(0.0); }

ConstraintMatrix::ConstraintMatrix(Matrix dense)
    : rows_(dense.rows()), cols_(dense.cols()), dense_(std::move(dense)) {}

ConstraintMatrix::ConstraintMatrix(SparseMat sparse)
    : rows_(sparse.rows()), cols_(sparse.cols()) {
  sparse.makeCompressed();
  sparse_ = std::move(sparse);
}

double ConstraintMatrix::row_dot(Index i, const Vector& x) const {
  if (dense_) return dense_->row(i).dot(x);
  double acc = 0.0;
  for (SparseMat::InnerIterator it(*sparse_, i); it; ++it)
    acc += it.value() * x[it.col()];
  return acc;
}

double ConstraintMatrix::row_squared_norm(Index i) const {
  if (dense_) return dense_->row(i).squaredNorm();
  double acc = 0.0;
  for (SparseMat::InnerIterator it(*sparse_, i); it; ++it)
    acc += it.value() * it.value();
  return acc;
}

Vector ConstraintMatrix::row(Index i) const {
  if (dense_) return dense_->row(i).transpose();
  Vector r = Vector::Zero(cols_);
  for (SparseMat::InnerIterator it(*sparse_, i); it; ++it)
    r[it.col()] = it.value();
  return r;
}

void ConstraintMatrix::add_scaled_row(Vector& x, Index i, double s) const {
  if (dense_) {
    x.noalias() += s * dense_->row(i).transpose();
    return;
  }
  for (SparseMat::InnerIterator it(*sparse_, i); it; ++it)
    x[it.col()] += s * it.value();
}

void ConstraintMatrix::multiply(const Vector& x, Vector& out) const {
  if (dense_)
    out.noalias() = (*dense_) * x;
  else
    out = (*sparse_) * x;
}

void ConstraintMatrix::transpose_multiply(const Vector& y, Vector& out) const {
  if (dense_)
    out.noalias() = dense_->transpose() * y;
  else
    out = sparse_->transpose() * y;
}

Matrix ConstraintMatrix::to_dense() const {
  if (dense_) return *dense_;
  return Matrix(*sparse_);
}

double ConstraintMatrix::max_row_norm() const {
  double best = 0.0;
  for (Index i = 0; i < rows_; ++i)
    best = std::max(best, std::sqrt(row_squared_norm(i)));
  return best;
}

bool ConstraintMatrix::has_zero_row() const {
  for (Index i = 0; i < rows_; ++i)
    if (row_squared_norm(i) == 0.0) return true;
  return false;
}

ProblemInstance::ProblemInstance(ConstraintMatrix a, Vector rhs)
    : A(std::move(a)), b(std::move(rhs)) {
  if (A.rows() < 1 || A.cols() < 1)
    throw std::invalid_argument("problem: A must be at least 1x1");
  if (b.size() != A.rows())
    throw std::invalid_argument("problem: length of b does not match rows of A");
  if (A.has_zero_row())
    throw std::invalid_argument("problem: A has a zero row");
}

void ProblemInstance::residual_into(const Vector& x, Vector& out) const {
  A.multiply(x, out);
  out -= b;
}

double ProblemInstance::positive_residual_norm(const Vector& x) const {
  Vector r(m());
  residual_into(x, r);
  double acc = 0.0;
  for (Index i = 0; i < r.size(); ++i)
    if (r[i] > 0.0) acc += r[i] * r[i];
  return std::sqrt(acc);
}

MetricMatrix MetricMatrix::Identity(Index n) {
  if (n < 1) throw std::invalid_argument("metric: dimension must be positive");
  return MetricMatrix(Kind::kIdentity, n);
}

MetricMatrix MetricMatrix::Diagonal(Vector d) {
  if (d.size() < 1 || (d.array() <= 0.0).any())
    throw std::invalid_argument("metric: diagonal entries must be positive");
  MetricMatrix b(Kind::kDiagonal, d.size());
  b.lambda_min_ = d.minCoeff();
  b.lambda_max_ = d.maxCoeff();
  b.diag_ = std::move(d);
  return b;
}

MetricMatrix MetricMatrix::DenseSpd(Matrix m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("metric: matrix must be square");
  const double scale = m.cwiseAbs().maxCoeff();
  if (!((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(scale, 1.0)))
    throw std::invalid_argument("metric: matrix is not symmetric");
  MetricMatrix b(Kind::kDenseSpd, m.rows());
  b.llt_.compute(m);
  if (b.llt_.info() != Eigen::Success)
    throw std::invalid_argument("metric: matrix is not positive definite");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  b.lambda_min_ = es.eigenvalues().minCoeff();
  b.lambda_max_ = es.eigenvalues().maxCoeff();
  if (b.lambda_min_ <= 0.0)
    throw std::invalid_argument("metric: matrix is not positive definite");
  b.dense_ = std::move(m);
  return b;
}

Vector MetricMatrix::apply(const Vector& v) const {
  if (v.size() != n_) throw std::invalid_argument("metric: dimension mismatch");
  switch (kind_) {
    case Kind::kIdentity:
      return v;
    case Kind::kDiagonal:
      return diag_.cwiseProduct(v);
    case Kind::kDenseSpd:
      return dense_ * v;
  }
  return v;
}

Vector MetricMatrix::apply_inverse(const Vector& v) const {
  Vector out(n_);
  apply_inverse_into(v, out);
  return out;
}

void MetricMatrix::apply_inverse_into(const Vector& v, Vector& out) const {
  if (v.size() != n_) throw std::invalid_argument("metric: dimension mismatch");
  switch (kind_) {
    case Kind::kIdentity:
      out = v;
      return;
    case Kind::kDiagonal:
      out = v.cwiseQuotient(diag_);
      return;
    case Kind::kDenseSpd:
      out = llt_.solve(v);
      return;
  }
}

double MetricMatrix::norm(const Vector& v) const {
  if (v.size() != n_) throw std::invalid_argument("metric: dimension mismatch");
  switch (kind_) {
    case Kind::kIdentity:
      return v.norm();
    case Kind::kDiagonal:
      return std::sqrt(v.cwiseProduct(diag_).dot(v));
    case Kind::kDenseSpd: {
      // ||L^T v|| avoids cancellation in v^T B v.
      Vector w = llt_.matrixL().transpose() * v;
      return w.norm();
    }
  }
  return 0.0;
}

double MetricMatrix::inner(const Vector& u, const Vector& v) const {
  return u.dot(apply(v));
}

double MetricMatrix::lambda_min() const { return lambda_min_; }
double MetricMatrix::lambda_max() const { return lambda_max_; }

Matrix MetricMatrix::whiten_sym(const Matrix& m) const {
  switch (kind_) {
    case Kind::kIdentity:
      return m;
    case Kind::kDiagonal: {
      Vector s = diag_.cwiseSqrt().cwiseInverse();
      return s.asDiagonal() * m * s.asDiagonal();
    }
    case Kind::kDenseSpd: {
      Matrix t = llt_.matrixL().solve(m);
      return llt_.matrixL().solve(t.transpose());
    }
  }
  return m;
}

double b_norm(const MetricMatrix& b, const Vector& v) { return b.norm(v); }

Vector apply_b_inverse(const MetricMatrix& b, const Vector& v) {
  return b.apply_inverse(v);
}

namespace {

Vector compute_norms_coordinate(const ProblemInstance& p,
                                const MetricMatrix& b) {
  const Index m = p.m();
  Vector norms(m);
  switch (b.kind()) {
    case MetricMatrix::Kind::kIdentity:
      for (Index i = 0; i < m; ++i) norms[i] = p.A.row_squared_norm(i);
      break;
    case MetricMatrix::Kind::kDiagonal:
      for (Index i = 0; i < m; ++i) {
        Vector r = p.A.row(i);
        norms[i] = r.cwiseQuotient(b.diagonal()).dot(r);
      }
      break;
    case MetricMatrix::Kind::kDenseSpd:
      for (Index i = 0; i < m; ++i) {
        Vector r = p.A.row(i);
        norms[i] = b.apply_inverse(r).dot(r);
      }
      break;
  }
  return norms;
}

void finalize_norms(SketchSet::Kind kind, Vector& norms, double& omega_min,
                    double& omega_max) {
  for (Index i = 0; i < norms.size(); ++i) {
    if (!(norms[i] > 0.0))
      throw std::invalid_argument(
          "sketch: degenerate sketch with A^T S_i = 0 (index " +
          std::to_string(i) + ")");
  }
  omega_min = norms.minCoeff();
  omega_max = norms.maxCoeff();
  (void)kind;
}

}  // namespace

SketchSet SketchSet::coordinate_basis(const ProblemInstance& p,
                                      const MetricMatrix& b) {
  if (b.dim() != p.n())
    throw std::invalid_argument("sketch: metric dimension mismatch");
  SketchSet s;
  s.kind_ = Kind::kCoordinateBasis;
  s.q_ = p.m();
  s.norms_ = compute_norms_coordinate(p, b);
  finalize_norms(s.kind_, s.norms_, s.omega_min_, s.omega_max_);
  return s;
}

SketchSet SketchSet::coordinate_basis_with_norms(const ProblemInstance& p,
                                                 Vector norms) {
  if (norms.size() != p.m())
    throw std::invalid_argument("sketch: norm vector length mismatch");
  SketchSet s;
  s.kind_ = Kind::kCoordinateBasis;
  s.q_ = p.m();
  s.norms_ = std::move(norms);
  finalize_norms(s.kind_, s.norms_, s.omega_min_, s.omega_max_);
  return s;
}

SketchSet SketchSet::explicit_vectors(const ProblemInstance& p,
                                      const MetricMatrix& b, Matrix r,
                                      bool allow_signed) {
  if (r.cols() != p.m())
    throw std::invalid_argument("sketch: sketch vectors must have length m");
  if (r.rows() < 1) throw std::invalid_argument("sketch: empty sketch set");
  if (!allow_signed && (r.array() < 0.0).any())
    throw std::invalid_argument("sketch: sketch vectors must be nonnegative");
  SketchSet s;
  s.kind_ = Kind::kExplicit;
  s.q_ = r.rows();
  s.ats_.resize(p.n(), s.q_);
  Vector col(p.n());
  for (Index i = 0; i < s.q_; ++i) {
    Vector si = r.row(i).transpose();
    p.A.transpose_multiply(si, col);
    s.ats_.col(i) = col;
  }
  s.norms_.resize(s.q_);
  for (Index i = 0; i < s.q_; ++i) {
    Vector c = s.ats_.col(i);
    s.norms_[i] = b.apply_inverse(c).dot(c);
  }
  s.r_ = std::move(r);
  finalize_norms(s.kind_, s.norms_, s.omega_min_, s.omega_max_);
  return s;
}

SketchSet precompute_sketch_norms(const ProblemInstance& p,
                                  const MetricMatrix& b,
                                  const std::vector<Vector>& sketches) {
  if (sketches.empty())
    throw std::invalid_argument("sketch: empty sketch set");
  Matrix r(static_cast<Index>(sketches.size()), p.m());
  for (Index i = 0; i < r.rows(); ++i) {
    if (sketches[i].size() != p.m())
      throw std::invalid_argument("sketch: sketch vectors must have length m");
    r.row(i) = sketches[i].transpose();
  }
  return SketchSet::explicit_vectors(p, b, std::move(r));
}

double SketchSet::value(const ProblemInstance& p, const Vector& x,
                        Index i) const {
  if (i < 0 || i >= q_) throw std::invalid_argument("sketch: index out of range");
  if (kind_ == Kind::kCoordinateBasis) return p.A.row_dot(i, x) - p.b[i];
  Vector res(p.m());
  p.residual_into(x, res);
  return r_.row(i).dot(res);
}

void SketchSet::values_into(const ProblemInstance& p, const Vector& x,
                            Vector& out) const {
  if (kind_ == Kind::kCoordinateBasis) {
    p.residual_into(x, out);
    return;
  }
  Vector res(p.m());
  p.residual_into(x, res);
  out.noalias() = r_ * res;
}

Vector SketchSet::at_s(const ProblemInstance& p, Index i) const {
  if (kind_ == Kind::kCoordinateBasis) return p.A.row(i);
  return ats_.col(i);
}

void SketchSet::step_direction_into(const ProblemInstance& p,
                                    const MetricMatrix& b, Index i,
                                    Vector& out) const {
  if (direction_ == Direction::kUnitCoordinate) {
    out.setZero(p.n());
    out[i] = 1.0;
    return;
  }
  if (kind_ == Kind::kCoordinateBasis) {
    if (b.kind() == MetricMatrix::Kind::kIdentity) {
      out = p.A.row(i);
      return;
    }
    b.apply_inverse_into(p.A.row(i), out);
    return;
  }
  b.apply_inverse_into(ats_.col(i), out);
}

void SketchSet::apply_step(const ProblemInstance& p, const MetricMatrix& b,
                           Index i, double s, Vector& x,
                           Vector& scratch) const {
  if (s == 0.0) return;
  if (direction_ == Direction::kUnitCoordinate) {
    x[i] -= s;
    return;
  }
  if (kind_ == Kind::kCoordinateBasis &&
      b.kind() == MetricMatrix::Kind::kIdentity) {
    p.A.add_scaled_row(x, i, -s);
    return;
  }
  step_direction_into(p, b, i, scratch);
  x.noalias() -= s * scratch;
}

namespace {

// Candidate equality-constrained projection onto {y : A_S y = b_S} in the
// B-norm: y = x - B^{-1} A_S^T lambda with (A_S B^{-1} A_S^T) lambda =
// A_S x - b_S. Rank-deficient subsets go through a least-squares solve and
// are dropped when inconsistent.
bool candidate_projection(const ProblemInstance& p, const MetricMatrix& b,
                          const Vector& x, const std::vector<Index>& subset,
                          Vector& y) {
  const Index k = static_cast<Index>(subset.size());
  Matrix as(k, p.n());
  Vector rhs(k);
  for (Index j = 0; j < k; ++j) {
    as.row(j) = p.A.row(subset[j]).transpose();
    rhs[j] = p.A.row_dot(subset[j], x) - p.b[subset[j]];
  }
  Matrix w(p.n(), k);  // B^{-1} A_S^T
  for (Index j = 0; j < k; ++j) w.col(j) = b.apply_inverse(as.row(j).transpose());
  Matrix gram = as * w;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gram);
  Vector lambda = cod.solve(rhs);
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if ((gram * lambda - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale) return false;
  y = x - w * lambda;
  return true;
}

constexpr double kFeasTol = 1e-9;

bool feasible_within(const ProblemInstance& p, const Vector& y, double tol) {
  for (Index i = 0; i < p.m(); ++i)
    if (p.A.row_dot(i, y) - p.b[i] > tol) return false;
  return true;
}

void enumerate_subsets(Index m, Index max_size,
                       const std::function<void(const std::vector<Index>&)>& f) {
  std::vector<Index> subset;
  // Depth-first over increasing index combinations of size <= max_size.
  std::function<void(Index)> rec = [&](Index start) {
    f(subset);
    if (static_cast<Index>(subset.size()) == max_size) return;
    for (Index i = start; i < m; ++i) {
      subset.push_back(i);
      rec(i + 1);
      subset.pop_back();
    }
  };
  rec(0);
}

}  // namespace

Vector exact_projection_smallscale(const ProblemInstance& p,
                                   const MetricMatrix& b, const Vector& x) {
  if (p.m() > 20)
    throw std::invalid_argument(
        "projection oracle: guarded to m <= 20 (active-set enumeration)");
  if (x.size() != p.n())
    throw std::invalid_argument("projection oracle: dimension mismatch");

  // The positive-support active set of the true projection has at most
  // min(m, n) linearly independent rows, so subsets up to that size suffice.
  const Index max_size = std::min(p.m(), p.n());
  bool found = false;
  double best = std::numeric_limits<double>::infinity();
  Vector best_y;
  Vector y;
  enumerate_subsets(p.m(), max_size, [&](const std::vector<Index>& subset) {
    if (subset.empty()) {
      if (!feasible_within(p, x, kFeasTol)) return;
      if (!found || 0.0 < best) {
        found = true;
        best = 0.0;
        best_y = x;
      }
      return;
    }
    if (!candidate_projection(p, b, x, subset, y)) return;
    if (!feasible_within(p, y, kFeasTol)) return;
    const double d = b.norm(y - x);
    if (!found || d < best) {
      found = true;
      best = d;
      best_y = y;
    }
  });
  if (!found)
    throw std::runtime_error(
        "projection oracle: no feasible candidate (system infeasible?)");
  return best_y;
}

double exact_distance_sq_smallscale(const ProblemInstance& p,
                                    const MetricMatrix& b, const Vector& x) {
  Vector y = exact_projection_smallscale(p, b, x);
  const double d = b.norm(x - y);
  return d * d;
}

}  // namespace asp
