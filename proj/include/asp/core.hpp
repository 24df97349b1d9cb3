#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace asp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Componentwise positive part, max(v, 0).
Vector positive_part(const Vector& v);

/// Constraint matrix with dense or sparse (CSR) storage behind one row-wise
/// interface. Both storages produce identical matrix-vector products on the
/// same data.
class ConstraintMatrix {
 public:
  explicit ConstraintMatrix(Matrix dense);
  explicit ConstraintMatrix(SparseMat sparse);

  bool is_sparse() const { return sparse_.has_value(); }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  double row_dot(Index i, const Vector& x) const;
  double row_squared_norm(Index i) const;
  Vector row(Index i) const;

  /// x += s * a_i
  void add_scaled_row(Vector& x, Index i, double s) const;

  /// out = A x
  void multiply(const Vector& x, Vector& out) const;
  /// out = A^T y
  void transpose_multiply(const Vector& y, Vector& out) const;

  Matrix to_dense() const;
  const SparseMat& sparse() const { return *sparse_; }
  const Matrix& dense() const { return *dense_; }

  double max_row_norm() const;
  bool has_zero_row() const;

 private:
  Index rows_ = 0, cols_ = 0;
  std::optional<Matrix> dense_;
  std::optional<SparseMat> sparse_;
};

/// The feasibility problem Ax <= b. Rejects empty shapes, zero rows of A and
/// a right-hand side of mismatched length.
struct ProblemInstance {
  ConstraintMatrix A;
  Vector b;

  ProblemInstance(ConstraintMatrix a, Vector rhs);

  Index m() const { return A.rows(); }
  Index n() const { return A.cols(); }

  /// out = Ax - b
  void residual_into(const Vector& x, Vector& out) const;
  /// ||(Ax - b)^+||_2
  double positive_residual_norm(const Vector& x) const;
};

/// Positive definite matrix B defining the geometry. Three variants: identity,
/// strictly positive diagonal, and dense SPD with a Cholesky factorization
/// cached at construction.
class MetricMatrix {
 public:
  enum class Kind { kIdentity, kDiagonal, kDenseSpd };

  static MetricMatrix Identity(Index n);
  static MetricMatrix Diagonal(Vector d);
  static MetricMatrix DenseSpd(Matrix m);

  Kind kind() const { return kind_; }
  Index dim() const { return n_; }

  Vector apply(const Vector& v) const;          // B v
  Vector apply_inverse(const Vector& v) const;  // B^{-1} v
  void apply_inverse_into(const Vector& v, Vector& out) const;

  /// ||v||_B = sqrt(v^T B v)
  double norm(const Vector& v) const;
  /// <u, v>_B = u^T B v
  double inner(const Vector& u, const Vector& v) const;

  double lambda_min() const;
  double lambda_max() const;

  /// Returns a symmetric matrix with the eigenvalues of B^{-1/2} M B^{-1/2}
  /// for symmetric M (for the dense variant, via the Cholesky factor, which
  /// is a similarity transform).
  Matrix whiten_sym(const Matrix& m) const;

  const Vector& diagonal() const { return diag_; }
  const Matrix& dense() const { return dense_; }

 private:
  MetricMatrix(Kind k, Index n) : kind_(k), n_(n) {}

  Kind kind_;
  Index n_;
  Vector diag_;
  Matrix dense_;
  Eigen::LLT<Matrix> llt_;
  double lambda_min_ = 1.0, lambda_max_ = 1.0;
};

/// Set of q nonnegative sketching vectors with the cached norms
/// w_i = ||A^T S_i||^2_{B^{-1}} and their extremes. The coordinate basis
/// (q = m) is stored implicitly; loss and step specialize to row operations.
class SketchSet {
 public:
  enum class Kind { kCoordinateBasis, kExplicit };
  /// Step direction used by the solver: the canonical B^{-1} A^T S_i, or the
  /// unit coordinate vector e_i for the coordinate-descent style families
  /// where that is the closed form.
  enum class Direction { kGeneric, kUnitCoordinate };

  static SketchSet coordinate_basis(const ProblemInstance& p,
                                    const MetricMatrix& b);
  /// Coordinate basis with analytically known norms (e.g. diag(A) when
  /// B = A), bypassing the generic per-row solves.
  static SketchSet coordinate_basis_with_norms(const ProblemInstance& p,
                                               Vector norms);
  /// rows of `r` are the sketch vectors S_1..S_q (each of length m).
  /// `allow_signed` lifts the nonnegativity requirement for the pseudo-inverse
  /// sketch family, which does not satisfy it in general.
  static SketchSet explicit_vectors(const ProblemInstance& p,
                                    const MetricMatrix& b, Matrix r,
                                    bool allow_signed = false);

  Kind kind() const { return kind_; }
  Direction direction() const { return direction_; }
  void set_direction(Direction d) { direction_ = d; }

  Index q() const { return q_; }
  const Vector& norms() const { return norms_; }
  double omega_min() const { return omega_min_; }
  double omega_max() const { return omega_max_; }

  /// S_i^T (Ax - b) for one index. For explicit sketch sets this computes the
  /// full residual; batch callers should use values_into.
  double value(const ProblemInstance& p, const Vector& x, Index i) const;
  /// out[i] = S_i^T (Ax - b) for all i.
  void values_into(const ProblemInstance& p, const Vector& x,
                   Vector& out) const;

  /// A^T S_i.
  Vector at_s(const ProblemInstance& p, Index i) const;
  /// Step direction for index i (see Direction).
  void step_direction_into(const ProblemInstance& p, const MetricMatrix& b,
                           Index i, Vector& out) const;
  /// x -= s * direction_i, exploiting row sparsity where possible.
  void apply_step(const ProblemInstance& p, const MetricMatrix& b, Index i,
                  double s, Vector& x, Vector& scratch) const;

  const Matrix& sketch_matrix() const { return r_; }

 private:
  SketchSet() = default;

  Kind kind_ = Kind::kCoordinateBasis;
  Direction direction_ = Direction::kGeneric;
  Index q_ = 0;
  Matrix r_;    // q x m, explicit only
  Matrix ats_;  // n x q, cached A^T S_i columns, explicit only
  Vector norms_;
  double omega_min_ = 0.0, omega_max_ = 0.0;
};

/// norms[i] = (A^T S_i)^T B^{-1} (A^T S_i); rejects any sketch with
/// A^T S_i = 0.
SketchSet precompute_sketch_norms(const ProblemInstance& p,
                                  const MetricMatrix& b,
                                  const std::vector<Vector>& sketches);

/// sqrt(v^T B v); thin wrapper kept as the named norm operation.
double b_norm(const MetricMatrix& b, const Vector& v);

/// B^{-1} v.
Vector apply_b_inverse(const MetricMatrix& b, const Vector& v);

/// Exact B-norm projection of x onto {y : Ay <= b} by enumerating candidate
/// active sets of size up to min(m, n) and keeping the feasible minimizer.
/// Intended as a test oracle; guarded to m <= 20. Feasibility tolerance is
/// 1e-9 absolute. Throws if the system is infeasible (no candidate passes).
Vector exact_projection_smallscale(const ProblemInstance& p,
                                   const MetricMatrix& b, const Vector& x);

/// Squared B-distance from x to the feasible region via the oracle above.
double exact_distance_sq_smallscale(const ProblemInstance& p,
                                    const MetricMatrix& b, const Vector& x);

}  // namespace asp
