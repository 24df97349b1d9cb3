#include "asp/instances.hpp"

namespace asp {

std::string to_string(GeneratedInstance::Kind k) {
  return k == GeneratedInstance::Kind::kGaussianFeasibility ? "gaussian"
                                                            : "pdgaussian";
}

GeneratedInstance::Kind instance_kind_from_string(const std::string& s) {
  if (s == "gaussian") return GeneratedInstance::Kind::kGaussianFeasibility;
  if (s == "pdgaussian") return GeneratedInstance::Kind::kPdGaussian;
  throw std::invalid_argument("instance kind must be gaussian or pdgaussian");
}

namespace {

// Fill order is fixed (A row-major, then x_int, then eps) so a seed pins the
// instance bytes.
Vector rhs_for(const ConstraintMatrix& a, const Vector& x_int, Rng& rng) {
  Vector b(a.rows());
  a.multiply(x_int, b);
  for (Index i = 0; i < b.size(); ++i) b[i] += std::abs(rng.normal());
  return b;
}

}  // namespace

GeneratedInstance gen_gaussian(Index m, Index n, std::uint64_t seed,
                               bool normalize_rows) {
  if (m < 1 || n < 1)
    throw std::invalid_argument("gen: m and n must be positive");
  Rng rng(Rng::derive_seed(seed, 1));
  Matrix a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  if (normalize_rows)
    for (Index i = 0; i < m; ++i) a.row(i) /= a.row(i).norm();
  Vector x_int(n);
  for (Index j = 0; j < n; ++j) x_int[j] = rng.normal();
  ConstraintMatrix cm(std::move(a));
  Vector b = rhs_for(cm, x_int, rng);
  return GeneratedInstance{ProblemInstance(std::move(cm), std::move(b)),
                           std::move(x_int),
                           GeneratedInstance::Kind::kGaussianFeasibility, seed};
}

GeneratedInstance gen_pd_gaussian(Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen: n must be positive");
  Rng rng(Rng::derive_seed(seed, 2));
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  Matrix a = g.transpose() * g;
  // Mirror the upper triangle so A - A^T is exactly zero.
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) a(j, i) = a(i, j);
  Vector x_int(n);
  for (Index j = 0; j < n; ++j) x_int[j] = rng.normal();
  ConstraintMatrix cm(std::move(a));
  Vector b = rhs_for(cm, x_int, rng);
  return GeneratedInstance{ProblemInstance(std::move(cm), std::move(b)),
                           std::move(x_int), GeneratedInstance::Kind::kPdGaussian,
                           seed};
}

}  // namespace asp
