#include "asp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Dense>

namespace asp {

void SolverConfig::validate() const {
  if (!(delta > 0.0 && delta < 2.0))
    throw std::invalid_argument("config: delta must lie in (0, 2)");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("config: gamma must lie in [0, 1)");
  if (max_iters < 0) throw std::invalid_argument("config: max_iters < 0");
  if (!(residual_tol > 0.0))
    throw std::invalid_argument("config: residual_tol must be positive");
  if (check_every < 0) throw std::invalid_argument("config: check_every < 0");
  if (log_every < 0) throw std::invalid_argument("config: log_every < 0");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kTolerance:
      return "tolerance";
    case Termination::kMaxIters:
      return "max_iters";
    case Termination::kAlreadyFeasible:
      return "already_feasible";
  }
  return "?";
}

Vector asp_step(const ProblemInstance& p, const MetricMatrix& b,
                const SketchSet& s, const Vector& x, Index i, double delta) {
  Vector next = x;
  Vector scratch;
  const double v = s.value(p, x, i);
  if (v > 0.0) s.apply_step(p, b, i, delta * v / s.norms()[i], next, scratch);
  return next;
}

void aspm_step(IterateState& st, const ProblemInstance& p,
               const MetricMatrix& b, const SketchSet& s, Index i,
               double delta, double gamma, std::optional<double> value) {
  const double v = value ? *value : s.value(p, st.x_curr, i);
  Vector next = st.x_curr;
  Vector scratch;
  if (v > 0.0) s.apply_step(p, b, i, delta * v / s.norms()[i], next, scratch);
  if (gamma != 0.0) next.noalias() += gamma * (st.x_curr - st.x_prev);
  st.x_prev.swap(st.x_curr);
  st.x_curr.swap(next);
  st.cesaro_sum += st.x_curr;
  ++st.k;
}

double metric_fsc(const ProblemInstance& p, const Vector& x) {
  Index satisfied = 0;
  for (Index i = 0; i < p.m(); ++i)
    if (p.A.row_dot(i, x) <= p.b[i]) ++satisfied;
  return static_cast<double>(satisfied) / static_cast<double>(p.m());
}

double metric_relative_error(const MetricMatrix& b, const Vector& x,
                             const Vector& x_ref, const Vector& x0) {
  const double denom = b.norm(x0 - x_ref);
  if (denom == 0.0)
    throw std::invalid_argument("relative error: x0 equals the reference point");
  return b.norm(x - x_ref) / denom;
}

SolveReport solve(const ProblemInstance& p, const MetricMatrix& b,
                  const SketchSet& s, const SolverConfig& config,
                  std::optional<Vector> x0, std::optional<Vector> x_ref) {
  config.validate();
  if (b.dim() != p.n())
    throw std::invalid_argument("solve: metric dimension mismatch");

  Vector start =
      x0 ? std::move(*x0) : Vector(Vector::Constant(p.n(), 1000.0));
  if (start.size() != p.n())
    throw std::invalid_argument("solve: x0 dimension mismatch");

  SolveReport report;
  report.config = config;

  IterateState st(std::move(start), Rng(config.seed));
  Sampler sampler(config.rule, p, b, s, Rng(Rng::derive_seed(config.seed, 0)));

  // With coordinate sketches the sampler's full value vector is the
  // constraint residual, so rules that scan every sketch give the stopping
  // check for free.
  const bool reuse_values = s.kind() == SketchSet::Kind::kCoordinateBasis &&
                            s.q() == p.m();
  const long check_every =
      config.check_every > 0 ? config.check_every : (p.m() > 10000 ? 100 : 1);
  const long log_every =
      config.log_every > 0 ? config.log_every : check_every;

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  const Vector x_start = st.x_curr;
  const bool have_ref = x_ref && b.norm(x_start - *x_ref) > 0.0;

  // One residual evaluation per check feeds the stopping norm, the trace FSC
  // and the final report; rules that already scanned every sketch share it.
  Vector check_buf(p.m());
  double last_residual = -1.0;
  double last_fsc = 0.0;
  long last_checked = -1;

  auto run_check = [&](bool values_fresh) {
    if (values_fresh && reuse_values)
      check_buf = sampler.full_values();
    else
      p.residual_into(st.x_curr, check_buf);
    double acc = 0.0;
    Index satisfied = 0;
    for (Index i = 0; i < check_buf.size(); ++i) {
      if (check_buf[i] > 0.0)
        acc += check_buf[i] * check_buf[i];
      else
        ++satisfied;
    }
    last_residual = std::sqrt(acc);
    last_fsc = static_cast<double>(satisfied) / static_cast<double>(p.m());
    last_checked = st.k;
  };

  auto record = [&]() {
    TraceRecord rec;
    rec.iter = st.k;
    rec.time_s = elapsed();
    rec.pos_residual = last_residual;
    rec.fsc = last_fsc;
    if (have_ref)
      rec.rel_error = metric_relative_error(b, st.x_curr, *x_ref, x_start);
    report.trace.push_back(rec);
  };

  if (config.keep_iterates) report.iterates.push_back(st.x_curr);

  std::optional<Termination> term;

  while (true) {
    Selection sel{};
    bool selected = false;
    if (st.k < config.max_iters && !term) {
      sel = sampler.select(st.x_curr);
      selected = true;
    }

    if (st.k % check_every == 0 || st.k == config.max_iters || term ||
        (selected && sel.already_feasible)) {
      run_check(selected && sampler.has_full_values());
      if (st.k % log_every == 0 || last_residual <= config.residual_tol)
        record();
      if (!term) {
        if (last_residual == 0.0 && st.k == 0)
          term = Termination::kAlreadyFeasible;
        else if (last_residual <= config.residual_tol)
          term = Termination::kTolerance;
      }
    }

    if (!term && selected && sel.already_feasible)
      term = Termination::kAlreadyFeasible;
    if (!term && st.k >= config.max_iters) term = Termination::kMaxIters;

    if (term) break;

    aspm_step(st, p, b, s, sel.index, config.delta, config.gamma, sel.value);
    if (config.keep_iterates) report.iterates.push_back(st.x_curr);
  }

  if (last_checked != st.k) run_check(false);
  if (report.trace.empty() || report.trace.back().iter != st.k) record();

  report.final_x = st.x_curr;
  report.terminated_by = *term;
  report.iterations = st.k;
  report.elapsed_s = elapsed();
  report.final_residual = last_residual;
  report.final_fsc = last_fsc;
  if (config.track_cesaro)
    report.cesaro_x = st.k > 0 ? Vector(st.cesaro_sum / static_cast<double>(st.k))
                               : st.x_curr;
  return report;
}

namespace {

Matrix pseudo_inverse(const Matrix& a) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  return cod.pseudoInverse();
}

SamplingRule rule_for_family(char which, const SketchSet& s,
                             const PresetParams& params) {
  const Index q = s.q();
  switch (which) {
    case 'r':  // randomized: uniform, optionally weighted by the cached norms
      if (params.weighted) return SamplingRule::WeightedUniform(s.norms());
      return SamplingRule::Uniform();
    case 'm':  // maximum distance
      return SamplingRule::MaxDistance();
    case 's':  // sampled greedy
      return SamplingRule::Greedy(params.tau);
    case 'c':  // capped
      return SamplingRule::Capped(params.theta, params.tau1.value_or(q),
                                  params.tau2.value_or(1));
  }
  throw std::logic_error("unknown preset family");
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "mrk",     "mmr",     "mskm",    "mck",     "mrcd",    "mmcd",
      "mscd",    "mccd",    "mrcd_ls", "mmcd_ls", "mscd_ls", "mccd_ls"};
  return names;
}

PresetBundle preset(const std::string& name, const ProblemInstance& p,
                    const PresetParams& params) {
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw std::invalid_argument("preset: unknown name '" + name + "'");

  // Family letter is the second character: mRk, mMr ('mmr'), mSkm, mCk, ...
  const char which = name[1];

  if (name == "mrk" || name == "mmr" || name == "mskm" || name == "mck") {
    MetricMatrix b = MetricMatrix::Identity(p.n());
    SketchSet s = SketchSet::coordinate_basis(p, b);
    SamplingRule rule = rule_for_family(which, s, params);
    return PresetBundle{std::move(b), std::move(s), std::move(rule)};
  }

  if (name == "mrcd" || name == "mmcd" || name == "mscd" || name == "mccd") {
    if (p.m() != p.n())
      throw std::invalid_argument("preset: coordinate descent needs square A");
    Matrix a = p.A.to_dense();
    MetricMatrix b = MetricMatrix::DenseSpd(a);  // checks SPD
    // With B = A the cached norms are a_i^T A^{-1} a_i = A_ii and the step
    // direction B^{-1} A^T e_i is exactly e_i.
    SketchSet s = SketchSet::coordinate_basis_with_norms(p, a.diagonal());
    s.set_direction(SketchSet::Direction::kUnitCoordinate);
    SamplingRule rule = rule_for_family(which, s, params);
    return PresetBundle{std::move(b), std::move(s), std::move(rule)};
  }

  // Least-squares family: sketches are rows of the pseudo-inverse and the
  // update moves one coordinate at a time. Dense pseudo-inverse, small scale.
  if (p.n() > 500)
    throw std::invalid_argument("preset: ls family guarded to n <= 500");
  Matrix a = p.A.to_dense();
  if ((a.array() < 0.0).any())
    throw std::invalid_argument("preset: ls family requires A >= 0 elementwise");
  Matrix pinv = pseudo_inverse(a);  // n x m
  MetricMatrix b = MetricMatrix::DenseSpd(Matrix(a.transpose() * a));
  SketchSet s = SketchSet::explicit_vectors(p, b, pinv, /*allow_signed=*/true);
  s.set_direction(SketchSet::Direction::kUnitCoordinate);
  SamplingRule rule = rule_for_family(which, s, params);
  return PresetBundle{std::move(b), std::move(s), std::move(rule)};
}

}  // namespace asp
