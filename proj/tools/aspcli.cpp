// Command-line harness for the sketch-and-project feasibility solvers:
// instance generation, single solves, sampling-rule benchmarks, rate
// analysis and feasibility certification.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "asp/analysis.hpp"
#include "asp/instances.hpp"
#include "asp/io.hpp"
#include "asp/loss.hpp"
#include "asp/solver.hpp"

using namespace asp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Exit codes: 0 success, 1 numeric/region failure, 2 usage or I/O failure.
constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;

struct InstanceOptions {
  std::string dir;
  std::string matrix;
  std::string rhs;
  std::string kind;
  long m = 0, n = 0;
  std::uint64_t seed = 0;
  bool normalize_rows = false;
};

void add_instance_options(CLI::App* sub, InstanceOptions& opt) {
  sub->add_option("--instance", opt.dir, "instance directory (A.mtx, b.txt, meta.json)");
  sub->add_option("--matrix", opt.matrix, "Matrix Market file for A");
  sub->add_option("--rhs", opt.rhs, "whitespace-separated b vector file");
  sub->add_option("--kind", opt.kind, "generate in memory: gaussian or pdgaussian");
  sub->add_option("--m", opt.m, "rows for in-memory generation");
  sub->add_option("--n", opt.n, "columns / dimension for in-memory generation");
  sub->add_option("--instance-seed", opt.seed, "seed for in-memory generation");
  sub->add_flag("--normalize-rows", opt.normalize_rows,
                "rescale each row of [A | b] to unit row norm (same feasible set)");
}

io::LoadedInstance normalize_if_requested(io::LoadedInstance li, bool wanted) {
  if (!wanted) return li;
  Matrix a = li.problem.A.to_dense();
  Vector b = li.problem.b;
  for (Index i = 0; i < a.rows(); ++i) {
    const double norm = a.row(i).norm();
    a.row(i) /= norm;
    b[i] /= norm;
  }
  li.problem = ProblemInstance(ConstraintMatrix(std::move(a)), std::move(b));
  return li;
}

io::LoadedInstance resolve_instance(const InstanceOptions& opt) {
  auto finish = [&](io::LoadedInstance li) {
    return normalize_if_requested(std::move(li), opt.normalize_rows);
  };
  if (!opt.dir.empty()) return finish(io::load_instance(opt.dir));
  if (!opt.matrix.empty()) {
    ProblemInstance p = io::load_matrix_market(opt.matrix, opt.rhs);
    return finish(io::LoadedInstance{std::move(p), std::nullopt, "", 0});
  }
  if (!opt.kind.empty()) {
    if (opt.kind != "pdgaussian" && opt.kind != "gaussian")
      throw std::runtime_error("io: unknown --kind '" + opt.kind + "'");
    if (opt.kind == "pdgaussian" && opt.normalize_rows)
      throw std::runtime_error(
          "io: --normalize-rows would break the positive definiteness of a "
          "pdgaussian instance");
    // For generated Kaczmarz-family instances, unit rows are imposed before
    // b is drawn, so the feasibility margins keep their scale.
    GeneratedInstance gi =
        opt.kind == "pdgaussian"
            ? gen_pd_gaussian(opt.n, opt.seed)
            : gen_gaussian(opt.m, opt.n, opt.seed, opt.normalize_rows);
    return io::LoadedInstance{std::move(gi.problem), std::move(gi.x_int),
                              opt.kind, opt.seed};
  }
  throw std::runtime_error("io: no instance given (--instance, --matrix or --kind)");
}

struct MethodOptions {
  std::string preset_name;
  std::string rule = "uniform";
  long tau = 1;
  double theta = 0.5;
  long tau1 = -1;  // default q
  long tau2 = 1;
  std::string threshold = "exact";
  bool weighted = false;
};

void add_method_options(CLI::App* sub, MethodOptions& opt) {
  sub->add_option("--preset", opt.preset_name,
                  "named method: mrk mmr mskm mck mrcd mmcd mscd mccd "
                  "mrcd_ls mmcd_ls mscd_ls mccd_ls");
  sub->add_option("--rule", opt.rule, "uniform | maxdist | greedy | capped");
  sub->add_option("--tau", opt.tau, "greedy sample size");
  sub->add_option("--theta", opt.theta, "capped mixing weight");
  sub->add_option("--tau1", opt.tau1, "capped first sample size (default q)");
  sub->add_option("--tau2", opt.tau2, "capped second sample size");
  sub->add_option("--threshold", opt.threshold,
                  "capped threshold mode: exact | lowerbound");
  sub->add_flag("--weighted", opt.weighted,
                "uniform selection weighted by the sketch norms");
}

SamplingRule rule_from_options(const MethodOptions& opt, Index q,
                               const SketchSet* sketches) {
  SamplingRule::Threshold th = opt.threshold == "lowerbound"
                                   ? SamplingRule::Threshold::kLowerBound
                                   : SamplingRule::Threshold::kExact;
  if (opt.rule == "uniform") {
    if (opt.weighted && sketches)
      return SamplingRule::WeightedUniform(sketches->norms());
    return SamplingRule::Uniform();
  }
  if (opt.rule == "maxdist") return SamplingRule::MaxDistance();
  if (opt.rule == "greedy") return SamplingRule::Greedy(opt.tau);
  if (opt.rule == "capped")
    return SamplingRule::Capped(opt.theta, opt.tau1 > 0 ? opt.tau1 : q,
                                opt.tau2, th);
  throw std::runtime_error("io: unknown --rule '" + opt.rule + "'");
}

struct MethodBundle {
  MetricMatrix B;
  SketchSet S;
  SamplingRule rule;
  std::string label;
};

MethodBundle resolve_method(const MethodOptions& opt, const ProblemInstance& p) {
  if (!opt.preset_name.empty()) {
    PresetParams prm;
    prm.tau = opt.tau;
    prm.theta = opt.theta;
    if (opt.tau1 > 0) prm.tau1 = opt.tau1;
    prm.tau2 = opt.tau2;
    prm.weighted = opt.weighted;
    PresetBundle b = preset(opt.preset_name, p, prm);
    return MethodBundle{std::move(b.B), std::move(b.S), std::move(b.rule),
                        opt.preset_name};
  }
  MetricMatrix b = MetricMatrix::Identity(p.n());
  SketchSet s = SketchSet::coordinate_basis(p, b);
  SamplingRule rule = rule_from_options(opt, s.q(), &s);
  return MethodBundle{std::move(b), std::move(s), std::move(rule),
                      rule.name()};
}

struct SolveOptions {
  double delta = 1.0;
  double gamma = 0.0;
  double tol = 1e-5;
  long max_iters = 300000;
  std::uint64_t seed = 0;
  double x0_value = 1000.0;
  bool x0_zero = false;
  long check_every = 0;  // 0 = auto
  long log_every = 0;
  bool no_region_check = false;
};

void add_solve_options(CLI::App* sub, SolveOptions& opt) {
  sub->add_option("--delta", opt.delta, "projection parameter in (0, 2)");
  sub->add_option("--gamma", opt.gamma, "momentum parameter in [0, 1)");
  sub->add_option("--tol", opt.tol, "positive-residual stopping tolerance");
  sub->add_option("--max-iters", opt.max_iters, "iteration cap");
  sub->add_option("--seed", opt.seed, "solver RNG seed");
  sub->add_option("--x0", opt.x0_value, "constant initial point value");
  sub->add_flag("--x0-zero", opt.x0_zero, "start from the origin");
  sub->add_option("--check-every", opt.check_every, "stopping-check stride (0 = auto)");
  sub->add_option("--log-every", opt.log_every, "trace stride");
  sub->add_flag("--no-region-check", opt.no_region_check,
                "demote momentum-range errors to warnings");
}

// The admissible momentum range is [0, 0.5) for every instance; values at or
// above 0.5 are refused unless overridden. Exact per-instance bounds need the
// spectral constants, which `analyze` reports.
void region_gate(const SolveOptions& opt) {
  if (!(opt.delta > 0.0 && opt.delta < 2.0))
    throw std::invalid_argument("region: delta must lie in (0, 2)");
  if (opt.gamma >= 0.5 && opt.gamma < 1.0) {
    if (!opt.no_region_check)
      throw std::invalid_argument(
          "region: gamma >= 0.5 lies outside the convergent momentum range; "
          "pass --no-region-check to run anyway");
    std::cerr << "warning: gamma = " << opt.gamma
              << " exceeds the admissible momentum range [0, 0.5)\n";
  }
}

SolverConfig config_from(const SolveOptions& opt, SamplingRule rule) {
  SolverConfig cfg;
  cfg.delta = opt.delta;
  cfg.gamma = opt.gamma;
  cfg.rule = std::move(rule);
  cfg.max_iters = opt.max_iters;
  cfg.residual_tol = opt.tol;
  cfg.seed = opt.seed;
  cfg.check_every = opt.check_every;
  cfg.log_every = opt.log_every;
  return cfg;
}

json config_echo(const SolveOptions& opt, const std::string& method_label) {
  json j;
  j["delta"] = opt.delta;
  j["gamma"] = opt.gamma;
  j["tol"] = opt.tol;
  j["max_iters"] = opt.max_iters;
  j["seed"] = opt.seed;
  j["method"] = method_label;
  return j;
}

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const std::string& kind, long m, long n, std::uint64_t seed,
                 const std::string& out_dir) {
  GeneratedInstance gi = instance_kind_from_string(kind) ==
                                 GeneratedInstance::Kind::kPdGaussian
                             ? gen_pd_gaussian(n, seed)
                             : gen_gaussian(m, n, seed);
  io::write_instance(gi, out_dir);
  std::cout << "wrote " << gi.problem.m() << "x" << gi.problem.n()
            << " instance to " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// solve

int cmd_solve(const InstanceOptions& inst_opt, const MethodOptions& m_opt,
              const SolveOptions& s_opt, const std::string& trace_out,
              const std::string& summary_out) {
  io::LoadedInstance inst = resolve_instance(inst_opt);
  region_gate(s_opt);
  MethodBundle method = resolve_method(m_opt, inst.problem);
  SolverConfig cfg = config_from(s_opt, method.rule);

  std::optional<Vector> x0;
  if (s_opt.x0_zero)
    x0 = Vector::Zero(inst.problem.n());
  else
    x0 = Vector::Constant(inst.problem.n(), s_opt.x0_value);

  SolveReport rep =
      solve(inst.problem, method.B, method.S, cfg, x0, inst.x_int);

  if (!trace_out.empty()) io::write_trace_csv(rep, trace_out);

  json summary;
  summary["terminated_by"] = to_string(rep.terminated_by);
  summary["iterations"] = rep.iterations;
  summary["elapsed_s"] = rep.elapsed_s;
  summary["final_residual"] = rep.final_residual;
  summary["final_fsc"] = rep.final_fsc;
  summary["config"] = config_echo(s_opt, method.label);
  summary["instance"] = {{"m", inst.problem.m()}, {"n", inst.problem.n()}};
  write_json(summary, summary_out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchCell {
  SamplingRule rule;
  std::string rule_label;
  double gamma = 0.0;
};

struct RunResult {
  long trial = 0;
  long iterations = 0;
  double seconds = 0.0;
  double final_residual = 0.0;
  double final_fsc = 0.0;
  std::string terminated_by;
  std::vector<TraceRecord> trace;
  std::string error;
};

std::string sanitize(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return s;
}

std::vector<std::pair<SamplingRule, std::string>> parse_rules(
    const std::string& spec, Index q) {
  std::vector<std::pair<SamplingRule, std::string>> rules;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream ts(tok);
    std::string part;
    while (std::getline(ts, part, ':')) parts.push_back(part);
    const std::string& name = parts[0];
    if (name == "uniform") {
      rules.emplace_back(SamplingRule::Uniform(), "uniform");
    } else if (name == "maxdist") {
      rules.emplace_back(SamplingRule::MaxDistance(), "maxdist");
    } else if (name == "greedy") {
      if (parts.size() < 2)
        throw std::runtime_error("io: greedy rule needs a tau, e.g. greedy:50");
      const long tau = std::stol(parts[1]);
      rules.emplace_back(SamplingRule::Greedy(tau),
                         "greedy" + std::to_string(tau));
    } else if (name == "capped") {
      double theta = parts.size() > 1 ? std::stod(parts[1]) : 0.5;
      Index tau1 = parts.size() > 2 ? std::stol(parts[2]) : 1;
      Index tau2 = parts.size() > 3 ? std::stol(parts[3]) : q;
      rules.emplace_back(SamplingRule::Capped(theta, tau1, tau2),
                         parts.size() > 1 ? sanitize(tok) : "capped");
    } else {
      throw std::runtime_error("io: unknown rule '" + name + "'");
    }
  }
  if (rules.empty()) throw std::runtime_error("io: empty rule grid");
  return rules;
}

std::vector<double> parse_doubles(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw std::runtime_error("io: empty value list");
  return out;
}

void write_mean_trace(const std::vector<RunResult>& runs, long log_every,
                      const std::string& path) {
  // Aligned by iteration: mean over the trials that have a record at each
  // logged iteration, with the contributing count in the last column.
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  out << "iter,mean_time_s,mean_pos_residual,mean_rel_error,mean_fsc,trials\n";
  long max_iter = 0;
  for (const RunResult& r : runs)
    if (!r.trace.empty()) max_iter = std::max(max_iter, r.trace.back().iter);
  for (long k = 0;; k += log_every) {
    double t = 0, res = 0, rel = 0, fsc = 0;
    long count = 0, rel_count = 0;
    for (const RunResult& r : runs) {
      auto it = std::lower_bound(
          r.trace.begin(), r.trace.end(), k,
          [](const TraceRecord& rec, long key) { return rec.iter < key; });
      if (it == r.trace.end() || it->iter != k) continue;
      ++count;
      t += it->time_s;
      res += it->pos_residual;
      fsc += it->fsc;
      if (it->rel_error) {
        rel += *it->rel_error;
        ++rel_count;
      }
    }
    if (count > 0) {
      out << k << "," << io::format_double(t / count) << ","
          << io::format_double(res / count) << ",";
      if (rel_count > 0) out << io::format_double(rel / rel_count);
      out << "," << io::format_double(fsc / count) << "," << count << "\n";
    }
    if (k >= max_iter) break;
  }
}

void write_time_binned_trace(const std::vector<RunResult>& runs, int bins,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  out << "time_s,mean_pos_residual,mean_fsc,trials\n";
  double max_t = 0.0;
  for (const RunResult& r : runs)
    if (!r.trace.empty()) max_t = std::max(max_t, r.trace.back().time_s);
  if (max_t <= 0.0 || bins < 1) return;
  for (int bb = 1; bb <= bins; ++bb) {
    const double edge = max_t * bb / bins;
    double res = 0, fsc = 0;
    long count = 0;
    for (const RunResult& r : runs) {
      // last record at or before the bin edge
      const TraceRecord* last = nullptr;
      for (const TraceRecord& rec : r.trace) {
        if (rec.time_s <= edge) last = &rec;
        else break;
      }
      if (!last) continue;
      ++count;
      res += last->pos_residual;
      fsc += last->fsc;
    }
    if (count > 0)
      out << io::format_double(edge) << "," << io::format_double(res / count)
          << "," << io::format_double(fsc / count) << "," << count << "\n";
  }
}

int cmd_bench(const InstanceOptions& inst_opt, const SolveOptions& s_opt,
              const std::string& rules_spec, const std::string& gammas_spec,
              long trials, long jobs, int time_bins,
              const std::string& out_dir) {
  io::LoadedInstance inst = resolve_instance(inst_opt);
  const ProblemInstance& p = inst.problem;
  MetricMatrix b = MetricMatrix::Identity(p.n());
  SketchSet s = SketchSet::coordinate_basis(p, b);

  auto rules = parse_rules(rules_spec, s.q());
  auto gammas = parse_doubles(gammas_spec);
  if (trials < 1) throw std::runtime_error("io: trials must be >= 1");
  for (double g : gammas)
    if (g >= 0.5 && !s_opt.no_region_check)
      throw std::invalid_argument(
          "region: gamma >= 0.5 in the grid; pass --no-region-check to run");

  fs::create_directories(out_dir);

  std::vector<BenchCell> cells;
  for (const auto& [rule, label] : rules)
    for (double g : gammas) cells.push_back(BenchCell{rule, label, g});

  std::vector<std::vector<RunResult>> results(cells.size());
  std::atomic<std::size_t> next_cell{0};
  std::mutex log_mutex;

  auto run_cell = [&](std::size_t ci) {
    const BenchCell& cell = cells[ci];
    auto& cell_runs = results[ci];
    cell_runs.resize(trials);
    for (long t = 0; t < trials; ++t) {
      RunResult& rr = cell_runs[t];
      rr.trial = t;
      try {
        SolverConfig cfg;
        cfg.delta = s_opt.delta;
        cfg.gamma = cell.gamma;
        cfg.rule = cell.rule;
        cfg.max_iters = s_opt.max_iters;
        cfg.residual_tol = s_opt.tol;
        cfg.seed = Rng::derive_seed(s_opt.seed, 1000 * ci + t);
        cfg.check_every = s_opt.check_every;
        cfg.log_every = s_opt.log_every;
        Vector x0 = s_opt.x0_zero ? Vector(Vector::Zero(p.n()))
                                  : Vector(Vector::Constant(p.n(), s_opt.x0_value));
        SolveReport rep = solve(p, b, s, cfg, x0, inst.x_int);
        rr.iterations = rep.iterations;
        rr.seconds = rep.elapsed_s;
        rr.final_residual = rep.final_residual;
        rr.final_fsc = rep.final_fsc;
        rr.terminated_by = to_string(rep.terminated_by);
        rr.trace = std::move(rep.trace);
      } catch (const std::exception& e) {
        rr.error = e.what();
        std::lock_guard<std::mutex> lk(log_mutex);
        std::cerr << "cell " << cell.rule_label << " gamma " << cell.gamma
                  << " trial " << t << " failed: " << e.what() << "\n";
      }
    }
  };

  const long workers = std::max(1l, std::min<long>(jobs, cells.size()));
  std::vector<std::thread> pool;
  for (long w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t ci = next_cell.fetch_add(1);
        if (ci >= cells.size()) return;
        run_cell(ci);
      }
    });
  for (auto& th : pool) th.join();

  // per-run table
  {
    std::ofstream out(fs::path(out_dir) / "runs.csv");
    out << "rule,gamma,trial,iterations,seconds,final_residual,final_fsc,"
           "terminated_by,error\n";
    for (std::size_t ci = 0; ci < cells.size(); ++ci)
      for (const RunResult& rr : results[ci])
        out << cells[ci].rule_label << "," << io::format_double(cells[ci].gamma)
            << "," << rr.trial << "," << rr.iterations << ","
            << io::format_double(rr.seconds) << ","
            << io::format_double(rr.final_residual) << ","
            << io::format_double(rr.final_fsc) << "," << rr.terminated_by
            << "," << rr.error << "\n";
  }

  // aggregate table
  {
    std::ofstream out(fs::path(out_dir) / "summary.csv");
    out << "rule,gamma,mean_iterations,mean_seconds,mean_final_residual,"
           "mean_final_fsc,tolerance_count,trials\n";
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      double it = 0, sec = 0, res = 0, fsc = 0;
      long tol_count = 0, ok = 0;
      for (const RunResult& rr : results[ci]) {
        if (!rr.error.empty()) continue;
        ++ok;
        it += rr.iterations;
        sec += rr.seconds;
        res += rr.final_residual;
        fsc += rr.final_fsc;
        if (rr.terminated_by != "max_iters") ++tol_count;
      }
      if (ok == 0) ok = 1;  // keep the row printable for all-failed cells
      out << cells[ci].rule_label << "," << io::format_double(cells[ci].gamma)
          << "," << io::format_double(it / ok) << ","
          << io::format_double(sec / ok) << "," << io::format_double(res / ok)
          << "," << io::format_double(fsc / ok) << "," << tol_count << ","
          << results[ci].size() << "\n";
    }
  }

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    char gtag[32];
    std::snprintf(gtag, sizeof(gtag), "%g", cells[ci].gamma);
    const std::string cell_tag =
        sanitize(cells[ci].rule_label) + "_g" + sanitize(gtag);
    for (const RunResult& rr : results[ci]) {
      SolveReport rep;
      rep.trace = rr.trace;
      io::write_trace_csv(rep, (fs::path(out_dir) /
                                ("trace_" + cell_tag + "_t" +
                                 std::to_string(rr.trial) + ".csv"))
                                   .string());
    }
    write_mean_trace(results[ci], s_opt.log_every,
                     (fs::path(out_dir) / ("mean_trace_" + cell_tag + ".csv"))
                         .string());
    if (time_bins > 0)
      write_time_binned_trace(
          results[ci], time_bins,
          (fs::path(out_dir) / ("mean_trace_time_" + cell_tag + ".csv"))
              .string());
  }

  json cfg;
  cfg["rules"] = rules_spec;
  cfg["gammas"] = gammas_spec;
  cfg["trials"] = trials;
  cfg["delta"] = s_opt.delta;
  cfg["tol"] = s_opt.tol;
  cfg["max_iters"] = s_opt.max_iters;
  cfg["seed"] = s_opt.seed;
  cfg["check_every"] = s_opt.check_every;
  cfg["log_every"] = s_opt.log_every;
  cfg["m"] = p.m();
  cfg["n"] = p.n();
  write_json(cfg, (fs::path(out_dir) / "bench_config.json").string());

  std::cout << "bench complete: " << cells.size() << " cells x " << trials
            << " trials -> " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const InstanceOptions& inst_opt, const MethodOptions& m_opt,
                double delta, double gamma, double zeta, bool have_gamma,
                bool have_zeta, const std::string& sigma_mode,
                double sigma_value, const std::string& out_path) {
  io::LoadedInstance inst = resolve_instance(inst_opt);
  const ProblemInstance& p = inst.problem;
  MethodBundle method = resolve_method(m_opt, p);
  const SketchSet& s = method.S;
  const MetricMatrix& b = method.B;

  double sigma;
  std::string sigma_source;
  if (sigma_mode == "value") {
    sigma = sigma_value;
    sigma_source = "user";
  } else if (sigma_mode == "bruteforce") {
    sigma = hoffman_bruteforce(p, b, s, 10000, 1);
    sigma_source = "bruteforce";
  } else {
    sigma = hoffman_consistent(p.A);
    sigma_source = "consistent";
  }

  Index tau = 1;
  if (method.rule.kind == SamplingRule::Kind::kGreedy) tau = method.rule.tau;
  if (method.rule.kind == SamplingRule::Kind::kMaxDistance) tau = s.q();

  SpectralConstants c;
  if (method.rule.kind == SamplingRule::Kind::kCapped) {
    c = mu_bounds_capped(method.rule.theta, method.rule.tau1, method.rule.tau2,
                         s.q(), [&](Index t) {
                           return mu_bounds_greedy(p, b, s, t, sigma);
                         });
    c.hoffman_sigma = sigma;
  } else {
    c = mu_bounds_greedy(p, b, s, tau, sigma);
  }

  // Operator-form constant for the fixed-probability rules; for tau = 1 it
  // tightens the greedy bound, so report the min there.
  Vector uniform_prob = Vector::Constant(s.q(), 1.0 / s.q());
  const double mu2_op = mu2_operator(p, b, s, uniform_prob);
  double mu2 = c.mu2;
  if (method.rule.kind == SamplingRule::Kind::kUniform ||
      (method.rule.kind == SamplingRule::Kind::kGreedy && tau == 1))
    mu2 = std::min(mu2, mu2_op);

  json out;
  out["m"] = p.m();
  out["n"] = p.n();
  out["q"] = s.q();
  out["rule"] = method.label;
  out["sigma"] = sigma;
  out["sigma_source"] = sigma_source;
  out["omega1"] = c.omega1;
  out["omega2"] = c.omega2;
  out["mu1"] = c.mu1;
  out["mu2"] = mu2;
  out["mu2_operator_uniform"] = mu2_op;
  out["sigma_enc"] = sigma_encoding(p.A, p.b);
  {
    CertificateInputs ci = CertificateInputs::from_instance(p, b);
    out["certificate"] = {{"threshold", std::exp2(1.0 - ci.sigma_enc)},
                          {"psi", ci.psi},
                          {"xi", ci.xi}};
  }
  out["h"] = rate_basic(delta, c.mu1);
  out["gamma_max"] = momentum_gamma_max(delta, c.mu1, mu2).boundary;

  json h_curve = json::array();
  json g_curve = json::array();
  for (double d = 0.1; d < 2.0; d += 0.1) {
    json hrec;
    hrec["delta"] = d;
    hrec["h"] = rate_basic(d, c.mu1);
    h_curve.push_back(hrec);
    GammaBound gb = momentum_gamma_max(d, c.mu1, mu2);
    json grec;
    grec["delta"] = d;
    grec["gamma_max"] = gb.boundary;
    grec["gamma_safe"] = gb.piecewise;
    g_curve.push_back(grec);
  }
  out["h_curve"] = h_curve;
  out["gamma_max_curve"] = g_curve;

  if (have_gamma) {
    RegionCheck rc = region_check(delta, gamma,
                                  have_zeta ? std::optional<double>(zeta)
                                            : std::nullopt,
                                  c.mu1, mu2);
    json regions;
    regions["in_q"] = rc.in_q;
    regions["in_r"] = rc.in_r;
    regions["in_s"] = rc.in_s;
    if (!rc.in_q) regions["q_violation"] = rc.q_violation;
    if (!rc.in_r) regions["r_violation"] = rc.r_violation;
    if (!rc.in_s) regions["s_violation"] = rc.s_violation;
    out["regions"] = regions;
    if (rc.in_q) {
      MomentumRateL1 r1 = momentum_rate_l1(delta, gamma, c.mu1, mu2);
      out["rate_l1"] = {{"gamma1", r1.gamma1}, {"gamma2", r1.gamma2},
                        {"gamma3", r1.gamma3}, {"rho1", r1.rho1},
                        {"rho2", r1.rho2}};
    }
    if (have_zeta && rc.in_r && rc.in_s) {
      MomentumRateL2 r2 = momentum_rate_l2(delta, gamma, zeta, c.mu1, mu2);
      out["rate_l2"] = {{"alpha", r2.alpha}, {"rho", r2.rho}};
    }
  }
  write_json(out, out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// certify

int cmd_certify(const InstanceOptions& inst_opt, const MethodOptions& m_opt,
                const SolveOptions& s_opt, double zeta, bool have_zeta,
                const std::string& sigma_mode, double sigma_value,
                const std::string& out_path) {
  io::LoadedInstance inst = resolve_instance(inst_opt);
  const ProblemInstance& p = inst.problem;
  region_gate(s_opt);
  MethodBundle method = resolve_method(m_opt, p);
  const SketchSet& s = method.S;
  const MetricMatrix& b = method.B;

  double sigma_h;
  if (sigma_mode == "value")
    sigma_h = sigma_value;
  else if (sigma_mode == "bruteforce")
    sigma_h = hoffman_bruteforce(p, b, s, 10000, 1);
  else
    sigma_h = hoffman_consistent(p.A);

  Index tau = 1;
  if (method.rule.kind == SamplingRule::Kind::kGreedy) tau = method.rule.tau;
  if (method.rule.kind == SamplingRule::Kind::kMaxDistance) tau = s.q();
  SpectralConstants c = mu_bounds_greedy(p, b, s, tau, sigma_h);

  CertificateRates rates;
  if (have_zeta) {
    MomentumRateL2 r2 = momentum_rate_l2(s_opt.delta, s_opt.gamma, zeta,
                                         c.mu1, c.mu2);
    rates.rho_bar = r2.rho;
    rates.alpha = r2.alpha;
  } else {
    MomentumRateL1 r1 = momentum_rate_l1(s_opt.delta, s_opt.gamma, c.mu1, c.mu2);
    rates.rho_bar = r1.rho2 * r1.rho2;
    rates.alpha = 0.0;
  }

  CertificateInputs inputs = CertificateInputs::from_instance(p, b);
  const double threshold = std::exp2(1.0 - inputs.sigma_enc);

  // Momentum run from the origin, tracking the first iterate whose maximum
  // violation drops below the certificate threshold.
  CertificateReport bound_probe =
      certificate_report(p, b, Vector::Zero(p.n()), 1, rates, inputs);
  const double iter_bound = bound_probe.iteration_lower_bound;
  long cap = s_opt.max_iters;
  if (iter_bound > 0 && 2.0 * iter_bound < 1e7)
    cap = std::min<long>(cap, std::max<long>(1000, static_cast<long>(2.0 * iter_bound) + 10));

  IterateState st(Vector::Zero(p.n()), Rng(s_opt.seed));
  Sampler sampler(method.rule, p, b, s, Rng(Rng::derive_seed(s_opt.seed, 0)));
  long achieved_k = -1;
  double theta_now = max_violation(p, st.x_curr);
  if (theta_now < threshold) achieved_k = 0;
  while (achieved_k < 0 && st.k < cap) {
    Selection sel = sampler.select(st.x_curr);
    if (sel.already_feasible) break;
    aspm_step(st, p, b, s, sel.index, s_opt.delta, s_opt.gamma, sel.value);
    theta_now = max_violation(p, st.x_curr);
    if (theta_now < threshold) achieved_k = st.k;
  }

  CertificateReport rep =
      certificate_report(p, b, st.x_curr, st.k, rates, inputs);

  json out;
  out["sigma_enc"] = inputs.sigma_enc;
  out["threshold"] = threshold;
  out["psi"] = inputs.psi;
  out["xi"] = inputs.xi;
  out["mu1"] = c.mu1;
  out["mu2"] = c.mu2;
  out["rho_bar"] = rates.rho_bar;
  out["alpha"] = rates.alpha;
  out["iteration_lower_bound"] = rep.iteration_lower_bound;
  out["achieved"] = achieved_k >= 0;
  out["achieved_k"] = achieved_k;
  out["iterations_run"] = st.k;
  out["final_max_violation"] = theta_now;
  out["failure_prob_bound"] = rep.failure_prob_bound;
  write_json(out, out_path);
  return kExitOk;
}

// ---------------------------------------------------------------------------

// --config FILE: JSON keys become subcommand flags applied before the real
// argv, so explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args;
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      config_path = argv[++i];
      continue;
    }
    args.push_back(std::move(a));
  }
  if (config_path.empty() || args.empty()) return args;
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("io: cannot open config '" + config_path + "'");
  json cfg = json::parse(in);
  std::vector<std::string> expanded;
  expanded.push_back(args[0]);  // subcommand first
  for (auto& [key, value] : cfg.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) expanded.push_back("--" + key);
      continue;
    }
    expanded.push_back("--" + key);
    if (value.is_string())
      expanded.push_back(value.get<std::string>());
    else
      expanded.push_back(value.dump());
  }
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sketch-and-project linear feasibility solver"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic instance");
  std::string gen_kind = "gaussian", gen_out = "instance";
  long gen_m = 100, gen_n = 10;
  std::uint64_t gen_seed = 0;
  gen->add_option("--kind", gen_kind, "gaussian | pdgaussian");
  gen->add_option("--m", gen_m, "rows");
  gen->add_option("--n", gen_n, "columns / dimension");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // solve
  auto* sol = app.add_subcommand("solve", "run one solve");
  InstanceOptions sol_inst;
  MethodOptions sol_method;
  SolveOptions sol_opts;
  std::string sol_trace, sol_summary = "-";
  add_instance_options(sol, sol_inst);
  add_method_options(sol, sol_method);
  add_solve_options(sol, sol_opts);
  sol->add_option("--trace-out", sol_trace, "trace CSV path");
  sol->add_option("--summary-out", sol_summary, "summary JSON path (- for stdout)");

  // bench
  auto* ben = app.add_subcommand("bench", "rule/momentum grid benchmark");
  InstanceOptions ben_inst;
  SolveOptions ben_opts;
  ben_opts.check_every = 20;
  ben_opts.log_every = 100;
  std::string ben_rules = "uniform,greedy:5,greedy:50,greedy:100,maxdist,capped";
  std::string ben_gammas = "0";
  long ben_trials = 10, ben_jobs = 1;
  int ben_time_bins = 0;
  std::string ben_out = "bench_out";
  add_instance_options(ben, ben_inst);
  add_solve_options(ben, ben_opts);
  ben->add_option("--rules", ben_rules, "comma list: uniform greedy:T maxdist capped[:theta[:t1[:t2]]]");
  ben->add_option("--gammas", ben_gammas, "comma list of momentum values");
  ben->add_option("--trials", ben_trials, "trials per cell");
  ben->add_option("--jobs", ben_jobs, "concurrent cells");
  ben->add_option("--time-bins", ben_time_bins, "also emit time-binned aggregates");
  ben->add_option("--out", ben_out, "output directory");

  // analyze
  auto* ana = app.add_subcommand("analyze", "spectral constants and rates");
  InstanceOptions ana_inst;
  MethodOptions ana_method;
  double ana_delta = 1.0, ana_gamma = 0.0, ana_zeta = 0.0, ana_sigma = 0.0;
  std::string ana_sigma_mode = "consistent", ana_out = "-";
  add_instance_options(ana, ana_inst);
  add_method_options(ana, ana_method);
  ana->add_option("--delta", ana_delta, "projection parameter");
  auto* ana_gamma_opt = ana->add_option("--gamma", ana_gamma, "momentum parameter");
  auto* ana_zeta_opt = ana->add_option("--zeta", ana_zeta, "L2-route parameter");
  ana->add_option("--sigma-mode", ana_sigma_mode, "consistent | bruteforce | value");
  ana->add_option("--sigma", ana_sigma, "externally certified Hoffman constant");
  ana->add_option("--out", ana_out, "output JSON path (- for stdout)");

  // certify
  auto* cer = app.add_subcommand("certify", "feasibility certificate run");
  InstanceOptions cer_inst;
  MethodOptions cer_method;
  SolveOptions cer_opts;
  double cer_zeta = 0.0, cer_sigma = 0.0;
  std::string cer_sigma_mode = "consistent", cer_out = "-";
  add_instance_options(cer, cer_inst);
  add_method_options(cer, cer_method);
  add_solve_options(cer, cer_opts);
  auto* cer_zeta_opt = cer->add_option("--zeta", cer_zeta, "L2-route parameter");
  cer->add_option("--sigma-mode", cer_sigma_mode, "consistent | bruteforce | value");
  cer->add_option("--sigma", cer_sigma, "externally certified Hoffman constant");
  cer->add_option("--out", cer_out, "output JSON path (- for stdout)");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<const char*> cargs;
  cargs.push_back(argv[0]);
  for (const auto& a : args) cargs.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed())
      return cmd_generate(gen_kind, gen_m, gen_n, gen_seed, gen_out);
    if (sol->parsed())
      return cmd_solve(sol_inst, sol_method, sol_opts, sol_trace, sol_summary);
    if (ben->parsed())
      return cmd_bench(ben_inst, ben_opts, ben_rules, ben_gammas, ben_trials,
                       ben_jobs, ben_time_bins, ben_out);
    if (ana->parsed())
      return cmd_analyze(ana_inst, ana_method, ana_delta, ana_gamma, ana_zeta,
                         ana_gamma_opt->count() > 0, ana_zeta_opt->count() > 0,
                         ana_sigma_mode, ana_sigma, ana_out);
    if (cer->parsed())
      return cmd_certify(cer_inst, cer_method, cer_opts, cer_zeta,
                         cer_zeta_opt->count() > 0, cer_sigma_mode, cer_sigma,
                         cer_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
