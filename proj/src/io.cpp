#include "asp/io.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace asp::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io: cannot open '" + path + "'");
  return in;
}

}  // namespace

ConstraintMatrix load_matrix_market_matrix(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("mm: malformed header: empty file " + path);

  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    throw std::runtime_error("mm: malformed header line '" + header + "'");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array")
    throw std::runtime_error("mm: unsupported format '" + format + "'");
  if (field != "real" && field != "integer")
    throw std::runtime_error("mm: unsupported field '" + field + "'");
  if (symmetry != "general" && !(symmetry == "symmetric" && format == "coordinate"))
    throw std::runtime_error("mm: unsupported symmetry '" + symmetry + "'");

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    break;
  }
  std::istringstream sizes(line);

  if (format == "coordinate") {
    long m = 0, n = 0, nnz = 0;
    if (!(sizes >> m >> n >> nnz) || m < 1 || n < 1 || nnz < 0)
      throw std::runtime_error("mm: malformed size line '" + line + "'");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(nnz) * (symmetry == "symmetric" ? 2 : 1));
    for (long e = 0; e < nnz; ++e) {
      long i = 0, j = 0;
      double v = 0.0;
      if (!(in >> i >> j >> v))
        throw std::runtime_error("mm: truncated entry list in " + path);
      if (i < 1 || i > m || j < 1 || j > n)
        throw std::runtime_error("mm: index out of bounds: entry " +
                                 std::to_string(i) + " " + std::to_string(j) +
                                 " in declared " + std::to_string(m) + "x" +
                                 std::to_string(n) + " matrix");
      trips.emplace_back(i - 1, j - 1, v);
      if (symmetry == "symmetric" && i != j) trips.emplace_back(j - 1, i - 1, v);
    }
    SparseMat sp(m, n);
    sp.setFromTriplets(trips.begin(), trips.end());
    return ConstraintMatrix(std::move(sp));
  }

  long m = 0, n = 0;
  if (!(sizes >> m >> n) || m < 1 || n < 1)
    throw std::runtime_error("mm: malformed size line '" + line + "'");
  Matrix dense(m, n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < m; ++i)
      if (!(in >> dense(i, j)))
        throw std::runtime_error("mm: truncated array data in " + path);
  return ConstraintMatrix(std::move(dense));
}

ProblemInstance load_matrix_market(const std::string& path_a,
                                   const std::string& path_b) {
  ConstraintMatrix a = load_matrix_market_matrix(path_a);
  Vector b;
  if (path_b.empty()) {
    b = Vector::Zero(a.rows());
  } else {
    b = load_vector(path_b);
    if (b.size() != a.rows())
      throw std::runtime_error(
          "mm: dimension mismatch between A (" + std::to_string(a.rows()) +
          " rows) and b (" + std::to_string(b.size()) + " entries)");
  }
  return ProblemInstance(std::move(a), std::move(b));
}

void write_matrix_market(const ConstraintMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  if (a.is_sparse()) {
    const SparseMat& sp = a.sparse();
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << sp.rows() << " " << sp.cols() << " " << sp.nonZeros() << "\n";
    for (Index i = 0; i < sp.rows(); ++i)
      for (SparseMat::InnerIterator it(sp, i); it; ++it)
        out << i + 1 << " " << it.col() + 1 << " " << format_double(it.value())
            << "\n";
  } else {
    const Matrix& d = a.dense();
    out << "%%MatrixMarket matrix array real general\n";
    out << d.rows() << " " << d.cols() << "\n";
    for (Index j = 0; j < d.cols(); ++j)
      for (Index i = 0; i < d.rows(); ++i) out << format_double(d(i, j)) << "\n";
  }
  if (!out) throw std::runtime_error("io: write failed for '" + path + "'");
}

Vector load_vector(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  Vector out(static_cast<Index>(vals.size()));
  for (Index i = 0; i < out.size(); ++i) out[i] = vals[static_cast<std::size_t>(i)];
  return out;
}

void write_vector(const Vector& v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  for (Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << "\n";
  if (!out) throw std::runtime_error("io: write failed for '" + path + "'");
}

void write_instance(const GeneratedInstance& inst, const std::string& dir) {
  fs::create_directories(dir);
  write_matrix_market(inst.problem.A, (fs::path(dir) / "A.mtx").string());
  write_vector(inst.problem.b, (fs::path(dir) / "b.txt").string());
  json meta;
  meta["m"] = inst.problem.m();
  meta["n"] = inst.problem.n();
  meta["kind"] = to_string(inst.kind);
  meta["seed"] = inst.seed;
  meta["x_int"] = std::vector<double>(inst.x_int.data(),
                                      inst.x_int.data() + inst.x_int.size());
  std::ofstream out(fs::path(dir) / "meta.json");
  if (!out) throw std::runtime_error("io: cannot write meta.json in " + dir);
  out << meta.dump(2) << "\n";
}

LoadedInstance load_instance(const std::string& dir) {
  const fs::path base(dir);
  ProblemInstance p = load_matrix_market((base / "A.mtx").string(),
                                         (base / "b.txt").string());
  LoadedInstance li{std::move(p), std::nullopt, "", 0};
  const fs::path meta_path = base / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream in(meta_path);
    json meta = json::parse(in);
    li.kind = meta.value("kind", "");
    li.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("x_int")) {
      const auto& arr = meta["x_int"];
      Vector x(static_cast<Index>(arr.size()));
      for (Index i = 0; i < x.size(); ++i)
        x[i] = arr[static_cast<std::size_t>(i)].get<double>();
      li.x_int = std::move(x);
    }
  }
  return li;
}

void write_trace_csv(const SolveReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write '" + path + "'");
  out << "iter,time_s,pos_residual,rel_error,fsc\n";
  for (const TraceRecord& r : report.trace) {
    out << r.iter << "," << format_double(r.time_s) << ","
        << format_double(r.pos_residual) << ",";
    if (r.rel_error) out << format_double(*r.rel_error);
    out << "," << format_double(r.fsc) << "\n";
  }
  if (!out) throw std::runtime_error("io: write failed for '" + path + "'");
}

}  // namespace asp::io
