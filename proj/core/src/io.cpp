#include "dphase/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dphase {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoints are written as host doubles");

namespace {

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string level_file(int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u_%05d.bin", n);
  return buf;
}

json grid_json(const Grid& g) {
  json j;
  j["dim"] = g.dim();
  j["cells"] = {g.cells(0), g.cells(1)};
  j["lengths"] = {g.length(0), g.length(1)};
  j["time_steps"] = g.time_steps();
  j["final_time"] = g.final_time();
  return j;
}

class Csv {
 public:
  explicit Csv(const std::string& header) { out_ << "# schema=1\n" << header << '\n'; }
  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }
  std::ostringstream out_;
};

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_json(const ValidationReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    json j;
    j["assumption"] = c.assumption;
    j["pass"] = c.pass;
    j["margin"] = number(c.margin);
    j["location"] = c.location ? json(*c.location) : json(nullptr);
    checks.push_back(j);
  }
  json doc;
  doc["accepted"] = report.accepted();
  doc["checks"] = checks;
  doc["violations"] = report.violations();
  return dump(doc);
}

std::string to_json(const RegularityReport& rep) {
  json improved = json::array();
  for (const auto& [s, v] : rep.improved_modular) improved.push_back({{"s", s}, {"value", number(v)}});
  json doc;
  doc["schema"] = 1;
  doc["r"] = rep.r;
  doc["eps"] = rep.eps;
  doc["sup_r_norm"] = number(rep.sup_r_norm);
  doc["initial_r_norm"] = number(rep.initial_r_norm);
  doc["improved_modular"] = improved;
  doc["ut_L2"] = number(rep.ut_L2);
  doc["G_L2"] = number(rep.G_L2);
  doc["G_grad_L2"] = number(rep.G_grad_L2);
  doc["G_L2H1"] = number(rep.G_L2H1);
  doc["energy_residual_max"] = number(rep.energy_residual_max);
  doc["interpolation_ratio"] = number(rep.interpolation_ratio);
  doc["hessian_margin"] = rep.hessian_margin;
  return dump(doc);
}

std::string to_json(const RInterval& iv) {
  json doc;
  doc["lower"] = number(iv.lower);
  doc["upper"] = number(iv.upper);
  doc["empty"] = iv.empty;
  return dump(doc);
}

std::string newton_failure_json(const NewtonDiverged& error, double eps) {
  json doc;
  doc["error"] = "NewtonDiverged";
  doc["step"] = error.step();
  doc["eps"] = eps;
  doc["message"] = error.what();
  return doc.dump() + "\n";
}

std::string regularity_csv(const RegularityReport& rep) {
  Csv csv("quantity,s,value");
  csv.row(std::string("sup_r_norm"), std::string(""), rep.sup_r_norm);
  csv.row(std::string("initial_r_norm"), std::string(""), rep.initial_r_norm);
  for (const auto& [s, v] : rep.improved_modular) csv.row(std::string("improved_modular"), s, v);
  csv.row(std::string("ut_L2"), std::string(""), rep.ut_L2);
  csv.row(std::string("G_L2"), std::string(""), rep.G_L2);
  csv.row(std::string("G_grad_L2"), std::string(""), rep.G_grad_L2);
  csv.row(std::string("G_L2H1"), std::string(""), rep.G_L2H1);
  csv.row(std::string("energy_residual_max"), std::string(""), rep.energy_residual_max);
  csv.row(std::string("interpolation_ratio"), std::string(""), rep.interpolation_ratio);
  return csv.str();
}

std::string diagnostics_csv(const std::vector<StepDiagnostics>& steps) {
  Csv csv("step,time,eps,newton_iters,residual,energy_residual");
  for (const auto& s : steps) csv.row(s.step, s.time, s.eps, s.newton_iters, s.residual, s.energy_residual);
  return csv.str();
}

std::string continuation_csv(const ContinuationTrace& trace) {
  Csv csv("level,eps,newton_iters,G_eps,N_modular,s_under_modular");
  for (std::size_t k = 0; k < trace.eps.size(); ++k) {
    const int iters = k < trace.solutions.size() ? trace.solutions[k].newton_iters_total : 0;
    if (k == 0) {
      csv.row(static_cast<int>(k), trace.eps[k], iters, std::string(""), std::string(""), std::string(""));
    } else if (k - 1 < trace.metrics.size()) {
      const auto& m = trace.metrics[k - 1];
      csv.row(static_cast<int>(k), trace.eps[k], iters, m.G_eps, m.N_modular, m.s_under_modular);
    }
  }
  return csv.str();
}

std::string mms_csv(const std::vector<MMSRow>& rows) {
  Csv csv("cells,h,tau,l2_error,grad_error,l2_order,grad_order");
  for (const auto& r : rows) csv.row(r.cells, r.h, r.tau, r.l2_error, r.grad_error, r.l2_order, r.grad_order);
  return csv.str();
}

std::string stability_csv(const StabilityTable& table) {
  Csv csv("width,G_eps,N_modular,s_under_modular");
  for (const auto& r : table.rows)
    csv.row(r.width, r.difference.G_eps, r.difference.N_modular, r.difference.s_under_modular);
  return csv.str();
}

std::string long_format_csv(const std::vector<LongRow>& rows) {
  Csv csv("experiment,mesh,quantity,value");
  for (const auto& r : rows) csv.row(r.experiment, r.mesh, r.quantity, r.value);
  return csv.str();
}

std::vector<LongRow> long_rows(const std::string& experiment, const std::string& mesh,
                               const RegularityReport& rep) {
  std::vector<LongRow> rows = {
      {experiment, mesh, "sup_r_norm", rep.sup_r_norm},
      {experiment, mesh, "initial_r_norm", rep.initial_r_norm},
  };
  for (const auto& [s, v] : rep.improved_modular)
    rows.push_back({experiment, mesh, "improved_modular_s=" + format_number(s), v});
  rows.push_back({experiment, mesh, "ut_L2", rep.ut_L2});
  rows.push_back({experiment, mesh, "G_L2H1", rep.G_L2H1});
  rows.push_back({experiment, mesh, "energy_residual_max", rep.energy_residual_max});
  rows.push_back({experiment, mesh, "interpolation_ratio", rep.interpolation_ratio});
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_checkpoints(const fs::path& dir, const Trajectory& u, const ProblemConfig& config, double eps) {
  fs::create_directories(dir);
  const Grid& g = u.grid;
  json files = json::array();
  for (int n = 0; n < u.levels(); ++n) {
    const auto& values = u.slices[static_cast<std::size_t>(n)];
    json header;
    header["dims"] = {g.cells(0), g.cells(1)};
    header["spacing"] = {g.spacing(0), g.spacing(1)};
    header["time"] = g.time(n);
    header["field"] = "u";
    header["step"] = n;
    header["count"] = values.size();
    header["format"] = "f64le";
    std::ofstream out(dir / level_file(n), std::ios::binary);
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + (dir / level_file(n)).string());
    files.push_back(level_file(n));
  }
  json manifest;
  manifest["schema"] = 1;
  manifest["grid"] = grid_json(g);
  manifest["eps"] = eps;
  manifest["seed"] = config.seed;
  manifest["levels"] = u.levels();
  manifest["files"] = files;
  manifest["config"] = "problem.cfg";
  write_text(dir / "problem.cfg", to_config_text(config));
  write_text(dir / "manifest.json", dump(manifest));
}

CheckpointSet read_checkpoints(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IncompleteCheckpoints("not a checkpoint directory: " + dir.string());
  if (!fs::exists(dir / "manifest.json")) throw IncompleteCheckpoints("missing manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw IncompleteCheckpoints(std::string("unreadable manifest: ") + e.what());
  }
  if (!fs::exists(dir / "problem.cfg")) throw IncompleteCheckpoints("missing problem.cfg in " + dir.string());
  ProblemConfig config = parse_problem_config(read_text(dir / "problem.cfg"));
  const Grid grid = config.grid();
  try {
    const json& gj = manifest.at("grid");
    if (gj.at("dim").get<int>() != grid.dim() || gj.at("time_steps").get<int>() != grid.time_steps() ||
        gj.at("cells").at(0).get<int>() != grid.cells(0) || gj.at("cells").at(1).get<int>() != grid.cells(1))
      throw IncompleteCheckpoints("manifest grid does not match problem.cfg");
    const int levels = manifest.at("levels").get<int>();
    if (levels != grid.time_steps() + 1)
      throw IncompleteCheckpoints("manifest lists " + std::to_string(levels) + " levels, expected " +
                                  std::to_string(grid.time_steps() + 1));
    Trajectory u(grid);
    const auto count = static_cast<Eigen::Index>(grid.cell_count());
    for (int n = 0; n < levels; ++n) {
      const fs::path file = dir / level_file(n);
      std::ifstream in(file, std::ios::binary);
      if (!in) throw IncompleteCheckpoints("missing checkpoint " + file.filename().string());
      std::string line;
      std::getline(in, line);
      const json header = json::parse(line, nullptr, false);
      if (header.is_discarded() || header.value("step", -1) != n || header.value("count", -1L) != count ||
          header.value("format", "") != "f64le")
        throw IncompleteCheckpoints("bad header in " + file.filename().string());
      Eigen::VectorXd values(count);
      in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
      if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
        throw IncompleteCheckpoints("truncated checkpoint " + file.filename().string());
      if (in.peek() != std::char_traits<char>::eof())
        throw IncompleteCheckpoints("trailing data in " + file.filename().string());
      u.slices.push_back(std::move(values));
    }
    return {std::move(config), manifest.value("eps", 0.0), std::move(u)};
  } catch (const json::exception& e) {
    throw IncompleteCheckpoints(std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace dphase
