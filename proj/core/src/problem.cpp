#include "dphase/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dphase/flux.hpp"

namespace dphase {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, const std::string& key) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("key '" + key + "': expected a number, got '" + std::string(text) + "'");
  return value;
}

long long parse_integer(std::string_view text, const std::string& key) {
  text = trim(text);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + std::string(text) + "'");
  return value;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::set<std::string, std::less<>> kKnownKeys = {
    "dim", "nx", "ny", "nt", "T", "Lx", "Ly", "p.expr", "q.expr", "a.expr", "b.expr", "f.expr",
    "u0.expr", "alpha", "sigma", "r", "d", "eps.start", "eps.factor", "eps.count", "eps.list", "seed"};
const std::vector<std::string> kOptionNamespaces = {"newton.", "report.", "mms.", "stability.", "continuation."};

bool is_known_key(const std::string& key) {
  if (kKnownKeys.count(key) != 0) return true;
  return std::any_of(kOptionNamespaces.begin(), kOptionNamespaces.end(),
                     [&](const std::string& ns) { return key.rfind(ns, 0) == 0 && key.size() > ns.size(); });
}

Expression parse_expression_key(const std::map<std::string, std::string>& kv, const std::string& key,
                                const char* fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    if (fallback == nullptr) throw ConfigError("missing required key '" + key + "'");
    return Expression::parse(fallback);
  }
  try {
    return Expression::parse(it->second);
  } catch (const ExpressionError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

}  // namespace

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const auto item = trim(text.substr(start, end - start));
    if (!item.empty()) out.push_back(parse_double(item, "list"));
    start = end + 1;
  }
  return out;
}

std::vector<double> ProblemConfig::epsilon_schedule() const {
  if (!eps_list.empty()) return eps_list;
  std::vector<double> out;
  double e = eps_start;
  for (int k = 0; k < eps_count; ++k) {
    out.push_back(e);
    e *= eps_factor;
  }
  return out;
}

Grid ProblemConfig::grid() const { return Grid(dim, {nx, dim == 2 ? ny : 1}, {Lx, Ly}, nt, T); }

ProblemConfig ProblemConfig::with_mesh(int cells, int time_steps) const {
  ProblemConfig c = *this;
  c.nx = cells;
  if (dim == 2) c.ny = cells;
  c.nt = time_steps;
  c.entries["nx"] = std::to_string(c.nx);
  if (dim == 2) c.entries["ny"] = std::to_string(c.ny);
  c.entries["nt"] = std::to_string(c.nt);
  return c;
}

std::optional<std::string> ProblemConfig::get(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

double ProblemConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_double(*v, key) : fallback;
}

int ProblemConfig::get_int(const std::string& key, int fallback) const {
  const auto v = get(key);
  return v ? static_cast<int>(parse_integer(*v, key)) : fallback;
}

std::vector<double> ProblemConfig::get_list(const std::string& key, std::vector<double> fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    return parse_number_list(*v);
  } catch (const ConfigError&) {
    throw ConfigError("key '" + key + "': expected a comma separated list of numbers");
  }
}

ProblemConfig parse_problem_config(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!is_known_key(key)) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!kv.emplace(key, value).second)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }

  const auto require = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  };

  ProblemConfig c;
  c.entries = kv;
  c.dim = static_cast<int>(parse_integer(require("dim"), "dim"));
  if (c.dim != 1 && c.dim != 2) throw ConfigError("key 'dim': must be 1 or 2");
  c.nx = static_cast<int>(parse_integer(require("nx"), "nx"));
  c.ny = kv.count("ny") ? static_cast<int>(parse_integer(kv["ny"], "ny")) : (c.dim == 2 ? c.nx : 1);
  c.nt = static_cast<int>(parse_integer(require("nt"), "nt"));
  c.T = parse_double(require("T"), "T");
  if (kv.count("Lx")) c.Lx = parse_double(kv["Lx"], "Lx");
  if (kv.count("Ly")) c.Ly = parse_double(kv["Ly"], "Ly");
  if (c.nx < 4 || (c.dim == 2 && c.ny < 4)) throw ConfigError("grid needs at least 4 cells per axis");
  if (c.nt < 1) throw ConfigError("key 'nt': must be positive");
  if (!(c.T > 0.0) || !(c.Lx > 0.0) || !(c.Ly > 0.0)) throw ConfigError("T, Lx, Ly must be positive");

  c.p_expr = parse_expression_key(kv, "p.expr", nullptr);
  c.q_expr = parse_expression_key(kv, "q.expr", nullptr);
  c.a_expr = parse_expression_key(kv, "a.expr", nullptr);
  c.b_expr = parse_expression_key(kv, "b.expr", nullptr);
  c.f_expr = parse_expression_key(kv, "f.expr", "0");
  c.u0_expr = parse_expression_key(kv, "u0.expr", nullptr);

  c.alpha = parse_double(require("alpha"), "alpha");
  c.sigma = parse_double(require("sigma"), "sigma");
  c.r = parse_double(require("r"), "r");
  c.d = parse_double(require("d"), "d");
  if (kv.count("eps.start")) c.eps_start = parse_double(kv["eps.start"], "eps.start");
  if (kv.count("eps.factor")) c.eps_factor = parse_double(kv["eps.factor"], "eps.factor");
  if (kv.count("eps.count")) c.eps_count = static_cast<int>(parse_integer(kv["eps.count"], "eps.count"));
  if (kv.count("eps.list")) c.eps_list = c.get_list("eps.list", {});
  if (kv.count("seed")) c.seed = static_cast<std::uint64_t>(parse_integer(kv["seed"], "seed"));
  if (c.epsilon_schedule().empty()) throw ConfigError("epsilon schedule is empty");
  return c;
}

ProblemConfig load_problem_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_config(ss.str());
}

std::string to_config_text(const ProblemConfig& c) {
  std::ostringstream out;
  out << "dim = " << c.dim << "\n";
  out << "nx = " << c.nx << "\n";
  if (c.dim == 2) out << "ny = " << c.ny << "\n";
  out << "nt = " << c.nt << "\n";
  out << "T = " << format_double(c.T) << "\n";
  out << "Lx = " << format_double(c.Lx) << "\n";
  out << "Ly = " << format_double(c.Ly) << "\n";
  out << "p.expr = " << c.p_expr.source() << "\n";
  out << "q.expr = " << c.q_expr.source() << "\n";
  out << "a.expr = " << c.a_expr.source() << "\n";
  out << "b.expr = " << c.b_expr.source() << "\n";
  out << "f.expr = " << c.f_expr.source() << "\n";
  out << "u0.expr = " << c.u0_expr.source() << "\n";
  out << "alpha = " << format_double(c.alpha) << "\n";
  out << "sigma = " << format_double(c.sigma) << "\n";
  out << "r = " << format_double(c.r) << "\n";
  out << "d = " << format_double(c.d) << "\n";
  out << "eps.start = " << format_double(c.eps_start) << "\n";
  out << "eps.factor = " << format_double(c.eps_factor) << "\n";
  out << "eps.count = " << c.eps_count << "\n";
  if (!c.eps_list.empty()) {
    out << "eps.list = ";
    for (std::size_t k = 0; k < c.eps_list.size(); ++k) out << (k ? ", " : "") << format_double(c.eps_list[k]);
    out << "\n";
  }
  out << "seed = " << c.seed << "\n";
  for (const auto& [key, value] : c.entries) {
    if (kKnownKeys.count(key) == 0) out << key << " = " << value << "\n";
  }
  return out.str();
}

// --- SpaceTimeField ---------------------------------------------------------

SpaceTimeField SpaceTimeField::from_expression(const Expression& expr, const Grid& grid) {
  const auto sample = [expr, grid](double t) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.cell_count()));
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const Point pt = grid.center(c);
      v[static_cast<Eigen::Index>(c)] = expr(pt.x, pt.y, t);
    }
    return v;
  };
  if (!expr.depends_on_time()) return constant_in_time(sample(0.0));
  return from_generator([sample, grid](int level) { return sample(grid.time(level)); }, grid.cell_count(), true);
}

SpaceTimeField SpaceTimeField::constant_in_time(Eigen::VectorXd values) {
  SpaceTimeField f;
  f.size_ = static_cast<std::size_t>(values.size());
  f.static_values_ = std::make_shared<const Eigen::VectorXd>(std::move(values));
  f.time_dependent_ = false;
  return f;
}

SpaceTimeField SpaceTimeField::from_slices(std::vector<Eigen::VectorXd> slices) {
  if (slices.empty()) throw GridMismatch("SpaceTimeField: no slices");
  if (slices.size() == 1) return constant_in_time(std::move(slices.front()));
  SpaceTimeField f;
  f.size_ = static_cast<std::size_t>(slices.front().size());
  for (const auto& s : slices)
    if (static_cast<std::size_t>(s.size()) != f.size_) throw GridMismatch("SpaceTimeField: ragged slices");
  f.slices_ = std::make_shared<const std::vector<Eigen::VectorXd>>(std::move(slices));
  f.time_dependent_ = true;
  return f;
}

SpaceTimeField SpaceTimeField::from_generator(Generator generator, std::size_t size, bool time_dependent) {
  if (!time_dependent) return constant_in_time(generator(0));
  SpaceTimeField f;
  f.generator_ = std::move(generator);
  f.size_ = size;
  f.time_dependent_ = true;
  return f;
}

Eigen::VectorXd SpaceTimeField::slice(int level) const {
  if (static_values_) return *static_values_;
  if (slices_) return slices_->at(static_cast<std::size_t>(level));
  if (generator_) return generator_(level);
  throw std::logic_error("SpaceTimeField: empty field");
}

Eigen::VectorXd ExponentField::s_under(int level) const { return p.slice(level).cwiseMin(q.slice(level)); }
Eigen::VectorXd ExponentField::s_over(int level) const { return p.slice(level).cwiseMax(q.slice(level)); }

// --- derived quantities -----------------------------------------------------

namespace {

// Integral over Omega of |grad v|^d, centred inside and one-sided at walls.
double gradient_power_integral(const Grid& grid, const Eigen::VectorXd& v, double d) {
  const int nx = grid.cells(0);
  const int ny = grid.cells(1);
  const auto at = [&](int i, int j) { return v[static_cast<Eigen::Index>(grid.index(i, j))]; };
  const auto diff = [](double lo, double hi, double h) { return (hi - lo) / h; };
  double sum = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double hx = grid.spacing(0);
      double gx = 0.0;
      if (i == 0) gx = diff(at(0, j), at(1, j), hx);
      else if (i == nx - 1) gx = diff(at(nx - 2, j), at(nx - 1, j), hx);
      else gx = diff(at(i - 1, j), at(i + 1, j), 2.0 * hx);
      double g2 = gx * gx;
      if (grid.dim() == 2) {
        const double hy = grid.spacing(1);
        double gy = 0.0;
        if (j == 0) gy = diff(at(i, 0), at(i, 1), hy);
        else if (j == ny - 1) gy = diff(at(i, ny - 2), at(i, ny - 1), hy);
        else gy = diff(at(i, j - 1), at(i, j + 1), 2.0 * hy);
        g2 += gy * gy;
      }
      sum += std::pow(g2, 0.5 * d);
    }
  }
  return sum * grid.cell_volume();
}

double power_integral(const Grid& grid, const Eigen::VectorXd& v, double e) {
  return grid.cell_volume() * v.array().abs().pow(e).sum();
}

void track_min(Extremum& ext, double value, std::size_t cell, int level, bool first) {
  if (first || value < ext.value) ext = {value, cell, level};
}
void track_max(Extremum& ext, double value, std::size_t cell, int level, bool first) {
  if (first || value > ext.value) ext = {value, cell, level};
}

double neighbour_lipschitz(const Grid& grid, const Eigen::VectorXd& v) {
  double lip = 0.0;
  for (int j = 0; j < grid.cells(1); ++j) {
    for (int i = 0; i < grid.cells(0); ++i) {
      const double here = v[static_cast<Eigen::Index>(grid.index(i, j))];
      if (i + 1 < grid.cells(0))
        lip = std::max(lip, std::abs(v[static_cast<Eigen::Index>(grid.index(i + 1, j))] - here) / grid.spacing(0));
      if (grid.dim() == 2 && j + 1 < grid.cells(1))
        lip = std::max(lip, std::abs(v[static_cast<Eigen::Index>(grid.index(i, j + 1))] - here) / grid.spacing(1));
    }
  }
  return lip;
}

void require_size(const Grid& grid, const SpaceTimeField& f, const char* name) {
  if (f.size() != grid.cell_count())
    throw GridMismatch(std::string("field '") + name + "' does not match the grid");
  if (f.stored_levels() != 0 && f.stored_levels() != static_cast<std::size_t>(grid.time_steps()) + 1)
    throw GridMismatch(std::string("field '") + name + "' has the wrong number of time levels");
}

}  // namespace

double gradient_Ld_norm(const Grid& grid, const Eigen::VectorXd& values, double d) {
  if (values.size() != static_cast<Eigen::Index>(grid.cell_count())) throw GridMismatch("gradient_Ld_norm: size");
  return std::pow(gradient_power_integral(grid, values, d), 1.0 / d);
}

std::string describe_location(const Grid& grid, std::size_t cell, int level) {
  const Point pt = grid.center(cell);
  char buf[96];
  if (grid.dim() == 2)
    std::snprintf(buf, sizeof buf, "x=%.6g,y=%.6g,t=%.6g", pt.x, pt.y, grid.time(level));
  else
    std::snprintf(buf, sizeof buf, "x=%.6g,t=%.6g", pt.x, grid.time(level));
  return buf;
}

ProblemSpec make_problem(const Grid& grid, ProblemFields fields, ProblemParameters params) {
  require_size(grid, fields.p, "p");
  require_size(grid, fields.q, "q");
  require_size(grid, fields.a, "a");
  require_size(grid, fields.b, "b");
  require_size(grid, fields.f, "f");
  if (fields.u0.size() != static_cast<Eigen::Index>(grid.cell_count())) throw GridMismatch("field 'u0' does not match the grid");
  std::size_t boundary_faces = 0;
  for (std::size_t f = 0; f < grid.face_total(); ++f) boundary_faces += grid.is_boundary_face(f) ? 1 : 0;
  if (fields.u0_boundary.size() != static_cast<Eigen::Index>(boundary_faces))
    throw GridMismatch("u0 boundary trace does not match the grid");

  ProblemSpec spec{grid, {}, {}, fields.f, std::move(fields.u0), std::move(fields.u0_boundary),
                   params.sigma, params.r, std::move(params.epsilon_schedule), 0.0};
  auto& ex = spec.exponents;
  auto& co = spec.coeffs;
  ex.p = fields.p;
  ex.q = fields.q;
  co.a = fields.a;
  co.b = fields.b;
  co.alpha = params.alpha;
  co.d = params.d;

  const bool exponents_vary = ex.p.time_dependent() || ex.q.time_dependent();
  const bool coeffs_vary = co.a.time_dependent() || co.b.time_dependent();
  const int nt = grid.time_steps();
  const double tau = grid.tau();
  const int last_exp_level = exponents_vary ? nt : 0;
  const int last_coeff_level = coeffs_vary ? nt : 0;

  Eigen::VectorXd p_prev;
  Eigen::VectorXd q_prev;
  double s_over_plus = -std::numeric_limits<double>::infinity();
  double s_under_minus = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= last_exp_level; ++n) {
    const Eigen::VectorXd p = ex.p.slice(n);
    const Eigen::VectorXd q = ex.q.slice(n);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const auto k = static_cast<Eigen::Index>(c);
      const bool first = n == 0 && c == 0;
      track_min(ex.p_min_at, p[k], c, n, first);
      track_min(ex.q_min_at, q[k], c, n, first);
      track_max(ex.gap_max, std::abs(p[k] - q[k]), c, n, first);
      if (first || p[k] > ex.p_plus) ex.p_plus = p[k];
      if (first || q[k] > ex.q_plus) ex.q_plus = q[k];
      s_over_plus = std::max(s_over_plus, std::max(p[k], q[k]));
      s_under_minus = std::min(s_under_minus, std::min(p[k], q[k]));
    }
    ex.lip_pq = std::max({ex.lip_pq, neighbour_lipschitz(grid, p), neighbour_lipschitz(grid, q)});
    if (n > 0) {
      ex.lip_pq = std::max(ex.lip_pq, (p - p_prev).cwiseAbs().maxCoeff() / tau);
      ex.lip_pq = std::max(ex.lip_pq, (q - q_prev).cwiseAbs().maxCoeff() / tau);
    }
    p_prev = p;
    q_prev = q;
  }
  ex.p_minus = ex.p_min_at.value;
  ex.q_minus = ex.q_min_at.value;
  ex.s_over_plus = s_over_plus;
  ex.s_under_minus = s_under_minus;

  const double d = co.d > 0.0 ? co.d : 2.0;
  double grad_a = 0.0;
  double grad_b = 0.0;
  double at = 0.0;
  double bt = 0.0;
  Eigen::VectorXd a_prev;
  Eigen::VectorXd b_prev;
  for (int n = 0; n <= last_coeff_level; ++n) {
    const Eigen::VectorXd a = co.a.slice(n);
    const Eigen::VectorXd b = co.b.slice(n);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const auto k = static_cast<Eigen::Index>(c);
      const bool first = n == 0 && c == 0;
      track_min(co.a_min, a[k], c, n, first);
      track_min(co.b_min, b[k], c, n, first);
      track_min(co.sum_min, a[k] + b[k], c, n, first);
      if (first || a[k] > co.a_plus) co.a_plus = a[k];
      if (first || b[k] > co.b_plus) co.b_plus = b[k];
    }
    if (!coeffs_vary) {
      grad_a = grid.final_time() * gradient_power_integral(grid, a, d);
      grad_b = grid.final_time() * gradient_power_integral(grid, b, d);
    } else if (n > 0) {
      grad_a += tau * gradient_power_integral(grid, a, d);
      grad_b += tau * gradient_power_integral(grid, b, d);
      at += tau * power_integral(grid, (a - a_prev) / tau, d);
      bt += tau * power_integral(grid, (b - b_prev) / tau, d);
    }
    a_prev = a;
    b_prev = b;
  }
  co.grad_a_Ld = std::pow(grad_a, 1.0 / d);
  co.grad_b_Ld = std::pow(grad_b, 1.0 / d);
  co.at_Ld = std::pow(at, 1.0 / d);
  co.bt_Ld = std::pow(bt, 1.0 / d);

  const double sigma = spec.sigma > 0.0 ? spec.sigma : 2.0;
  double f_int = 0.0;
  if (!spec.f.time_dependent()) {
    f_int = grid.final_time() * power_integral(grid, spec.f.slice(0), sigma);
  } else {
    for (int n = 1; n <= nt; ++n) f_int += tau * power_integral(grid, spec.f.slice(n), sigma);
  }
  spec.f_sigma_norm = std::pow(f_int, 1.0 / sigma);
  return spec;
}

ProblemSpec build_problem(const ProblemConfig& config) {
  const Grid grid = config.grid();
  ProblemFields fields;
  fields.p = SpaceTimeField::from_expression(config.p_expr, grid);
  fields.q = SpaceTimeField::from_expression(config.q_expr, grid);
  fields.a = SpaceTimeField::from_expression(config.a_expr, grid);
  fields.b = SpaceTimeField::from_expression(config.b_expr, grid);
  fields.f = SpaceTimeField::from_expression(config.f_expr, grid);
  fields.u0 = SpaceTimeField::from_expression(config.u0_expr, grid).slice(0);
  std::vector<double> trace;
  for (std::size_t f = 0; f < grid.face_total(); ++f) {
    if (!grid.is_boundary_face(f)) continue;
    const Point pt = grid.face_center(f);
    trace.push_back(config.u0_expr(pt.x, pt.y, 0.0));
  }
  fields.u0_boundary = Eigen::Map<const Eigen::VectorXd>(trace.data(), static_cast<Eigen::Index>(trace.size()));
  ProblemParameters params{config.alpha, config.sigma, config.r, config.d, config.epsilon_schedule()};
  return make_problem(grid, std::move(fields), std::move(params));
}

ProblemSpec swap_phases(const ProblemSpec& spec) {
  ProblemFields fields{spec.exponents.q, spec.exponents.p, spec.coeffs.b, spec.coeffs.a,
                       spec.f,           spec.u0,          spec.u0_boundary};
  ProblemParameters params{spec.coeffs.alpha, spec.sigma, spec.r, spec.coeffs.d, spec.epsilon_schedule};
  return make_problem(spec.grid, std::move(fields), std::move(params));
}

// --- validation -------------------------------------------------------------

bool ValidationReport::accepted() const {
  return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.pass; });
}

const AssumptionCheck* ValidationReport::find(std::string_view assumption) const {
  for (const auto& c : checks)
    if (c.assumption == assumption) return &c;
  return nullptr;
}

std::vector<std::string> ValidationReport::violations() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.pass) out.push_back(c.assumption);
  return out;
}

RInterval admissible_r_interval(int dim, double sigma, double p_minus, double q_minus, double p_plus,
                                double q_plus) {
  if (!(sigma > 2.0)) throw DomainError("admissible_r_interval: sigma must exceed 2");
  RInterval out;
  out.lower = std::max({p_plus, q_plus, 2.0});
  const double n = dim;
  if (sigma < n + 2.0) {
    out.upper = n * (std::min(p_minus, q_minus) * (sigma - 1.0) - sigma + 2.0) / (n + 2.0 - sigma);
  }
  out.empty = out.lower > out.upper;
  return out;
}

RInterval admissible_r_interval(const ProblemSpec& spec) {
  const auto& ex = spec.exponents;
  return admissible_r_interval(spec.dim(), spec.sigma, ex.p_minus, ex.q_minus, ex.p_plus, ex.q_plus);
}

ValidationReport validate(const ProblemSpec& spec) {
  ValidationReport report;
  const Grid& grid = spec.grid;
  const double n = spec.dim();
  const auto& ex = spec.exponents;
  const auto& co = spec.coeffs;
  const auto where = [&](const Extremum& e) { return describe_location(grid, e.cell, e.level); };

  const double exponent_floor = 2.0 * n / (n + 2.0);
  report.checks.push_back({"p_lower_bound", ex.p_minus > exponent_floor, ex.p_minus - exponent_floor, where(ex.p_min_at)});
  report.checks.push_back({"q_lower_bound", ex.q_minus > exponent_floor, ex.q_minus - exponent_floor, where(ex.q_min_at)});

  const double gap_bound = 2.0 / (n + 2.0);
  report.checks.push_back(
      {"balance_condition", ex.gap_max.value < gap_bound, gap_bound - ex.gap_max.value, where(ex.gap_max)});

  report.checks.push_back({"lipschitz_pq", std::isfinite(ex.lip_pq), ex.lip_pq, std::nullopt});

  const double nonneg = std::min(co.a_min.value, co.b_min.value);
  report.checks.push_back({"coefficients_nonnegative", nonneg >= 0.0, nonneg,
                           where(co.a_min.value <= co.b_min.value ? co.a_min : co.b_min)});
  report.checks.push_back({"coefficient_lower_bound", co.alpha > 0.0 && co.sum_min.value >= co.alpha,
                           co.sum_min.value - co.alpha, where(co.sum_min)});

  const double d_bound = 2.0 + 0.5 * (n + 2.0) * (ex.s_over_plus + spec.r);
  const bool norms_finite =
      std::isfinite(co.grad_a_Ld) && std::isfinite(co.grad_b_Ld) && std::isfinite(co.at_Ld) && std::isfinite(co.bt_Ld);
  report.checks.push_back({"coefficient_gradient_integrability", co.d > d_bound && norms_finite, co.d - d_bound,
                           std::nullopt});

  report.checks.push_back({"source_integrability", spec.sigma > 2.0 && std::isfinite(spec.f_sigma_norm),
                           spec.sigma - 2.0, std::nullopt});

  if (spec.sigma > 2.0) {
    const RInterval iv = admissible_r_interval(spec);
    const double margin = iv.empty ? iv.upper - iv.lower : std::min(spec.r - iv.lower, iv.upper - spec.r);
    report.checks.push_back({"r_interval", iv.contains(spec.r), margin, std::nullopt});
  } else {
    report.checks.push_back({"r_interval", false, spec.sigma - 2.0, std::nullopt});
  }

  // Boundary trace of u0, relative to its size.
  double trace_max = 0.0;
  long trace_at = -1;
  for (Eigen::Index k = 0; k < spec.u0_boundary.size(); ++k) {
    if (std::abs(spec.u0_boundary[k]) > trace_max) {
      trace_max = std::abs(spec.u0_boundary[k]);
      trace_at = static_cast<long>(k);
    }
  }
  const double trace_tol = 1e-12 * std::max(1.0, spec.u0.cwiseAbs().maxCoeff());
  std::optional<std::string> trace_loc;
  if (trace_at >= 0) {
    long seen = -1;
    for (std::size_t f = 0; f < grid.face_total(); ++f) {
      if (!grid.is_boundary_face(f) || ++seen != trace_at) continue;
      const Point pt = grid.face_center(f);
      char buf[64];
      std::snprintf(buf, sizeof buf, grid.dim() == 2 ? "x=%.6g,y=%.6g" : "x=%.6g", pt.x, pt.y);
      trace_loc = buf;
      break;
    }
  }
  report.checks.push_back({"u0_boundary", trace_max <= trace_tol, trace_tol - trace_max, trace_loc});

  double eps_margin = spec.epsilon_schedule.empty() ? -1.0 : spec.epsilon_schedule.back();
  for (std::size_t k = 1; k < spec.epsilon_schedule.size(); ++k)
    eps_margin = std::min(eps_margin, spec.epsilon_schedule[k - 1] - spec.epsilon_schedule[k]);
  report.checks.push_back({"epsilon_schedule", eps_margin > 0.0, eps_margin, std::nullopt});
  return report;
}

// --- mollification ----------------------------------------------------------

std::vector<double> mollifier_weights(double width, double spacing) {
  // Offsets k*h with |k h| < width.
  const int m = std::max(0, static_cast<int>(std::ceil(width / spacing)) - 1);
  std::vector<double> w(static_cast<std::size_t>(2 * m + 1));
  double total = 0.0;
  for (int k = -m; k <= m; ++k) {
    const double rho = k * spacing / width;
    const double v = rho * rho < 1.0 ? std::exp(-1.0 / (1.0 - rho * rho)) : 0.0;
    w[static_cast<std::size_t>(k + m)] = v;
    total += v;
  }
  for (auto& v : w) v /= total;
  return w;
}

Eigen::VectorXd mollify_field(const Grid& grid, const Eigen::VectorXd& values, double width, bool odd) {
  if (values.size() != static_cast<Eigen::Index>(grid.cell_count())) throw GridMismatch("mollify_field: size");
  Eigen::VectorXd current = values;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const auto w = mollifier_weights(width, grid.spacing(axis));
    const int m = static_cast<int>(w.size() / 2);
    if (m == 0) continue;
    const int n = grid.cells(axis);
    Eigen::VectorXd next(current.size());
    for (int j = 0; j < grid.cells(1); ++j) {
      for (int i = 0; i < grid.cells(0); ++i) {
        const int pos = axis == 0 ? i : j;
        double acc = 0.0;
        for (int k = -m; k <= m; ++k) {
          int src = pos + k;
          double sign = 1.0;
          if (src < 0) {
            src = -1 - src;
            sign = odd ? -1.0 : 1.0;
          } else if (src >= n) {
            src = 2 * n - 1 - src;
            sign = odd ? -1.0 : 1.0;
          }
          const std::size_t idx = axis == 0 ? grid.index(src, j) : grid.index(i, src);
          acc += w[static_cast<std::size_t>(k + m)] * sign * current[static_cast<Eigen::Index>(idx)];
        }
        next[static_cast<Eigen::Index>(grid.index(i, j))] = acc;
      }
    }
    current = std::move(next);
  }
  return current;
}

ProblemSpec mollify_coefficients(const ProblemSpec& spec, double width) {
  const Grid& grid = spec.grid;
  if (!(width > 0.0)) throw std::invalid_argument("mollify_coefficients: width must be positive");
  double shortest = grid.length(0);
  if (grid.dim() == 2) shortest = std::min(shortest, grid.length(1));
  if (width >= shortest) throw WidthTooLarge("mollify_coefficients: kernel support exceeds the domain");

  const auto smooth = [&grid, width](const SpaceTimeField& field, bool odd) {
    if (!field.time_dependent()) return SpaceTimeField::constant_in_time(mollify_field(grid, field.slice(0), width, odd));
    return SpaceTimeField::from_generator(
        [field, grid, width, odd](int level) { return mollify_field(grid, field.slice(level), width, odd); },
        field.size(), true);
  };

  ProblemFields fields;
  fields.p = spec.exponents.p;
  fields.q = spec.exponents.q;
  fields.a = smooth(spec.coeffs.a, false);
  fields.b = smooth(spec.coeffs.b, false);
  fields.f = smooth(spec.f, false);
  fields.u0 = mollify_field(grid, spec.u0, width, true);
  // The oddly extended field has a zero trace under the ghost convention.
  fields.u0_boundary = Eigen::VectorXd::Zero(spec.u0_boundary.size());
  ProblemParameters params{spec.coeffs.alpha, spec.sigma, spec.r, spec.coeffs.d, spec.epsilon_schedule};
  return make_problem(grid, std::move(fields), std::move(params));
}

}  // namespace dphase
