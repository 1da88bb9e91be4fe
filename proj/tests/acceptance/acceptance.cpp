// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dphase/flux.hpp"
#include "dphase/harness.hpp"
#include "dphase/problem.hpp"
#include "dphase/solver.hpp"
#include "dphase/varexp.hpp"

using namespace dphase;

namespace {

const std::string kFixtures = DPHASE_FIXTURES;
std::uint64_t g_seed = 20240917;

struct Outcome {
  bool pass = false;
  std::string detail;
};

ProblemConfig fixture(const std::string& name) { return load_problem_config(kFixtures + "/" + name + ".cfg"); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SmallVector random_vector(std::mt19937_64& rng, int n, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  SmallVector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  const double norm = v.norm();
  return norm == 0.0 ? v : v * (radius * std::pow(U(rng), 1.0 / n) / norm);
}

// 1 -----------------------------------------------------------------------
Outcome hessian_inequality() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(g_seed + 1);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const long samples = 1000000;
  long violations = 0;
  double worst = 0.0;
  for (long s = 0; s < samples; ++s) {
    const int n = s % 2 == 0 ? 2 : 3;
    SmallMatrix h(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) h(i, k) = h(k, i) = entry(rng);
    SmallVector eta = random_vector(rng, n, 1.0);
    if (eta.norm() > 1.0) eta.normalize();
    const double e = 5.0 - 4.0 * U(rng);  // (1, 5]
    const double r = 2.0 + 6.0 * U(rng);
    const double tr = (h * h).trace();
    const double lhs = hessian_quadratic_form(h, eta, e, r);
    const double rhs = hessian_form_constant(e) * tr;
    if (lhs < rhs - 1e-12 * tr) ++violations;
    if (tr > 0) worst = std::min(worst, (lhs - rhs) / tr);
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 10.0, std::to_string(violations) + " violations in " + std::to_string(samples) +
                                              " samples (N=2,3), min relative slack " + fmt("%.3g", worst) + ", " +
                                              fmt("%.2f", secs) + " s"};
}

// 2 -----------------------------------------------------------------------
Outcome flux_monotonicity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(g_seed + 2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const long samples = 100000;
  long negative = 0, not_strict = 0, strict_cases = 0;
  for (long s = 0; s < samples; ++s) {
    const int n = s % 2 == 0 ? 2 : 3;
    const double floor = 2.0 * n / (n + 2.0);
    const double p = floor + (5.0 - floor) * (1.0 - U(rng));
    const double q = floor + (5.0 - floor) * (1.0 - U(rng));
    const double eps = std::pow(10.0, -6.0 + 6.0 * U(rng));
    const FluxPoint fp = FluxPoint::regularized(p, q, U(rng), U(rng), eps);
    const double radius = std::pow(10.0, -3.0 + 4.0 * U(rng));
    const SmallVector xi = random_vector(rng, n, radius);
    const SmallVector eta = random_vector(rng, n, radius);
    const double gap = monotonicity_gap(fp, xi, eta);
    const double scale = (flux_value(fp, xi).value.norm() + flux_value(fp, eta).value.norm()) * (xi - eta).norm();
    if (gap < -1e-12 * scale) ++negative;
    if (eps >= 1e-4 && (xi - eta).norm() >= 1e-3) {
      ++strict_cases;
      if (!(gap > 0.0)) ++not_strict;
    }
  }
  const double secs = seconds_since(t0);
  return {negative == 0 && not_strict == 0 && secs < 5.0,
          std::to_string(negative) + " negative gaps, " + std::to_string(not_strict) + " non-positive of " +
              std::to_string(strict_cases) + " strict cases, " + fmt("%.2f", secs) + " s"};
}

// 3 -----------------------------------------------------------------------
Outcome jacobian_consistency() {
  std::mt19937_64 rng(g_seed + 3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  const int samples = 10000;
  for (int s = 0; s < samples; ++s) {
    const int n = 1 + s % 3;
    const double floor = 2.0 * n / (n + 2.0);
    const FluxPoint fp = FluxPoint::regularized(floor + (5.0 - floor) * (1.0 - U(rng)),
                                                floor + (5.0 - floor) * (1.0 - U(rng)), U(rng), U(rng),
                                                std::pow(10.0, -3.0 + 3.0 * U(rng)));
    const SmallVector xi = random_vector(rng, n, 3.0);
    const SmallMatrix j = flux_jacobian(fp, xi);
    const double h = 1e-6 * (1.0 + xi.norm());
    SmallMatrix fd(n, n);
    for (int d = 0; d < n; ++d) {
      SmallVector e = SmallVector::Zero(n);
      e[d] = h;
      fd.col(d) = (flux_value(fp, xi + e).value - flux_value(fp, xi - e).value) / (2.0 * h);
    }
    worst = std::max(worst, (fd - j).norm() / j.norm());
  }
  return {worst <= 1e-5, "max relative error " + fmt("%.3g", worst) + " over " + std::to_string(samples) + " samples"};
}

// 4 -----------------------------------------------------------------------
Outcome luxemburg() {
  std::mt19937_64 rng(g_seed + 4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst_closed = 0.0, worst_unit = 0.0;
  for (int s = 0; s < 100; ++s) {
    const Grid g = s % 2 == 0 ? Grid::line(64 + s, 1.0 + U(rng), 1, 1.0) : Grid::square(12 + s % 7, 1.0, 1, 1.0);
    const auto n = static_cast<Eigen::Index>(g.cell_count());
    Eigen::VectorXd v(n);
    const double amp = std::pow(10.0, -2.0 + 4.0 * U(rng));
    for (auto& x : v) x = amp * (2.0 * U(rng) - 1.0);
    const double p0 = 1.1 + 4.0 * U(rng);
    const Eigen::VectorXd pc = Eigen::VectorXd::Constant(n, p0);
    const double closed = std::pow(g.cell_volume() * v.cwiseAbs().array().pow(p0).sum(), 1.0 / p0);
    worst_closed = std::max(worst_closed, std::abs(luxemburg_norm(g, v, pc) - closed) / closed);
    Eigen::VectorXd pv(n);
    for (auto& x : pv) x = 1.1 + 4.0 * U(rng);
    const double lux = luxemburg_norm(g, v, pv);
    worst_unit = std::max(worst_unit, std::abs(modular(g, v / lux, pv) - 1.0));
  }
  return {worst_closed <= 1e-8 && worst_unit <= 1e-9, "closed-form relative error " + fmt("%.3g", worst_closed) +
                                                          ", unit-modular error " + fmt("%.3g", worst_unit) +
                                                          " on 100 fields"};
}

// 5 -----------------------------------------------------------------------
Outcome appendix_bounds() {
  long log_violations = 0, log_checks = 0;
  for (const auto [lambda, mu] : {std::pair{2.0, 0.5}, {1.0, 0.1}, {4.0, 3.0}, {0.5, 0.25}}) {
    for (int k = 0; k <= 4000; ++k) {
      const double s = std::pow(10.0, -8.0 + 16.0 * k / 4000.0);
      const LogPowerBound b = log_power_bound(s, lambda, mu);
      ++log_checks;
      if (b.lhs > b.rhs * (1.0 + 1e-14)) ++log_violations;
    }
  }
  std::mt19937_64 rng(g_seed + 5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  long null_violations = 0, small_violations = 0;
  const long samples = 100000;
  for (long s = 0; s < samples; ++s) {
    const int n = 1 + s % 3;
    const double floor = 2.0 * n / (n + 2.0);
    const FluxPoint fp = FluxPoint::regularized(floor + (5 - floor) * U(rng), floor + (5 - floor) * U(rng), U(rng),
                                                U(rng), std::pow(10.0, -6.0 + 6.0 * U(rng)));
    const SmallVector xi = random_vector(rng, n, std::pow(10.0, -4.0 + 5.0 * U(rng)));
    const NullEpsBound b = null_eps_bound(fp, xi, 4.0 * U(rng), 4.0 * U(rng));
    if (b.lower > b.middle * (1 + 1e-13) || b.middle > b.upper * (1 + 1e-13)) ++null_violations;
    if (xi.norm() <= fp.eps && b.middle > b.constant * (1 + 1e-13)) ++small_violations;
  }
  const bool pass = log_violations == 0 && null_violations == 0 && small_violations == 0;
  return {pass, "log: " + std::to_string(log_violations) + "/" + std::to_string(log_checks) + ", null-eps chain: " +
                    std::to_string(null_violations) + "/" + std::to_string(samples) + ", small-gradient branch: " +
                    std::to_string(small_violations) + " violations"};
}

// 6 -----------------------------------------------------------------------
MMSCase heat_case() {
  MMSCase m;
  m.name = "heat";
  m.base = fixture("mms_heat1d");
  const double pi2 = M_PI * M_PI;
  m.solution = [](Point x, double t) { return std::exp(-t) * std::sin(M_PI * x.x); };
  m.gradient = [](Point x, double t) { return Eigen::Vector2d(M_PI * std::exp(-t) * std::cos(M_PI * x.x), 0.0); };
  m.time_derivative = [](Point x, double t) { return -std::exp(-t) * std::sin(M_PI * x.x); };
  // u_t - u_xx with a + b = 1 and eps = 0
  m.forcing = [pi2](Point x, double t) { return (pi2 - 1.0) * std::exp(-t) * std::sin(M_PI * x.x); };
  return m;
}

std::string orders(const std::vector<MMSRow>& rows) {
  std::string s;
  for (std::size_t k = 1; k < rows.size(); ++k) s += (k > 1 ? "," : "") + fmt("%.3f", rows[k].l2_order);
  return s;
}

Outcome mms_heat() {
  const auto t0 = std::chrono::steady_clock::now();
  const MMSCase m = heat_case();
  const auto rows = mms_convergence(m, parabolic_chain(m.base, {32, 64, 128}, 1.0), 0.0, NewtonConfig{});
  const double secs = seconds_since(t0);
  bool pass = rows.back().l2_error <= 1e-4 && secs < 60.0;
  for (std::size_t k = 1; k < rows.size(); ++k) pass = pass && rows[k].l2_order >= 1.9 && rows[k].l2_order <= 2.1;
  return {pass, "orders " + orders(rows) + ", L2 error at 128 cells " + fmt("%.3g", rows.back().l2_error) + ", " +
                    fmt("%.2f", secs) + " s"};
}

// 7 -----------------------------------------------------------------------
Outcome mms_double_phase() {
  const auto t0 = std::chrono::steady_clock::now();
  MMSCase m;
  m.name = "double_phase";
  m.base = fixture("mms_double_phase2d");
  m.solution = [](Point x, double t) { return std::exp(-t) * std::sin(M_PI * x.x) * std::sin(M_PI * x.y); };
  m.gradient = [](Point x, double t) {
    return Eigen::Vector2d(M_PI * std::exp(-t) * std::cos(M_PI * x.x) * std::sin(M_PI * x.y),
                           M_PI * std::exp(-t) * std::sin(M_PI * x.x) * std::cos(M_PI * x.y));
  };
  m.time_derivative = [](Point x, double t) { return -std::exp(-t) * std::sin(M_PI * x.x) * std::sin(M_PI * x.y); };
  const double eps = m.base.get_double("mms.eps", 0.01);
  const auto rows = mms_convergence(m, parabolic_chain(m.base, {32, 64, 128}, m.base.get_double("mms.c", 2.0)),
                                    eps, NewtonConfig{});
  const double secs = seconds_since(t0);
  bool pass = secs < 300.0;
  for (std::size_t k = 1; k < rows.size(); ++k) pass = pass && rows[k].l2_order >= 1.8;
  return {pass, "p=3, q=2.9, meshes 32/64/128, orders " + orders(rows) + ", L2 error " +
                    fmt("%.3g", rows.back().l2_error) + ", " + fmt("%.1f", secs) + " s"};
}

// 8 -----------------------------------------------------------------------
Outcome energy_identity() {
  long steps = 0, bad = 0;
  double worst = 0.0;
  const auto check = [&](const ProblemSpec& spec, double eps, const NewtonConfig& cfg) {
    const EvolutionResult res = solve_evolution(spec, eps, cfg);
    for (const auto& s : res.steps) {
      ++steps;
      const double ratio = s.energy_residual / (cfg.abs_tol * s.energy_scale);
      worst = std::max(worst, ratio);
      if (ratio > 10.0) ++bad;
    }
  };
  for (const char* name : {"heat1d", "zero", "double_phase2d", "kink", "stalled", "mms_double_phase2d"}) {
    const ProblemConfig cfg = fixture(name);
    const ProblemSpec spec = build_problem(cfg);
    for (const double eps : spec.epsilon_schedule) check(spec, eps, NewtonConfig::from_config(cfg));
  }
  const MMSCase heat = heat_case();
  check(manufactured_problem(heat, 64, 200, 0.0), 0.0, NewtonConfig{});
  return {bad == 0, std::to_string(bad) + " of " + std::to_string(steps) +
                        " accepted steps above 10x tolerance, worst residual/(tol*scale) " + fmt("%.3g", worst)};
}

// 9 -----------------------------------------------------------------------
Outcome continuation_cauchy() {
  const ProblemConfig cfg = fixture("double_phase2d");
  ProblemSpec spec = build_problem(cfg);
  spec.epsilon_schedule = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  const ContinuationTrace trace = epsilon_continuation(spec, NewtonConfig::from_config(cfg));
  bool monotone = true;
  std::string column;
  for (std::size_t k = 0; k < trace.metrics.size(); ++k) {
    column += (k ? "," : "") + fmt("%.2e", trace.metrics[k].s_under_modular);
    if (k > 0 && !(trace.metrics[k].s_under_modular < trace.metrics[k - 1].s_under_modular)) monotone = false;
  }
  const double ratio = trace.metrics.back().s_under_modular / trace.metrics.front().s_under_modular;
  return {monotone && ratio <= 1e-3, "s-modular of successive differences " + column + ", final/initial " +
                                         fmt("%.3g", ratio)};
}

// 10 ----------------------------------------------------------------------
Outcome integrability_preservation() {
  const ProblemConfig base = fixture("double_phase2d");
  const double eps = 0.01;
  const std::vector<double> s_list = {0.2, 0.5, 0.8};
  std::vector<double> scaled;
  for (const double s : s_list) scaled.push_back(s * 4.0 / (base.dim + 2.0));
  std::vector<RegularityReport> chain;
  for (const int refine : {1, 2, 4}) {
    const ProblemSpec spec = build_problem(base.with_mesh(base.nx * refine, base.nt * refine * refine));
    const EvolutionResult res = solve_evolution(spec, eps, NewtonConfig::from_config(base));
    chain.push_back(regularity_report(res.u, spec, eps, base.r, scaled));
  }
  const PreservationVerdict v = preservation_check(chain);
  bool cauchy = true;
  std::string mods;
  for (std::size_t k = 0; k < scaled.size(); ++k) {
    const double m0 = chain[0].improved_modular[k].second;
    const double m1 = chain[1].improved_modular[k].second;
    const double m2 = chain[2].improved_modular[k].second;
    const bool finite = std::isfinite(m0) && std::isfinite(m1) && std::isfinite(m2);
    cauchy = cauchy && finite && std::abs(m2 - m1) < std::abs(m1 - m0);
    mods += (k ? "; " : "") + fmt("%.4g", m0) + "," + fmt("%.4g", m1) + "," + fmt("%.4g", m2);
  }
  return {v.pass && cauchy, "worst exceedance " + fmt("%.2f", 100 * v.worst_exceedance) + "% (fitted C " +
                                fmt("%.3g", v.fitted_constant) + "), improved modulars " + mods};
}

// 11 ----------------------------------------------------------------------
Outcome phase_swap() {
  const ProblemConfig cfg = fixture("double_phase2d");
  ProblemConfig varying = cfg;
  varying.p_expr = Expression::parse("2.6 + 0.3*x*y");
  varying.q_expr = Expression::parse("2.9 - 0.2*x");
  double worst = 0.0;
  for (const ProblemConfig& c : {cfg, varying}) {
    const ProblemSpec spec = build_problem(c);
    const ProblemSpec swapped = swap_phases(spec);
    const double eps = 0.01;
    const EvolutionResult a = solve_evolution(spec, eps, NewtonConfig{});
    const EvolutionResult b = solve_evolution(swapped, eps, NewtonConfig{});
    const RegularityReport ra = regularity_report(a.u, spec, eps, c.r, default_s_list(2));
    const RegularityReport rb = regularity_report(b.u, swapped, eps, c.r, default_s_list(2));
    std::vector<std::pair<double, double>> pairs = {
        {ra.sup_r_norm, rb.sup_r_norm}, {ra.initial_r_norm, rb.initial_r_norm},
        {ra.ut_L2, rb.ut_L2},           {ra.G_L2, rb.G_L2},
        {ra.G_grad_L2, rb.G_grad_L2},   {ra.G_L2H1, rb.G_L2H1},
        {ra.energy_residual_max, rb.energy_residual_max}, {ra.interpolation_ratio, rb.interpolation_ratio}};
    for (std::size_t k = 0; k < ra.improved_modular.size(); ++k)
      pairs.emplace_back(ra.improved_modular[k].second, rb.improved_modular[k].second);
    for (const auto& [x, y] : pairs) {
      const double scale = std::max(std::abs(x), std::abs(y));
      if (scale > 0) worst = std::max(worst, std::abs(x - y) / scale);
    }
  }
  return {worst <= 1e-12, "max relative change " + fmt("%.3g", worst) + " over all reported functionals"};
}

// 12 ----------------------------------------------------------------------
Outcome r_gate() {
  bool pass = true;
  std::string detail;
  struct Row {
    double sigma, lower, upper;
  };
  for (const Row row : {Row{4.0, 2.0, INFINITY}, Row{3.0, 2.0, 6.0}, Row{2.1, 2.0, 2.0 * 2.1 / 1.9}}) {
    const RInterval iv = admissible_r_interval(2, row.sigma, 2, 2, 2, 2);
    const bool ok = !iv.empty && iv.lower == row.lower &&
                    (std::isinf(row.upper) ? std::isinf(iv.upper) : std::abs(iv.upper - row.upper) <= 1e-12);
    pass = pass && ok;
    detail += "sigma=" + fmt("%g", row.sigma) + ":[" + fmt("%g", iv.lower) + "," + fmt("%.4f", iv.upper) + "] ";
  }
  // p in [2.2, 2.6]: the upper end falls below max(p+) = 2.6 as sigma -> 2.
  double empty_at = 0.0;
  double prev_upper = INFINITY;
  bool shrinking = true;
  for (const double sigma : {3.5, 3.0, 2.5, 2.2, 2.1, 2.05, 2.01, 2.001}) {
    const RInterval iv = admissible_r_interval(2, sigma, 2.2, 2.2, 2.6, 2.6);
    shrinking = shrinking && iv.upper < prev_upper;
    prev_upper = iv.upper;
    if (iv.empty && empty_at == 0.0) empty_at = sigma;
    if (empty_at != 0.0 && !iv.empty) shrinking = false;
  }
  pass = pass && shrinking && empty_at > 2.0;
  detail += "p in [2.2,2.6] empty from sigma=" + fmt("%g", empty_at);
  // The gate: validation and the report both reject r = 7 at sigma = 3.
  const ProblemSpec spec = build_problem(fixture("inadmissible_r"));
  const bool validated_out = !validate(spec).find("r_interval")->pass;
  bool report_rejects = false;
  try {
    Trajectory u(spec.grid);
    for (int n = 0; n <= spec.grid.time_steps(); ++n) u.slices.push_back(spec.u0);
    regularity_report(u, spec, 0.0, 7.0, {0.5});
  } catch (const InadmissibleR&) {
    report_rejects = true;
  }
  bool throws_at_two = false;
  try {
    admissible_r_interval(2, 2.0, 2, 2, 2, 2);
  } catch (const DomainError&) {
    throws_at_two = true;
  }
  pass = pass && validated_out && report_rejects && throws_at_two;
  detail += validated_out && report_rejects ? ", r=7 at sigma=3 rejected" : ", r=7 at sigma=3 NOT rejected";
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_seed = std::strtoull(argv[1], nullptr, 10);
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "pointwise Hessian inequality", hessian_inequality},
      {2, "flux monotonicity", flux_monotonicity},
      {3, "Jacobian vs finite differences", jacobian_consistency},
      {4, "Luxemburg norm", luxemburg},
      {5, "log and null-eps pointwise bounds", appendix_bounds},
      {6, "MMS heat equation", mms_heat},
      {7, "MMS double phase", mms_double_phase},
      {8, "discrete energy identity", energy_identity},
      {9, "eps-continuation Cauchy property", continuation_cauchy},
      {10, "gradient integrability preservation", integrability_preservation},
      {11, "phase-swap symmetry", phase_swap},
      {12, "admissible-r gate", r_gate},
  };
  int failed = 0;
  std::printf("seed %llu\n", static_cast<unsigned long long>(g_seed));
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s [%2d] %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
