#include "dphase/harness.hpp"

#include <algorithm>
#include <cmath>

#include "dphase/flux.hpp"

namespace dphase {

namespace {

// Squared magnitude of the cell-centred gradient.
Eigen::VectorXd gradient_squared(const DifferenceOperators& ops, const Eigen::VectorXd& u) {
  return ops.cell_gradient(u).colwise().squaredNorm().transpose();
}

bool interior_cell(const Grid& grid, std::size_t cell, int margin) {
  const auto [i, j] = grid.cell_ij(cell);
  if (i < margin || i >= grid.cells(0) - margin) return false;
  if (grid.dim() == 2 && (j < margin || j >= grid.cells(1) - margin)) return false;
  return true;
}

// Sum over interior faces of |(G_R - G_L)/h|^2, times the cell volume.
double interior_gradient_squared(const Grid& grid, const Eigen::VectorXd& g) {
  double sum = 0.0;
  for (std::size_t f = 0; f < grid.face_total(); ++f) {
    const auto cells = grid.face_cells(f);
    if (cells[0] < 0 || cells[1] < 0) continue;
    const double h = grid.spacing(grid.face_axis(f));
    const double diff = (g[cells[1]] - g[cells[0]]) / h;
    sum += diff * diff;
  }
  return sum * grid.cell_volume();
}

// int F^{(r,r)}_eps |u_xx|^2 over interior cells at one level.
double weighted_hessian_integral(const DifferenceOperators& ops, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& grad2, const ProblemSpec& spec, int level, double eps,
                                 double r, int margin) {
  const Grid& grid = spec.grid;
  const HessianField hess = ops.hessian(u);
  const Eigen::VectorXd p = spec.exponents.p.slice(level);
  const Eigen::VectorXd q = spec.exponents.q.slice(level);
  const Eigen::VectorXd a = spec.coeffs.a.slice(level);
  const Eigen::VectorXd b = spec.coeffs.b.slice(level);
  double sum = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!interior_cell(grid, c, margin)) continue;
    const auto k = static_cast<Eigen::Index>(c);
    const double w = eps * eps + grad2[k];
    const double h2 = hess.frobenius_squared(c);
    if (h2 == 0.0) continue;
    const FluxPoint fp = FluxPoint::regularized(p[k] + r, q[k] + r, a[k], b[k], eps);
    sum += flux_coefficient(fp, w) * h2;
  }
  return sum * grid.cell_volume();
}

double improved_power_integral(const Eigen::VectorXd& grad2, const Eigen::VectorXd& s_under, double r, double s,
                               double cell_volume) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < grad2.size(); ++c) {
    if (grad2[c] > 0.0) sum += std::pow(grad2[c], 0.5 * (s_under[c] + r + s));
  }
  return sum * cell_volume;
}

double power_of_norm_integral(const Eigen::VectorXd& grad2, double r, double cell_volume) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < grad2.size(); ++c) {
    if (grad2[c] > 0.0) sum += std::pow(grad2[c], 0.5 * r);
  }
  return sum * cell_volume;
}

void check_s_list(int dim, const std::vector<double>& s_list) {
  const double upper = 4.0 / (dim + 2.0);
  for (const double s : s_list) {
    if (!(s > 0.0 && s < upper))
      throw std::invalid_argument("s = " + std::to_string(s) + " lies outside (0, 4/(N+2))");
  }
}

}  // namespace

std::vector<double> default_s_list(int dim) {
  const double upper = 4.0 / (dim + 2.0);
  return {0.2 * upper, 0.5 * upper, 0.8 * upper};
}

Eigen::VectorXd second_order_quantity(const Eigen::VectorXd& u, const ProblemSpec& spec, int level, double r) {
  const DifferenceOperators ops(spec.grid);
  const Eigen::VectorXd grad2 = gradient_squared(ops, u);
  const Eigen::VectorXd p = spec.exponents.p.slice(level);
  const Eigen::VectorXd q = spec.exponents.q.slice(level);
  const Eigen::VectorXd a = spec.coeffs.a.slice(level);
  const Eigen::VectorXd b = spec.coeffs.b.slice(level);
  Eigen::VectorXd g(grad2.size());
  for (Eigen::Index c = 0; c < g.size(); ++c) {
    g[c] = a[c] * std::pow(grad2[c], 0.25 * (p[c] + r - 2.0)) + b[c] * std::pow(grad2[c], 0.25 * (q[c] + r - 2.0));
  }
  return g;
}

RegularityReport regularity_report(const Trajectory& u, const ProblemSpec& spec, double eps, double r,
                                   const std::vector<double>& s_list) {
  require_same_grid(u.grid, spec.grid, "regularity_report");
  const Grid& grid = spec.grid;
  if (u.levels() != grid.time_steps() + 1) throw GridMismatch("regularity_report: trajectory is incomplete");
  if (spec.sigma > 2.0) {
    const RInterval iv = admissible_r_interval(spec);
    if (!iv.contains(r))
      throw InadmissibleR("r = " + std::to_string(r) + " is outside the admissible interval [" +
                          std::to_string(iv.lower) + ", " + std::to_string(iv.upper) + "]");
  } else {
    throw InadmissibleR("no admissible r: sigma must exceed 2");
  }
  check_s_list(grid.dim(), s_list);

  const DiscreteProblem problem(spec);
  const auto& ops = problem.operators();
  const double tau = grid.tau();
  const double vol = grid.cell_volume();
  const double s_max = s_list.empty() ? 0.0 : *std::max_element(s_list.begin(), s_list.end());

  RegularityReport rep;
  rep.r = r;
  rep.eps = eps;
  rep.initial_r_norm = power_of_norm_integral(gradient_squared(ops, u.slices[0]), r, vol);
  for (const double s : s_list) rep.improved_modular.emplace_back(s, 0.0);

  double ut_sq = 0.0;
  double g_sq = 0.0;
  double g_grad_sq = 0.0;
  double interp_num = 0.0;
  double interp_den = 0.0;
  for (int n = 1; n < u.levels(); ++n) {
    const auto& un = u.slices[static_cast<std::size_t>(n)];
    const auto& prev = u.slices[static_cast<std::size_t>(n - 1)];
    const Eigen::VectorXd grad2 = gradient_squared(ops, un);
    const Eigen::VectorXd s_under = spec.exponents.s_under(n);

    rep.sup_r_norm = std::max(rep.sup_r_norm, power_of_norm_integral(grad2, r, vol));
    for (auto& [s, value] : rep.improved_modular) value += tau * improved_power_integral(grad2, s_under, r, s, vol);
    ut_sq += tau * vol * ((un - prev) / tau).squaredNorm();

    const Eigen::VectorXd g = second_order_quantity(un, spec, n, r);
    g_sq += tau * vol * g.squaredNorm();
    g_grad_sq += tau * interior_gradient_squared(grid, g);

    const StepData data = problem.step_data(n, eps);
    rep.energy_residual_max = std::max(rep.energy_residual_max, problem.energy_residual(un, prev, data));

    interp_num += tau * spec.coeffs.alpha * improved_power_integral(grad2, s_under, r, s_max, vol);
    interp_den += tau * weighted_hessian_integral(ops, un, grad2, spec, n, eps, r, rep.hessian_margin);
  }
  rep.ut_L2 = std::sqrt(ut_sq);
  rep.G_L2 = std::sqrt(g_sq);
  rep.G_grad_L2 = std::sqrt(g_grad_sq);
  rep.G_L2H1 = std::sqrt(g_sq + g_grad_sq);
  rep.interpolation_ratio = interp_num / (interp_den + 1.0);
  return rep;
}

PreservationVerdict preservation_check(const std::vector<RegularityReport>& chain, double tolerance) {
  if (chain.size() < 3) throw std::invalid_argument("preservation_check: needs at least three meshes");
  PreservationVerdict v;
  v.fitted_constant = std::max(0.0, chain.front().sup_r_norm - chain.front().initial_r_norm);
  v.pass = true;
  v.worst_exceedance = -std::numeric_limits<double>::infinity();
  for (const auto& rep : chain) {
    const double bound = v.fitted_constant + rep.initial_r_norm;
    v.bounds.push_back(bound);
    const double exceed = bound > 0.0 ? rep.sup_r_norm / bound - 1.0 : (rep.sup_r_norm > 0.0 ? 1.0 : 0.0);
    v.worst_exceedance = std::max(v.worst_exceedance, exceed);
    if (exceed > tolerance) v.pass = false;
  }
  return v;
}

double interpolation_diagnostic(const Eigen::VectorXd& u, const ProblemSpec& spec, int level, double eps, double r,
                                double s, int margin) {
  check_s_list(spec.grid.dim(), {s});
  const DifferenceOperators ops(spec.grid);
  const Eigen::VectorXd grad2 = gradient_squared(ops, u);
  const double vol = spec.grid.cell_volume();
  const double num = spec.coeffs.alpha * improved_power_integral(grad2, spec.exponents.s_under(level), r, s, vol);
  const double den = weighted_hessian_integral(ops, u, grad2, spec, level, eps, r, margin);
  return num / (den + 1.0);
}

// --- manufactured solutions -------------------------------------------------

double manufactured_forcing(const MMSCase& mms, Point x, double t, double eps) {
  if (mms.forcing) return mms.forcing(x, t);
  const auto& cfg = mms.base;
  const double h = mms.fine_step;
  const auto flux = [&](Point y) {
    const Eigen::Vector2d g = mms.gradient(y, t);
    const double gx = g[0];
    const double gy = cfg.dim == 2 ? g[1] : 0.0;
    const FluxPoint fp = FluxPoint::regularized(cfg.p_expr(y.x, y.y, t), cfg.q_expr(y.x, y.y, t),
                                                cfg.a_expr(y.x, y.y, t), cfg.b_expr(y.x, y.y, t), eps);
    const double w = eps * eps + gx * gx + gy * gy;
    const double coeff = w == 0.0 ? 0.0 : flux_coefficient(fp, w);
    return Eigen::Vector2d(coeff * gx, coeff * gy);
  };
  double div = (flux({x.x + 0.5 * h, x.y})[0] - flux({x.x - 0.5 * h, x.y})[0]) / h;
  if (cfg.dim == 2) div += (flux({x.x, x.y + 0.5 * h})[1] - flux({x.x, x.y - 0.5 * h})[1]) / h;
  return mms.time_derivative(x, t) - div;
}

ProblemSpec manufactured_problem(const MMSCase& mms, int cells, int time_steps, double eps) {
  const ProblemConfig cfg = mms.base.with_mesh(cells, time_steps);
  const Grid grid = cfg.grid();
  ProblemFields fields;
  fields.p = SpaceTimeField::from_expression(cfg.p_expr, grid);
  fields.q = SpaceTimeField::from_expression(cfg.q_expr, grid);
  fields.a = SpaceTimeField::from_expression(cfg.a_expr, grid);
  fields.b = SpaceTimeField::from_expression(cfg.b_expr, grid);
  fields.f = SpaceTimeField::from_generator(
      [mms, grid, eps](int level) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(grid.cell_count()));
        for (std::size_t c = 0; c < grid.cell_count(); ++c)
          v[static_cast<Eigen::Index>(c)] = manufactured_forcing(mms, grid.center(c), grid.time(level), eps);
        return v;
      },
      grid.cell_count(), true);
  fields.u0.resize(static_cast<Eigen::Index>(grid.cell_count()));
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    fields.u0[static_cast<Eigen::Index>(c)] = mms.solution(grid.center(c), 0.0);
  std::vector<double> trace;
  for (std::size_t f = 0; f < grid.face_total(); ++f)
    if (grid.is_boundary_face(f)) trace.push_back(mms.solution(grid.face_center(f), 0.0));
  fields.u0_boundary = Eigen::Map<const Eigen::VectorXd>(trace.data(), static_cast<Eigen::Index>(trace.size()));
  ProblemParameters params{cfg.alpha, cfg.sigma, cfg.r, cfg.d, cfg.epsilon_schedule()};
  return make_problem(grid, std::move(fields), std::move(params));
}

std::vector<MeshLevel> parabolic_chain(const ProblemConfig& base, const std::vector<int>& cells, double c) {
  std::vector<MeshLevel> chain;
  for (const int n : cells) {
    const double h = base.Lx / n;
    const int steps = static_cast<int>(std::ceil(base.T / (c * h * h) - 1e-9));
    chain.push_back({n, std::max(1, steps)});
  }
  return chain;
}

std::vector<MMSRow> mms_convergence(const MMSCase& mms, const std::vector<MeshLevel>& chain, double eps,
                                    const NewtonConfig& config) {
  std::vector<MMSRow> rows;
  for (const auto& level : chain) {
    const ProblemSpec spec = manufactured_problem(mms, level.cells, level.time_steps, eps);
    const Grid& grid = spec.grid;
    const EvolutionResult result = solve_evolution(spec, eps, config);
    const Eigen::VectorXd& u_final = result.u.slices.back();
    const double t_final = grid.final_time();

    Eigen::VectorXd err(u_final.size());
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const auto k = static_cast<Eigen::Index>(c);
      err[k] = u_final[k] - mms.solution(grid.center(c), t_final);
    }
    const DifferenceOperators ops(grid);
    FaceField grad_err = ops.gradient(u_final);
    for (Eigen::Index f = 0; f < grad_err.cols(); ++f) {
      const Eigen::Vector2d exact = mms.gradient(grid.face_center(static_cast<std::size_t>(f)), t_final);
      grad_err.col(f) -= exact.head(grid.dim());
    }

    MMSRow row;
    row.cells = level.cells;
    row.h = grid.spacing(0);
    row.tau = grid.tau();
    row.l2_error = l2_norm(grid, err);
    row.grad_error = std::sqrt(ops.face_inner(grad_err, grad_err));
    if (!rows.empty()) {
      const auto& prev = rows.back();
      const double ratio = std::log(prev.h / row.h);
      row.l2_order = std::log(prev.l2_error / row.l2_error) / ratio;
      row.grad_order = std::log(prev.grad_error / row.grad_error) / ratio;
    }
    rows.push_back(row);
  }
  return rows;
}

StabilityTable mollification_stability(const ProblemSpec& spec, const std::vector<double>& widths, double eps,
                                       const NewtonConfig& config) {
  for (std::size_t k = 1; k < widths.size(); ++k) {
    if (!(widths[k] < widths[k - 1]))
      throw std::invalid_argument("mollification_stability: widths must be strictly decreasing");
  }
  StabilityTable table;
  // Fail fast on the widest kernel before any solve.
  if (!widths.empty()) (void)mollify_coefficients(spec, widths.front());
  const EvolutionResult raw = solve_evolution(spec, eps, config);
  for (const double width : widths) {
    const ProblemSpec smoothed = mollify_coefficients(spec, width);
    const EvolutionResult sol = solve_evolution(smoothed, eps, config);
    table.rows.push_back({width, convergence_metrics(sol.u, raw.u, spec, eps)});
  }
  table.monotone = !table.rows.empty();
  for (std::size_t k = 1; k < table.rows.size(); ++k) {
    if (!(table.rows[k].difference.s_under_modular < table.rows[k - 1].difference.s_under_modular))
      table.monotone = false;
  }
  return table;
}

}  // namespace dphase
