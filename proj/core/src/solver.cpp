#include "dphase/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "dphase/flux.hpp"

namespace dphase {

NewtonConfig NewtonConfig::from_config(const ProblemConfig& config) {
  NewtonConfig c;
  c.abs_tol = config.get_double("newton.abs_tol", c.abs_tol);
  c.rel_tol = config.get_double("newton.rel_tol", c.rel_tol);
  c.max_iter = config.get_int("newton.max_iter", c.max_iter);
  c.damping = config.get_double("newton.damping", c.damping);
  c.max_backtracks = config.get_int("newton.max_backtracks", c.max_backtracks);
  c.cg_tol = config.get_double("newton.cg_tol", c.cg_tol);
  c.cg_max_iter = config.get_int("newton.cg_max_iter", c.cg_max_iter);
  if (const auto kind = config.get("newton.linear_solver")) {
    if (*kind == "auto") c.linear_solver = LinearSolverKind::kAuto;
    else if (*kind == "cg") c.linear_solver = LinearSolverKind::kConjugateGradient;
    else if (*kind == "direct") c.linear_solver = LinearSolverKind::kDirect;
    else throw ConfigError("key 'newton.linear_solver': expected auto, cg or direct");
  }
  c.check();
  return c;
}

void NewtonConfig::check() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(cg_tol > 0.0))
    throw std::invalid_argument("NewtonConfig: tolerances must be positive");
  if (!(damping > 0.0 && damping < 1.0)) throw std::invalid_argument("NewtonConfig: damping must lie in (0, 1)");
  if (max_iter < 1 || max_backtracks < 0 || cg_max_iter < 1)
    throw std::invalid_argument("NewtonConfig: iteration limits must be positive");
}

// --- DiscreteProblem --------------------------------------------------------

DiscreteProblem::DiscreteProblem(const ProblemSpec& spec) : spec_(&spec), ops_(spec.grid) {
  face_cells_.reserve(spec.grid.face_total());
  for (std::size_t f = 0; f < spec.grid.face_total(); ++f) face_cells_.push_back(spec.grid.face_cells(f));
}

StepData DiscreteProblem::step_data(int level, double eps) const {
  if (eps < 0.0) throw DomainError("step_data: eps must be nonnegative");
  const auto& spec = *spec_;
  const Eigen::VectorXd p = spec.exponents.p.slice(level);
  const Eigen::VectorXd q = spec.exponents.q.slice(level);
  const Eigen::VectorXd a = spec.coeffs.a.slice(level);
  const Eigen::VectorXd b = spec.coeffs.b.slice(level);
  const auto faces = static_cast<Eigen::Index>(face_cells_.size());
  StepData data;
  data.level = level;
  data.eps = eps;
  data.p.resize(faces);
  data.q.resize(faces);
  data.a_eps.resize(faces);
  data.b_eps.resize(faces);
  const auto face_mean = [](const Eigen::VectorXd& v, const std::array<long, 2>& cells) {
    if (cells[0] < 0) return v[cells[1]];
    if (cells[1] < 0) return v[cells[0]];
    return 0.5 * (v[cells[0]] + v[cells[1]]);
  };
  for (Eigen::Index f = 0; f < faces; ++f) {
    const auto& cells = face_cells_[static_cast<std::size_t>(f)];
    data.p[f] = face_mean(p, cells);
    data.q[f] = face_mean(q, cells);
    data.a_eps[f] = face_mean(a, cells) + eps;
    data.b_eps[f] = face_mean(b, cells) + eps;
  }
  data.f = spec.f.slice(level);
  return data;
}

FaceField DiscreteProblem::face_flux(const Eigen::VectorXd& u, const StepData& data) const {
  FaceField xi = ops_.gradient(u);
  const double eps2 = data.eps * data.eps;
  for (Eigen::Index f = 0; f < xi.cols(); ++f) {
    const FluxPoint fp{data.p[f], data.q[f], data.a_eps[f], data.b_eps[f], data.eps};
    const double w = eps2 + xi.col(f).squaredNorm();
    if (w == 0.0) {
      // Zero gradient: the flux vanishes (limit value when an exponent is below 2).
      xi.col(f).setZero();
      continue;
    }
    xi.col(f) *= flux_coefficient(fp, w);
  }
  return xi;
}

Eigen::VectorXd DiscreteProblem::residual(const Eigen::VectorXd& u_next, const Eigen::VectorXd& u_prev,
                                          const StepData& data) const {
  const double tau = spec_->grid.tau();
  return (u_next - u_prev) / tau - ops_.divergence(face_flux(u_next, data)) - data.f;
}

DiscreteProblem::SparseMatrix DiscreteProblem::jacobian(const Eigen::VectorXd& u, const StepData& data) const {
  const int dim = spec_->grid.dim();
  const FaceField xi = ops_.gradient(u);
  const double eps2 = data.eps * data.eps;
  std::vector<Eigen::Triplet<double>> blocks;
  blocks.reserve(static_cast<std::size_t>(xi.cols() * dim * dim));
  for (Eigen::Index f = 0; f < xi.cols(); ++f) {
    const FluxPoint fp{data.p[f], data.q[f], data.a_eps[f], data.b_eps[f], data.eps};
    const double w = eps2 + xi.col(f).squaredNorm();
    double scalar = 0.0;
    double slope = 0.0;
    if (w == 0.0) {
      if (std::min(fp.p, fp.q) < 2.0)
        throw DegenerateEvaluation("jacobian: zero face gradient at eps = 0 with an exponent below 2");
      scalar = flux_coefficient(fp, 0.0);
    } else {
      scalar = flux_coefficient(fp, w);
      slope = flux_coefficient_slope(fp, w);
    }
    const Eigen::Index row0 = f * dim;
    for (int d = 0; d < dim; ++d) {
      for (int e = 0; e < dim; ++e) {
        const double v = (d == e ? scalar : 0.0) + slope * xi(d, f) * xi(e, f);
        if (v != 0.0) blocks.emplace_back(row0 + d, row0 + e, ops_.face_weight(static_cast<std::size_t>(f)) * v);
      }
    }
  }
  const Eigen::Index rows = xi.cols() * dim;
  SparseMatrix block_diag(rows, rows);
  block_diag.setFromTriplets(blocks.begin(), blocks.end());

  const auto& g = ops_.gradient_matrix();
  const SparseMatrix gc = g;  // column-major copy for the products
  const SparseMatrix gt = gc.transpose();
  SparseMatrix j = gt * (block_diag * gc);
  const double inv_tau = 1.0 / spec_->grid.tau();
  SparseMatrix mass(j.rows(), j.cols());
  mass.setIdentity();
  j += inv_tau * mass;
  const SparseMatrix jt = j.transpose();
  return 0.5 * (j + jt);
}

double DiscreteProblem::flux_energy(const Eigen::VectorXd& u, const StepData& data) const {
  const FaceField xi = ops_.gradient(u);
  return ops_.face_inner(face_flux(u, data), xi);
}

double DiscreteProblem::energy_residual(const Eigen::VectorXd& u_next, const Eigen::VectorXd& u_prev,
                                        const StepData& data) const {
  const double tau = spec_->grid.tau();
  const double storage = (ops_.cell_inner(u_next, u_next) - ops_.cell_inner(u_prev, u_prev)) / (2.0 * tau);
  const Eigen::VectorXd jump = u_next - u_prev;
  const double dissipation = ops_.cell_inner(jump, jump) / (2.0 * tau);
  const double source = ops_.cell_inner(data.f, u_next);
  return std::abs(storage + dissipation + flux_energy(u_next, data) - source);
}

double DiscreteProblem::norm(const Eigen::VectorXd& cell_values) const {
  return l2_norm(spec_->grid, cell_values);
}

Eigen::VectorXd residual(const Eigen::VectorXd& u_next, const Eigen::VectorXd& u_prev, const ProblemSpec& spec,
                         double eps, int level) {
  const DiscreteProblem problem(spec);
  return problem.residual(u_next, u_prev, problem.step_data(level, eps));
}

// --- Newton -----------------------------------------------------------------

namespace {

Eigen::VectorXd solve_linear(const DiscreteProblem::SparseMatrix& j, const Eigen::VectorXd& rhs,
                             const NewtonConfig& config, int dim) {
  LinearSolverKind kind = config.linear_solver;
  if (kind == LinearSolverKind::kAuto)
    kind = dim == 1 ? LinearSolverKind::kDirect : LinearSolverKind::kConjugateGradient;
  if (kind == LinearSolverKind::kDirect) {
    Eigen::SimplicialLDLT<DiscreteProblem::SparseMatrix> ldlt(j);
    if (ldlt.info() != Eigen::Success) throw LinearSolveFailed("LDL^T factorization failed");
    if ((ldlt.vectorD().array() <= 0.0).any()) throw LinearSolveFailed("Jacobian is not positive definite");
    Eigen::VectorXd x = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success) throw LinearSolveFailed("LDL^T solve failed");
    return x;
  }
  Eigen::ConjugateGradient<DiscreteProblem::SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(config.cg_tol);
  cg.setMaxIterations(config.cg_max_iter);
  cg.compute(j);
  Eigen::VectorXd x = cg.solve(rhs);
  // Eigen reports NoConvergence when the tolerance sits below round-off; accept
  // anything within a few orders of the requested tolerance.
  if (cg.info() != Eigen::Success && !(cg.error() <= 1e3 * config.cg_tol))
    throw LinearSolveFailed("conjugate gradient did not converge (relative residual " +
                            std::to_string(cg.error()) + ")");
  if (!x.allFinite()) throw LinearSolveFailed("conjugate gradient produced a non-finite update");
  return x;
}

TimeStepState run_newton(TimeStepState state, const NewtonConfig& config, const DiscreteProblem& problem,
                         const StepData& data) {
  const int dim = problem.spec().grid.dim();
  Eigen::VectorXd res = problem.residual(state.u_now, state.u_prev, data);
  double norm = problem.norm(res);
  state.residual_history.assign(1, norm);
  state.newton_iters = 0;
  if (!std::isfinite(norm)) throw NewtonDiverged("non-finite initial residual at step " + std::to_string(state.step), state.step);
  const double target = config.abs_tol + config.rel_tol * norm;

  while (norm > target) {
    if (state.newton_iters >= config.max_iter)
      throw NewtonDiverged("Newton iteration limit reached at step " + std::to_string(state.step), state.step);
    const Eigen::VectorXd delta = solve_linear(problem.jacobian(state.u_now, data), -res, config, dim);
    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= config.max_backtracks; ++bt) {
      Eigen::VectorXd trial = state.u_now + lambda * delta;
      Eigen::VectorXd trial_res = problem.residual(trial, state.u_prev, data);
      const double trial_norm = problem.norm(trial_res);
      if (std::isfinite(trial_norm) && trial_norm < norm) {
        state.u_now = std::move(trial);
        res = std::move(trial_res);
        norm = trial_norm;
        accepted = true;
        break;
      }
      lambda *= config.damping;
    }
    if (!accepted)
      throw NewtonDiverged("backtracking exhausted at step " + std::to_string(state.step), state.step);
    ++state.newton_iters;
    state.residual_history.push_back(norm);
  }
  return state;
}

}  // namespace

TimeStepState newton_step(TimeStepState state, const NewtonConfig& config, const DiscreteProblem& problem) {
  config.check();
  const StepData data = problem.step_data(state.step, state.eps);
  return run_newton(std::move(state), config, problem, data);
}

TimeStepState newton_step(TimeStepState state, const NewtonConfig& config, const ProblemSpec& spec) {
  const DiscreteProblem problem(spec);
  return newton_step(std::move(state), config, problem);
}

EvolutionResult solve_evolution(const ProblemSpec& spec, double eps, const NewtonConfig& config,
                                const Trajectory* warm_start) {
  config.check();
  const Grid& grid = spec.grid;
  if (warm_start != nullptr) {
    require_same_grid(warm_start->grid, grid, "solve_evolution warm start");
    if (warm_start->levels() != grid.time_steps() + 1) throw GridMismatch("solve_evolution: warm start is incomplete");
  }
  const DiscreteProblem problem(spec);
  EvolutionResult result{Trajectory(grid), {}, 0.0, 0};
  result.u.slices.reserve(static_cast<std::size_t>(grid.time_steps()) + 1);
  result.u.slices.push_back(spec.u0);
  double ut_sq = 0.0;
  for (int n = 1; n <= grid.time_steps(); ++n) {
    const Eigen::VectorXd& prev = result.u.slices.back();
    const StepData data = problem.step_data(n, eps);
    TimeStepState state;
    state.u_prev = prev;
    state.u_now = warm_start != nullptr ? warm_start->slices[static_cast<std::size_t>(n)] : prev;
    state.step = n;
    state.eps = eps;
    state = run_newton(std::move(state), config, problem, data);

    StepDiagnostics diag;
    diag.step = n;
    diag.time = grid.time(n);
    diag.eps = eps;
    diag.newton_iters = state.newton_iters;
    diag.residual = state.residual_history.back();
    diag.energy_residual = problem.energy_residual(state.u_now, prev, data);
    diag.energy_scale = std::max(1.0, problem.norm(state.u_now));
    diag.residual_history = std::move(state.residual_history);
    result.newton_iters_total += diag.newton_iters;
    result.steps.push_back(std::move(diag));

    const Eigen::VectorXd rate = (state.u_now - prev) / grid.tau();
    ut_sq += grid.tau() * grid.cell_volume() * rate.squaredNorm();
    result.u.slices.push_back(std::move(state.u_now));
  }
  result.ut_L2 = std::sqrt(ut_sq);
  return result;
}

// --- continuation -----------------------------------------------------------

ContinuationOptions ContinuationOptions::from_config(const ProblemConfig& config) {
  ContinuationOptions o;
  o.threshold_ratio = config.get_double("continuation.threshold_ratio", o.threshold_ratio);
  o.stall_window = config.get_int("continuation.stall_window", o.stall_window);
  o.warm_start = config.get_int("continuation.warm_start", o.warm_start ? 1 : 0) != 0;
  return o;
}

ContinuationTrace epsilon_continuation(const ProblemSpec& spec, const NewtonConfig& config,
                                       const ContinuationOptions& options) {
  const auto& schedule = spec.epsilon_schedule;
  if (schedule.empty()) throw std::invalid_argument("epsilon_continuation: empty schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0)) throw std::invalid_argument("epsilon_continuation: eps values must be positive");
    if (k > 0 && !(schedule[k] < schedule[k - 1]))
      throw std::invalid_argument("epsilon_continuation: schedule must be strictly decreasing");
  }

  ContinuationTrace trace;
  int non_decreasing = 0;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const Trajectory* warm = (options.warm_start && k > 0) ? &trace.solutions.back().u : nullptr;
    trace.eps.push_back(schedule[k]);
    trace.solutions.push_back(solve_evolution(spec, schedule[k], config, warm));
    if (k == 0) continue;
    trace.metrics.push_back(
        convergence_metrics(trace.solutions[k].u, trace.solutions[k - 1].u, spec, schedule[k]));
    if (trace.metrics.size() >= 2) {
      const double now = trace.metrics.back().G_eps;
      const double before = trace.metrics[trace.metrics.size() - 2].G_eps;
      non_decreasing = now >= before ? non_decreasing + 1 : 0;
      if (non_decreasing >= options.stall_window) {
        const int level = static_cast<int>(k);
        throw ContinuationStalled("G_eps failed to decrease for " + std::to_string(non_decreasing) +
                                      " consecutive eps levels (last eps " + std::to_string(schedule[k]) + ")",
                                  level, trace);
      }
    }
  }
  if (!trace.metrics.empty()) {
    const double first = trace.metrics.front().G_eps;
    trace.certified = trace.metrics.back().G_eps <= options.threshold_ratio * first;
  }
  return trace;
}

}  // namespace dphase
