#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dphase/grid.hpp"
#include "dphase/problem.hpp"
#include "dphase/varexp.hpp"

namespace dphase {

class NewtonDiverged : public std::runtime_error {
 public:
  NewtonDiverged(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// CG breakdown or failed factorization; signals a Jacobian that is not SPD.
class LinearSolveFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LinearSolverKind { kAuto, kConjugateGradient, kDirect };

struct NewtonConfig {
  double abs_tol = 1e-8;
  double rel_tol = 1e-12;
  int max_iter = 50;
  double damping = 0.5;
  int max_backtracks = 30;
  /// kAuto: sparse LDL^T in 1D, Jacobi-preconditioned CG in 2D.
  LinearSolverKind linear_solver = LinearSolverKind::kAuto;
  double cg_tol = 1e-12;
  int cg_max_iter = 10000;

  /// Reads newton.abs_tol, newton.rel_tol, newton.max_iter, newton.damping,
  /// newton.max_backtracks, newton.linear_solver (auto|cg|direct),
  /// newton.cg_tol, newton.cg_max_iter.
  static NewtonConfig from_config(const ProblemConfig& config);
  void check() const;
};

/// Coefficients of one time level on faces (arithmetic means of the two
/// adjacent cells; boundary faces take the interior cell) and the source.
struct StepData {
  int level = 0;
  double eps = 0.0;
  Eigen::VectorXd p;
  Eigen::VectorXd q;
  Eigen::VectorXd a_eps;
  Eigen::VectorXd b_eps;
  Eigen::VectorXd f;
};

/// Backward-Euler discretization of  u_t - div(F_eps(z, grad u) grad u) = f
/// with homogeneous Dirichlet data on a cell-centred grid.
///
/// The flux term is G^T W (F_eps(xi) xi) with G the face gradient, so the
/// residual is the gradient of a convex discrete energy and the Jacobian
/// I/tau + G^T W D G is symmetric positive definite for eps > 0.
class DiscreteProblem {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;

  explicit DiscreteProblem(const ProblemSpec& spec);

  const ProblemSpec& spec() const { return *spec_; }
  const DifferenceOperators& operators() const { return ops_; }

  StepData step_data(int level, double eps) const;

  /// F_eps(z, xi) xi at every face.
  FaceField face_flux(const Eigen::VectorXd& u, const StepData& data) const;
  Eigen::VectorXd residual(const Eigen::VectorXd& u_next, const Eigen::VectorXd& u_prev,
                           const StepData& data) const;
  SparseMatrix jacobian(const Eigen::VectorXd& u, const StepData& data) const;
  /// <F_eps(xi) xi, xi> over faces.
  double flux_energy(const Eigen::VectorXd& u, const StepData& data) const;
  /// |<R(u_next), u_next>| evaluated through the discrete energy balance
  ///   (|u_next|^2 - |u_prev|^2)/(2 tau) + |u_next - u_prev|^2/(2 tau)
  ///   + <F xi, xi> - <f, u_next>.
  double energy_residual(const Eigen::VectorXd& u_next, const Eigen::VectorXd& u_prev,
                         const StepData& data) const;
  double norm(const Eigen::VectorXd& cell_values) const;

 private:
  const ProblemSpec* spec_;
  DifferenceOperators ops_;
  std::vector<std::array<long, 2>> face_cells_;
};

/// R(u) = (u - u_prev)/tau - div_h(F_eps(z, grad_h u) grad_h u) - f(., t_level).
Eigen::VectorXd residual(const Eigen::VectorXd& u_next, const Eigen::VectorXd& u_prev, const ProblemSpec& spec,
                         double eps, int level);

struct TimeStepState {
  Eigen::VectorXd u_now;
  Eigen::VectorXd u_prev;
  int step = 0;
  double eps = 0.0;
  int newton_iters = 0;
  std::vector<double> residual_history;
};

/// Damped Newton solve of one implicit step starting from state.u_now.
/// Throws NewtonDiverged or LinearSolveFailed.
TimeStepState newton_step(TimeStepState state, const NewtonConfig& config, const DiscreteProblem& problem);
TimeStepState newton_step(TimeStepState state, const NewtonConfig& config, const ProblemSpec& spec);

struct StepDiagnostics {
  int step = 0;
  double time = 0.0;
  double eps = 0.0;
  int newton_iters = 0;
  double residual = 0.0;
  double energy_residual = 0.0;
  /// max(1, |u^n|): the scale energy_residual is compared against.
  double energy_scale = 1.0;
  std::vector<double> residual_history;
};

struct EvolutionResult {
  Trajectory u;
  std::vector<StepDiagnostics> steps;
  /// |(u^n - u^{n-1})/tau| in L2(Q_T).
  double ut_L2 = 0.0;
  int newton_iters_total = 0;
};

/// Marches n = 1..nt from u0. When `warm_start` is given, its slice n is the
/// Newton initial guess of step n. NewtonDiverged carries the failing step.
EvolutionResult solve_evolution(const ProblemSpec& spec, double eps, const NewtonConfig& config,
                                const Trajectory* warm_start = nullptr);

struct ContinuationOptions {
  /// Certified when the last G_eps is at most this fraction of the first.
  double threshold_ratio = 1e-3;
  /// Consecutive non-decreasing G_eps values that count as a stall.
  int stall_window = 3;
  bool warm_start = true;

  static ContinuationOptions from_config(const ProblemConfig& config);
};

struct ContinuationTrace {
  std::vector<double> eps;
  std::vector<EvolutionResult> solutions;
  /// metrics[k] compares solutions[k + 1] with solutions[k] at eps[k + 1].
  std::vector<ConvergenceMetrics> metrics;
  bool certified = false;
};

class ContinuationStalled : public std::runtime_error {
 public:
  ContinuationStalled(const std::string& what, int level, ContinuationTrace partial)
      : std::runtime_error(what), level_(level), partial_(std::move(partial)) {}
  int level() const { return level_; }
  const ContinuationTrace& partial() const { return partial_; }

 private:
  int level_;
  ContinuationTrace partial_;
};

/// Solves the evolution for each eps of spec.epsilon_schedule (strictly
/// decreasing), warm-starting from the previous level, and records the
/// convergence functionals between consecutive levels.
ContinuationTrace epsilon_continuation(const ProblemSpec& spec, const NewtonConfig& config,
                                       const ContinuationOptions& options = {});

}  // namespace dphase
