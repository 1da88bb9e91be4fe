#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dphase/grid.hpp"
#include "dphase/problem.hpp"
#include "dphase/solver.hpp"
#include "dphase/varexp.hpp"

namespace dphase {

class InadmissibleR : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Regularity functionals of one computed trajectory. Time integrals assign
/// each interval (t_{n-1}, t_n] the value at t_n; gradients are cell-centred.
struct RegularityReport {
  double r = 2.0;
  double eps = 0.0;
  /// max_{n>=1} int |grad u^n|^r
  double sup_r_norm = 0.0;
  /// int |grad u^0|^r
  double initial_r_norm = 0.0;
  /// (s, int_{Q_T} |grad u|^{min(p,q)+r+s}) in the order of the s list.
  std::vector<std::pair<double, double>> improved_modular;
  double ut_L2 = 0.0;
  /// G = a|grad u|^{(p+r-2)/2} + b|grad u|^{(q+r-2)/2}: |G|_{L2(Q_T)},
  /// |grad G|_{L2(Q_T)} (interior face differences) and the combined
  /// L2(0,T;W^{1,2}) norm.
  double G_L2 = 0.0;
  double G_grad_L2 = 0.0;
  double G_L2H1 = 0.0;
  double energy_residual_max = 0.0;
  /// alpha int |grad u|^{min(p,q)+s+r} / (int F^{(r,r)}_eps |u_xx|^2 + 1) over
  /// Q_T for the largest s; both unit constants.
  double interpolation_ratio = 0.0;
  /// Cells dropped next to each wall from Hessian integrals.
  int hessian_margin = 1;
};

/// {0.2, 0.5, 0.8} * 4/(N+2).
std::vector<double> default_s_list(int dim);

/// Throws InadmissibleR when r lies outside admissible_r_interval(spec), and
/// std::invalid_argument when some s lies outside (0, 4/(N+2)).
RegularityReport regularity_report(const Trajectory& u, const ProblemSpec& spec, double eps, double r,
                                   const std::vector<double>& s_list);

/// Cell field G = a|grad u|^{(p+r-2)/2} + b|grad u|^{(q+r-2)/2} at time level n.
Eigen::VectorXd second_order_quantity(const Eigen::VectorXd& u, const ProblemSpec& spec, int level, double r);

struct PreservationVerdict {
  bool pass = false;
  /// max(0, sup_r_norm - initial_r_norm) on the coarsest mesh.
  double fitted_constant = 0.0;
  /// max over meshes of sup_r_norm / (C + initial_r_norm) - 1.
  double worst_exceedance = 0.0;
  std::vector<double> bounds;
};

/// Boundedness of sup_t int |grad u|^r under refinement with the constant
/// fitted on the first (coarsest) report. Needs at least three reports.
PreservationVerdict preservation_check(const std::vector<RegularityReport>& chain, double tolerance = 0.05);

/// Single time slice version of the interpolation ratio with unit constants.
double interpolation_diagnostic(const Eigen::VectorXd& u, const ProblemSpec& spec, int level, double eps, double r,
                                double s, int margin = 1);

/// Exact solution u*(x, t) with derivatives, and the problem data it is
/// manufactured for. The forcing is closed form when `forcing` is set;
/// otherwise it is obtained by applying the continuous operator to u*
/// through centred flux differences of width `fine_step`.
struct MMSCase {
  std::string name;
  std::function<double(Point, double)> solution;
  std::function<Eigen::Vector2d(Point, double)> gradient;
  std::function<double(Point, double)> time_derivative;
  std::function<double(Point, double)> forcing;
  ProblemConfig base;
  double fine_step = 1e-4;
};

/// f* = u*_t - div(F_eps(z, grad u*) grad u*) at a point.
double manufactured_forcing(const MMSCase& mms, Point x, double t, double eps);

/// The case's problem on a given mesh, with f replaced by the manufactured
/// forcing and u0 by u*(., 0).
ProblemSpec manufactured_problem(const MMSCase& mms, int cells, int time_steps, double eps);

struct MeshLevel {
  int cells = 0;
  int time_steps = 0;
};

struct MMSRow {
  int cells = 0;
  double h = 0.0;
  double tau = 0.0;
  double l2_error = 0.0;
  double grad_error = 0.0;
  /// Observed orders against the previous row (0 for the first row).
  double l2_order = 0.0;
  double grad_order = 0.0;
};

std::vector<MMSRow> mms_convergence(const MMSCase& mms, const std::vector<MeshLevel>& chain, double eps,
                                    const NewtonConfig& config);

/// Mesh chain with tau proportional to h^2: time_steps = ceil(T / (c h^2)).
std::vector<MeshLevel> parabolic_chain(const ProblemConfig& base, const std::vector<int>& cells, double c);

struct StabilityRow {
  double width = 0.0;
  ConvergenceMetrics difference;
};

struct StabilityTable {
  std::vector<StabilityRow> rows;
  /// s_under_modular strictly decreases along the rows.
  bool monotone = false;
};

/// Solves with raw data and with data mollified at each width (strictly
/// decreasing) and compares each mollified solution with the raw one.
StabilityTable mollification_stability(const ProblemSpec& spec, const std::vector<double>& widths, double eps,
                                       const NewtonConfig& config);

}  // namespace dphase
