#pragma once

#include <Eigen/Core>

#include "dphase/grid.hpp"
#include "dphase/problem.hpp"

namespace dphase {

/// Midpoint approximation of the modular  int_Omega |v|^{p(x)} dx.
double modular(const Grid& grid, const Eigen::VectorXd& v, const Eigen::VectorXd& exponent);
double modular(const GridFunction& v, const Eigen::VectorXd& exponent);

struct LuxemburgOptions {
  /// Stop once |modular(v / lambda) - 1| <= tol.
  double tol = 1e-10;
  int max_iter = 200;
};

/// inf{lambda > 0 : modular(v / lambda) <= 1}, by bisection on log(lambda)
/// inside [m^{1/p_max}, m^{1/p_min}] (ordered), m = modular(v). Zero field -> 0.
double luxemburg_norm(const Grid& grid, const Eigen::VectorXd& v, const Eigen::VectorXd& exponent,
                      LuxemburgOptions options = {});
double luxemburg_norm(const GridFunction& v, const Eigen::VectorXd& exponent, LuxemburgOptions options = {});

struct ConvergenceMetrics {
  /// int_{Q_T} (F_eps(z, grad u) grad u - F_eps(z, grad v) grad v) . grad(u - v)
  double G_eps = 0.0;
  /// int_{Q_T} a |grad(u - v)|^p + b |grad(u - v)|^q
  double N_modular = 0.0;
  /// int_{Q_T} |grad(u - v)|^{min(p, q)}
  double s_under_modular = 0.0;
};

/// Functionals comparing two trajectories on the same grid. Gradients are
/// cell-centred averages of face gradients; the time integral assigns each
/// interval (t_{n-1}, t_n] the implicit value at t_n.
ConvergenceMetrics convergence_metrics(const Trajectory& u, const Trajectory& v, const ProblemSpec& spec,
                                       double eps);

}  // namespace dphase
