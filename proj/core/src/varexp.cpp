#include "dphase/varexp.hpp"

#include <cmath>

#include "dphase/flux.hpp"

namespace dphase {

double modular(const Grid& grid, const Eigen::VectorXd& v, const Eigen::VectorXd& exponent) {
  const auto n = static_cast<Eigen::Index>(grid.cell_count());
  if (v.size() != n || exponent.size() != n) throw GridMismatch("modular: field and exponent must match the grid");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (v[k] != 0.0) sum += std::pow(std::abs(v[k]), exponent[k]);
  }
  return grid.cell_volume() * sum;
}

double modular(const GridFunction& v, const Eigen::VectorXd& exponent) {
  return modular(v.grid, v.values, exponent);
}

double luxemburg_norm(const Grid& grid, const Eigen::VectorXd& v, const Eigen::VectorXd& exponent,
                      LuxemburgOptions options) {
  const double m = modular(grid, v, exponent);
  if (m == 0.0) return 0.0;
  const double p_min = exponent.minCoeff();
  const double p_max = exponent.maxCoeff();
  const auto excess = [&](double lambda) { return modular(grid, v / lambda, exponent) - 1.0; };

  double lo = std::min(std::pow(m, 1.0 / p_max), std::pow(m, 1.0 / p_min));
  double hi = std::max(std::pow(m, 1.0 / p_max), std::pow(m, 1.0 / p_min));
  if (std::abs(excess(lo)) <= options.tol) return lo;
  if (std::abs(excess(hi)) <= options.tol) return hi;
  // Rounding can put the analytic bracket ends on the wrong side.
  while (excess(lo) < 0.0) lo *= 0.5;
  while (excess(hi) > 0.0) hi *= 2.0;

  double mid = std::sqrt(lo * hi);
  for (int it = 0; it < options.max_iter; ++it) {
    mid = std::sqrt(lo * hi);
    const double e = excess(mid);
    if (std::abs(e) <= options.tol) break;
    if (e > 0.0) lo = mid;
    else hi = mid;
    if (hi <= lo * (1.0 + 1e-16)) break;
  }
  return mid;
}

double luxemburg_norm(const GridFunction& v, const Eigen::VectorXd& exponent, LuxemburgOptions options) {
  return luxemburg_norm(v.grid, v.values, exponent, options);
}

ConvergenceMetrics convergence_metrics(const Trajectory& u, const Trajectory& v, const ProblemSpec& spec,
                                       double eps) {
  require_same_grid(u.grid, v.grid, "convergence_metrics");
  require_same_grid(u.grid, spec.grid, "convergence_metrics");
  if (u.levels() != v.levels() || u.levels() != spec.grid.time_steps() + 1)
    throw GridMismatch("convergence_metrics: trajectories must cover every time level");
  if (eps < 0.0) throw DomainError("convergence_metrics: eps must be nonnegative");

  const Grid& grid = spec.grid;
  const DifferenceOperators ops(grid);
  const int dim = grid.dim();
  const double weight = grid.tau() * grid.cell_volume();
  ConvergenceMetrics out;
  for (int n = 1; n < u.levels(); ++n) {
    const auto& un = u.slices[static_cast<std::size_t>(n)];
    const auto& vn = v.slices[static_cast<std::size_t>(n)];
    if (un == vn) continue;
    const Eigen::MatrixXd gu = ops.cell_gradient(un);
    const Eigen::MatrixXd gv = ops.cell_gradient(vn);
    const Eigen::VectorXd p = spec.exponents.p.slice(n);
    const Eigen::VectorXd q = spec.exponents.q.slice(n);
    const Eigen::VectorXd a = spec.coeffs.a.slice(n);
    const Eigen::VectorXd b = spec.coeffs.b.slice(n);
    double g_sum = 0.0;
    double n_sum = 0.0;
    double s_sum = 0.0;
    for (Eigen::Index c = 0; c < gu.cols(); ++c) {
      const FluxPoint fp = FluxPoint::regularized(p[c], q[c], a[c], b[c], eps);
      const SmallVector xi = gu.col(c).head(dim);
      const SmallVector eta = gv.col(c).head(dim);
      g_sum += monotonicity_gap(fp, xi, eta);
      const double dn = (xi - eta).norm();
      if (dn > 0.0) {
        n_sum += a[c] * std::pow(dn, p[c]) + b[c] * std::pow(dn, q[c]);
        s_sum += std::pow(dn, std::min(p[c], q[c]));
      }
    }
    out.G_eps += weight * g_sum;
    out.N_modular += weight * n_sum;
    out.s_under_modular += weight * s_sum;
  }
  return out;
}

}  // namespace dphase
