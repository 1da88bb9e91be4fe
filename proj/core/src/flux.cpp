#include "dphase/flux.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dphase {

double flux_coefficient(const FluxPoint& fp, double w) {
  return fp.a_eps * std::pow(w, 0.5 * (fp.p - 2.0)) + fp.b_eps * std::pow(w, 0.5 * (fp.q - 2.0));
}

double flux_coefficient_slope(const FluxPoint& fp, double w) {
  return fp.a_eps * (fp.p - 2.0) * std::pow(w, 0.5 * (fp.p - 4.0)) +
         fp.b_eps * (fp.q - 2.0) * std::pow(w, 0.5 * (fp.q - 4.0));
}

double flux_potential(const FluxPoint& fp, double w) {
  return fp.a_eps * std::pow(w, 0.5 * fp.p) / fp.p + fp.b_eps * std::pow(w, 0.5 * fp.q) / fp.q;
}

FluxEval flux_value(const FluxPoint& fp, const SmallVector& xi) {
  FluxEval out;
  out.w_eps = fp.eps * fp.eps + xi.squaredNorm();
  if (out.w_eps == 0.0 && std::min(fp.p, fp.q) < 2.0) {
    out.value = SmallVector::Zero(xi.size());
    out.degenerate = true;
    return out;
  }
  out.value = flux_coefficient(fp, out.w_eps) * xi;
  return out;
}

SmallMatrix flux_jacobian(const FluxPoint& fp, const SmallVector& xi) {
  const double w = fp.eps * fp.eps + xi.squaredNorm();
  const auto n = xi.size();
  if (w == 0.0) {
    if (std::min(fp.p, fp.q) < 2.0)
      throw DegenerateEvaluation("flux_jacobian: eps = 0 and xi = 0 with min(p, q) < 2");
    // Terms with exponent > 2 vanish; exponent == 2 contributes its coefficient.
    return flux_coefficient(fp, 0.0) * SmallMatrix::Identity(n, n);
  }
  SmallMatrix jac = flux_coefficient(fp, w) * SmallMatrix::Identity(n, n);
  jac.noalias() += flux_coefficient_slope(fp, w) * (xi * xi.transpose());
  return jac;
}

double monotonicity_gap(const FluxPoint& fp, const SmallVector& xi, const SmallVector& eta) {
  const SmallVector diff = xi - eta;
  return (flux_value(fp, xi).value - flux_value(fp, eta).value).dot(diff);
}

double hessian_quadratic_form(const SmallMatrix& h, const SmallVector& eta, double e, double r) {
  if (!(eta.norm() <= 1.0 + 1e-12)) throw DomainError("hessian_quadratic_form: |eta| must not exceed 1");
  if (!(e > 1.0)) throw DomainError("hessian_quadratic_form: exponent must exceed 1");
  if (!(r >= 2.0)) throw DomainError("hessian_quadratic_form: r must be at least 2");
  if (h.rows() != h.cols() || h.rows() != eta.size())
    throw DomainError("hessian_quadratic_form: dimension mismatch");
  const SmallVector h_eta = h * eta;
  const double quad = eta.dot(h_eta);
  return (h * h).trace() + (e + r - 4.0) * h_eta.squaredNorm() + (e - 2.0) * (r - 2.0) * quad * quad;
}

LogPowerBound log_power_bound(double xi_norm, double lambda, double mu) {
  if (!(lambda > 0.0)) throw DomainError("log_power_bound: lambda must be positive");
  if (!(mu > 0.0 && mu < lambda)) throw DomainError("log_power_bound: mu must lie in (0, lambda)");
  if (!(xi_norm >= 0.0)) throw DomainError("log_power_bound: |xi| must be nonnegative");
  LogPowerBound out;
  out.constant = 1.0 / (std::numbers::e * mu);
  out.lhs = xi_norm == 0.0 ? 0.0 : std::pow(xi_norm, lambda) * std::abs(std::log(xi_norm));
  out.rhs = out.constant * (1.0 + std::pow(xi_norm, lambda + mu));
  return out;
}

NullEpsBound null_eps_bound(const FluxPoint& fp, const SmallVector& xi, double s1, double s2) {
  const double xi2 = xi.squaredNorm();
  const double xi_norm = std::sqrt(xi2);
  const double w = fp.eps * fp.eps + xi2;
  const double ep = fp.p + s1;
  const double eq = fp.q + s2;

  // F^{(s1,s2)} |xi|^2, taking the xi -> 0 limit when w = 0.
  const auto weighted = [&](double coeff, double e) {
    return xi2 == 0.0 ? 0.0 : coeff * std::pow(w, 0.5 * (e - 2.0)) * xi2;
  };

  NullEpsBound out;
  out.lower = fp.a_eps * std::pow(xi_norm, ep) + fp.b_eps * std::pow(xi_norm, eq);
  out.middle = fp.a_eps * std::pow(w, 0.5 * ep) + fp.b_eps * std::pow(w, 0.5 * eq);
  const double two_eps2 = 2.0 * fp.eps * fp.eps;
  out.constant = fp.a_eps * std::pow(two_eps2, 0.5 * ep) + fp.b_eps * std::pow(two_eps2, 0.5 * eq);
  out.upper = out.constant + 2.0 * (weighted(fp.a_eps, ep) + weighted(fp.b_eps, eq));
  return out;
}

}  // namespace dphase
