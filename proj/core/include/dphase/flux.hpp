#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace dphase {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when the flux (or its Jacobian) is requested at eps = 0 and xi = 0
/// with an exponent below 2, where w^{(e-2)/2} is 0 raised to a negative power.
class DegenerateEvaluation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Up to 3 components on the stack.
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Data of the regularized flux at one space-time point. a_eps and b_eps
/// already contain the shift by eps.
struct FluxPoint {
  double p = 2.0;
  double q = 2.0;
  double a_eps = 0.5;
  double b_eps = 0.5;
  double eps = 0.0;
  double r = 2.0;

  /// Shifts raw coefficients a, b by eps.
  static FluxPoint regularized(double p, double q, double a, double b, double eps, double r = 2.0) {
    return {p, q, a + eps, b + eps, eps, r};
  }
};

/// Scalar factor F_eps = a_eps w^{(p-2)/2} + b_eps w^{(q-2)/2} at w = eps^2 + |xi|^2.
/// Requires w > 0 unless both exponents are >= 2.
double flux_coefficient(const FluxPoint& fp, double w);

/// a_eps (p-2) w^{(p-4)/2} + b_eps (q-2) w^{(q-4)/2}: the Jacobian is
/// F_eps I + (this) xi xi^T. Requires w > 0.
double flux_coefficient_slope(const FluxPoint& fp, double w);

/// a_eps w^{p/2}/p + b_eps w^{q/2}/q, whose xi-gradient is F_eps(xi) xi.
double flux_potential(const FluxPoint& fp, double w);

struct FluxEval {
  SmallVector value;
  SmallMatrix jacobian;
  double w_eps = 0.0;
  bool degenerate = false;
};

/// F_eps(z, xi) xi. At eps = 0, xi = 0 with min(p, q) < 2 the value is the
/// zero vector (the limit for p, q > 1) and `degenerate` is set.
FluxEval flux_value(const FluxPoint& fp, const SmallVector& xi);

/// d(F_eps(xi) xi)/d xi, assembled symmetric. Throws DegenerateEvaluation when
/// w = 0 and an exponent is below 2.
SmallMatrix flux_jacobian(const FluxPoint& fp, const SmallVector& xi);

/// (F_eps(xi) xi - F_eps(eta) eta) . (xi - eta); nonnegative.
double monotonicity_gap(const FluxPoint& fp, const SmallVector& xi, const SmallVector& eta);

/// trace(H^2) + (e+r-4)|H eta|^2 + (e-2)(r-2)(eta . H eta)^2 for symmetric H.
/// Throws DomainError unless |eta| <= 1, e > 1, r >= 2.
double hessian_quadratic_form(const SmallMatrix& h, const SmallVector& eta, double e, double r);

/// The lower constant min{1, e-1} in the pointwise bound of
/// hessian_quadratic_form by trace(H^2).
inline double hessian_form_constant(double e) { return e - 1.0 < 1.0 ? e - 1.0 : 1.0; }

struct LogPowerBound {
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 0.0;
};

/// lhs = s^lambda |ln s| and rhs = C (1 + s^{lambda+mu}) with C = 1/(e mu),
/// the exact maximum of s^{-mu}|ln s| on s >= 1 and of s^{mu}|ln s| on s < 1.
/// Throws DomainError unless lambda > 0 and mu in (0, lambda).
LogPowerBound log_power_bound(double xi_norm, double lambda, double mu);

struct NullEpsBound {
  double lower = 0.0;
  double middle = 0.0;
  double upper = 0.0;
  double constant = 0.0;
};

/// Chain a_eps|xi|^{p+s1} + b_eps|xi|^{q+s2} <= F^{(s1,s2)}_eps w_eps
/// <= C + 2 F^{(s1,s2)}_eps |xi|^2 with C = a_eps (2 eps^2)^{(p+s1)/2} +
/// b_eps (2 eps^2)^{(q+s2)/2}.
NullEpsBound null_eps_bound(const FluxPoint& fp, const SmallVector& xi, double s1, double s2);

}  // namespace dphase
