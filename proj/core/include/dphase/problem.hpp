#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dphase/expression.hpp"
#include "dphase/grid.hpp"

namespace dphase {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WidthTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parsed problem configuration: flat `key = value` lines, `#` comments.
///
/// Required keys: dim, nx, nt, T, p.expr, q.expr, a.expr, b.expr, u0.expr,
/// alpha, sigma, r, d. Optional: ny (defaults to nx), Lx, Ly (default 1),
/// f.expr (default 0), eps.start, eps.factor, eps.count, eps.list (comma
/// separated, overrides the geometric schedule), seed, and the namespaced
/// tuning keys newton.*, report.*, mms.*, stability.*, continuation.*.
struct ProblemConfig {
  int dim = 1;
  int nx = 0;
  int ny = 0;
  int nt = 0;
  double T = 0.0;
  double Lx = 1.0;
  double Ly = 1.0;
  Expression p_expr;
  Expression q_expr;
  Expression a_expr;
  Expression b_expr;
  Expression f_expr;
  Expression u0_expr;
  double alpha = 0.0;
  double sigma = 0.0;
  double r = 0.0;
  double d = 0.0;
  double eps_start = 0.1;
  double eps_factor = 0.1;
  int eps_count = 5;
  std::vector<double> eps_list;
  std::uint64_t seed = 1;
  /// Every key as written, for namespaced options read by other modules.
  std::map<std::string, std::string> entries;

  std::vector<double> epsilon_schedule() const;
  Grid grid() const;
  /// Copy with nx (and ny in 2D) set to `cells` and nt set to `time_steps`.
  ProblemConfig with_mesh(int cells, int time_steps) const;

  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;
};

ProblemConfig parse_problem_config(std::string_view text);
ProblemConfig load_problem_config(const std::string& path);
/// Canonical text form; parse_problem_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ProblemConfig& config);
std::vector<double> parse_number_list(std::string_view text);

/// A scalar field sampled at cell centres for each time level 0..nt.
/// Slices are produced on demand; time-independent fields are cached once.
class SpaceTimeField {
 public:
  using Generator = std::function<Eigen::VectorXd(int level)>;

  SpaceTimeField() = default;
  static SpaceTimeField from_expression(const Expression& expr, const Grid& grid);
  static SpaceTimeField constant_in_time(Eigen::VectorXd values);
  static SpaceTimeField from_slices(std::vector<Eigen::VectorXd> slices);
  static SpaceTimeField from_generator(Generator generator, std::size_t size, bool time_dependent);

  Eigen::VectorXd slice(int level) const;
  bool time_dependent() const { return time_dependent_; }
  std::size_t size() const { return size_; }
  /// Number of stored slices when built from samples (0 otherwise).
  std::size_t stored_levels() const { return slices_ ? slices_->size() : 0; }

 private:
  std::shared_ptr<const Eigen::VectorXd> static_values_;
  std::shared_ptr<const std::vector<Eigen::VectorXd>> slices_;
  Generator generator_;
  std::size_t size_ = 0;
  bool time_dependent_ = false;
};

struct Extremum {
  double value = 0.0;
  std::size_t cell = 0;
  int level = 0;
};

struct ExponentField {
  SpaceTimeField p;
  SpaceTimeField q;
  double p_minus = 0.0;
  double p_plus = 0.0;
  double q_minus = 0.0;
  double q_plus = 0.0;
  Extremum p_min_at;
  Extremum q_min_at;
  Extremum gap_max;  // max |p - q|
  /// Largest nearest-neighbour difference quotient of p and q in space and time.
  double lip_pq = 0.0;
  double s_over_plus = 0.0;
  double s_under_minus = 0.0;

  Eigen::VectorXd s_under(int level) const;
  Eigen::VectorXd s_over(int level) const;
};

struct CoefficientField {
  SpaceTimeField a;
  SpaceTimeField b;
  double alpha = 0.0;
  double d = 0.0;
  Extremum a_min;
  Extremum b_min;
  Extremum sum_min;  // min (a + b)
  double a_plus = 0.0;
  double b_plus = 0.0;
  /// Discrete L^d(Q_T) norms of |grad a|, |grad b|, a_t, b_t.
  double grad_a_Ld = 0.0;
  double grad_b_Ld = 0.0;
  double at_Ld = 0.0;
  double bt_Ld = 0.0;
};

struct ProblemSpec {
  Grid grid;
  ExponentField exponents;
  CoefficientField coeffs;
  SpaceTimeField f;
  Eigen::VectorXd u0;
  /// u0 evaluated at the centres of the boundary faces.
  Eigen::VectorXd u0_boundary;
  double sigma = 0.0;
  double r = 0.0;
  std::vector<double> epsilon_schedule;
  double f_sigma_norm = 0.0;

  int dim() const { return grid.dim(); }
};

struct ProblemFields {
  SpaceTimeField p;
  SpaceTimeField q;
  SpaceTimeField a;
  SpaceTimeField b;
  SpaceTimeField f;
  Eigen::VectorXd u0;
  Eigen::VectorXd u0_boundary;
};

struct ProblemParameters {
  double alpha = 0.0;
  double sigma = 0.0;
  double r = 0.0;
  double d = 0.0;
  std::vector<double> epsilon_schedule;
};

/// Assembles a spec from sampled fields and computes all derived quantities
/// (extrema, Lipschitz estimate, L^d norms). Throws GridMismatch when a field
/// does not match the grid.
ProblemSpec make_problem(const Grid& grid, ProblemFields fields, ProblemParameters params);
ProblemSpec build_problem(const ProblemConfig& config);

/// Returns the spec with (a, p) and (b, q) exchanged.
ProblemSpec swap_phases(const ProblemSpec& spec);

struct AssumptionCheck {
  std::string assumption;
  bool pass = false;
  double margin = 0.0;
  std::optional<std::string> location;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;

  bool accepted() const;
  const AssumptionCheck* find(std::string_view assumption) const;
  std::vector<std::string> violations() const;
};

ValidationReport validate(const ProblemSpec& spec);

struct RInterval {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  bool empty = false;

  bool contains(double r) const { return !empty && r >= lower && r <= upper; }
};

/// Admissible orders r of initial-gradient integrability for a source in
/// L^sigma. Throws DomainError when sigma <= 2.
RInterval admissible_r_interval(int dim, double sigma, double p_minus, double q_minus, double p_plus,
                                double q_plus);
RInterval admissible_r_interval(const ProblemSpec& spec);

/// Normalized bump-kernel weights along one axis for offsets -m..m.
std::vector<double> mollifier_weights(double width, double spacing);

/// Replaces a, b, f and u0 by discrete mollifications with a compactly
/// supported bump of radius `width`. Coefficients and source are extended
/// evenly across walls, u0 oddly, so constants, nonnegativity and the
/// Dirichlet ghost convention survive. Throws WidthTooLarge when the kernel
/// support exceeds the domain.
ProblemSpec mollify_coefficients(const ProblemSpec& spec, double width);

/// One-axis-at-a-time discrete convolution of a cell field.
Eigen::VectorXd mollify_field(const Grid& grid, const Eigen::VectorXd& values, double width, bool odd);

/// Discrete L^d(Omega) norm of |grad v| using centred differences inside and
/// one-sided differences at the walls (no ghost cells).
double gradient_Ld_norm(const Grid& grid, const Eigen::VectorXd& values, double d);

std::string describe_location(const Grid& grid, std::size_t cell, int level);

}  // namespace dphase
