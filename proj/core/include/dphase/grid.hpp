#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace dphase {

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform cell-centred tensor grid on [0,Lx] (x [0,Ly]) with a uniform time
/// partition of [0,T] into `time_steps` intervals.
///
/// In one dimension the y-axis is collapsed to a single cell of unit width so
/// that `cell_volume()` is simply hx.
class Grid {
 public:
  Grid(int dim, std::array<int, 2> cells, std::array<double, 2> lengths,
       int time_steps, double final_time);

  static Grid line(int nx, double length, int time_steps, double final_time) {
    return Grid(1, {nx, 1}, {length, 1.0}, time_steps, final_time);
  }
  static Grid square(int n, double length, int time_steps, double final_time) {
    return Grid(2, {n, n}, {length, length}, time_steps, final_time);
  }

  int dim() const { return dim_; }
  int cells(int axis) const { return cells_[axis]; }
  double length(int axis) const { return lengths_[axis]; }
  double spacing(int axis) const { return lengths_[axis] / cells_[axis]; }
  double cell_volume() const { return dim_ == 2 ? spacing(0) * spacing(1) : spacing(0); }
  double domain_volume() const { return dim_ == 2 ? lengths_[0] * lengths_[1] : lengths_[0]; }

  std::size_t cell_count() const {
    return static_cast<std::size_t>(cells_[0]) * static_cast<std::size_t>(cells_[1]);
  }
  /// Faces normal to `axis`, including the two boundary layers.
  std::size_t face_count(int axis) const;
  std::size_t face_total() const { return dim_ == 2 ? face_count(0) + face_count(1) : face_count(0); }

  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(cells_[0]) + static_cast<std::size_t>(i);
  }
  std::array<int, 2> cell_ij(std::size_t idx) const {
    return {static_cast<int>(idx % cells_[0]), static_cast<int>(idx / cells_[0])};
  }
  Point center(int i, int j = 0) const;
  Point center(std::size_t idx) const {
    const auto ij = cell_ij(idx);
    return center(ij[0], ij[1]);
  }

  int face_axis(std::size_t f) const { return f < face_count(0) ? 0 : 1; }
  /// Face (i, j) in its axis family: for axis 0, i in [0,nx] and j in [0,ny).
  std::array<int, 2> face_ij(std::size_t f) const;
  Point face_center(std::size_t f) const;
  bool is_boundary_face(std::size_t f) const;
  /// The two cells sharing face f; -1 marks the ghost side of a boundary face.
  std::array<long, 2> face_cells(std::size_t f) const;

  int time_steps() const { return time_steps_; }
  double final_time() const { return final_time_; }
  double tau() const { return final_time_ / time_steps_; }
  double time(int n) const { return final_time_ * static_cast<double>(n) / time_steps_; }

  /// Same space-time discretization.
  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

  /// Copy with a different time partition.
  Grid with_time_steps(int time_steps) const {
    return Grid(dim_, cells_, lengths_, time_steps, final_time_);
  }

 private:
  int dim_;
  std::array<int, 2> cells_;
  std::array<double, 2> lengths_;
  int time_steps_;
  double final_time_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

/// Values of a scalar field at the cell centres of one time slice. Dirichlet
/// data is implicit: ghost cells mirror the interior with opposite sign.
struct GridFunction {
  Grid grid;
  double time = 0.0;
  std::string name = "u";
  Eigen::VectorXd values;
};

/// Cell-centred values for every time level 0..nt.
struct Trajectory {
  Grid grid;
  std::vector<Eigen::VectorXd> slices;

  explicit Trajectory(Grid g) : grid(std::move(g)) {}
  int levels() const { return static_cast<int>(slices.size()); }
  GridFunction slice(int n, std::string name = "u") const {
    return GridFunction{grid, grid.time(n), std::move(name), slices.at(static_cast<std::size_t>(n))};
  }
};

/// Full gradient vectors on every face: column f holds the dim components at
/// face f. The normal component is a two-point difference; tangential
/// components average the centred differences of the two adjacent cells.
using FaceField = Eigen::MatrixXd;

/// Symmetric second differences per cell. Rows are (xx) in 1D and
/// (xx, xy, yy) in 2D.
struct HessianField {
  int dim = 1;
  Eigen::MatrixXd entries;

  Eigen::MatrixXd at(std::size_t cell) const;
  /// |u_xx|^2 = sum_ij (D_ij u)^2.
  double frobenius_squared(std::size_t cell) const;
};

/// Discrete gradient, divergence and Hessian on a Grid.
///
/// The divergence is the exact negative adjoint of the gradient under the
/// inner products <u,v> = sum_cells |K| u v and
/// <F,G> = sum_faces |K| w_f F.G with w_f = 1/dim on interior faces and half
/// that on walls (the ghost reflection leaves half a control volume there), so
/// summation by parts holds to round-off for every cell field.
class DifferenceOperators {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  explicit DifferenceOperators(Grid grid);

  const Grid& grid() const { return grid_; }

  FaceField gradient(const Eigen::VectorXd& u) const;
  Eigen::VectorXd divergence(const FaceField& flux) const;
  HessianField hessian(const Eigen::VectorXd& u) const;
  /// Face gradients averaged back to cell centres (normal components only).
  Eigen::MatrixXd cell_gradient(const Eigen::VectorXd& u) const;

  /// Row f*dim + d maps cell values to component d of the gradient at face f.
  const SparseMatrix& gradient_matrix() const { return gradient_; }
  double face_weight(std::size_t f) const { return face_weights_[static_cast<Eigen::Index>(f)]; }
  const Eigen::VectorXd& face_weights() const { return face_weights_; }

  double cell_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  double face_inner(const FaceField& a, const FaceField& b) const;

 private:
  /// Value at (i, j) with one layer of odd reflection across each wall.
  double ghost_value(const Eigen::VectorXd& u, int i, int j) const;

  Grid grid_;
  SparseMatrix gradient_;
  SparseMatrix gradient_transpose_;
  Eigen::VectorXd face_weights_;
  /// face_weights_ repeated per gradient component, matching gradient_ rows.
  Eigen::VectorXd row_weights_;
};

FaceField gradient(const Grid& grid, const Eigen::VectorXd& u);
Eigen::VectorXd divergence(const Grid& grid, const FaceField& flux);
HessianField hessian(const Grid& grid, const Eigen::VectorXd& u);

/// Discrete L2(Omega) norm.
double l2_norm(const Grid& grid, const Eigen::VectorXd& u);

}  // namespace dphase
