#include "dphase/grid.hpp"

#include <cmath>

namespace dphase {

Grid::Grid(int dim, std::array<int, 2> cells, std::array<double, 2> lengths,
           int time_steps, double final_time)
    : dim_(dim), cells_(cells), lengths_(lengths), time_steps_(time_steps), final_time_(final_time) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
  if (dim == 1) {
    cells_[1] = 1;
    lengths_[1] = 1.0;
  }
  for (int a = 0; a < dim; ++a) {
    if (cells_[a] < 4) throw std::invalid_argument("grid needs at least 4 cells per axis");
    if (!(lengths_[a] > 0.0)) throw std::invalid_argument("grid side lengths must be positive");
  }
  if (time_steps < 1) throw std::invalid_argument("grid needs at least one time step");
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
}

std::size_t Grid::face_count(int axis) const {
  const auto nx = static_cast<std::size_t>(cells_[0]);
  const auto ny = static_cast<std::size_t>(cells_[1]);
  return axis == 0 ? (nx + 1) * ny : nx * (ny + 1);
}

Point Grid::center(int i, int j) const {
  return {(i + 0.5) * spacing(0), dim_ == 2 ? (j + 0.5) * spacing(1) : 0.0};
}

std::array<int, 2> Grid::face_ij(std::size_t f) const {
  if (f < face_count(0)) {
    const auto stride = static_cast<std::size_t>(cells_[0]) + 1;
    return {static_cast<int>(f % stride), static_cast<int>(f / stride)};
  }
  const std::size_t g = f - face_count(0);
  return {static_cast<int>(g % cells_[0]), static_cast<int>(g / cells_[0])};
}

Point Grid::face_center(std::size_t f) const {
  const auto [i, j] = face_ij(f);
  if (face_axis(f) == 0) return {i * spacing(0), dim_ == 2 ? (j + 0.5) * spacing(1) : 0.0};
  return {(i + 0.5) * spacing(0), j * spacing(1)};
}

bool Grid::is_boundary_face(std::size_t f) const {
  const auto [i, j] = face_ij(f);
  if (face_axis(f) == 0) return i == 0 || i == cells_[0];
  return j == 0 || j == cells_[1];
}

std::array<long, 2> Grid::face_cells(std::size_t f) const {
  const auto [i, j] = face_ij(f);
  if (face_axis(f) == 0) {
    const long left = i > 0 ? static_cast<long>(index(i - 1, j)) : -1;
    const long right = i < cells_[0] ? static_cast<long>(index(i, j)) : -1;
    return {left, right};
  }
  const long below = j > 0 ? static_cast<long>(index(i, j - 1)) : -1;
  const long above = j < cells_[1] ? static_cast<long>(index(i, j)) : -1;
  return {below, above};
}

bool Grid::operator==(const Grid& other) const {
  return dim_ == other.dim_ && cells_ == other.cells_ && lengths_ == other.lengths_ &&
         time_steps_ == other.time_steps_ && final_time_ == other.final_time_;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) throw GridMismatch(std::string(what) + ": fields live on different grids");
}

Eigen::MatrixXd HessianField::at(std::size_t cell) const {
  const auto c = static_cast<Eigen::Index>(cell);
  if (dim == 1) return Eigen::MatrixXd::Constant(1, 1, entries(0, c));
  Eigen::MatrixXd h(2, 2);
  h << entries(0, c), entries(1, c), entries(1, c), entries(2, c);
  return h;
}

double HessianField::frobenius_squared(std::size_t cell) const {
  const auto c = static_cast<Eigen::Index>(cell);
  if (dim == 1) return entries(0, c) * entries(0, c);
  return entries(0, c) * entries(0, c) + 2.0 * entries(1, c) * entries(1, c) + entries(2, c) * entries(2, c);
}

namespace {

// Accumulates stencil weights with odd reflection for out-of-range indices.
struct StencilBuilder {
  const Grid& grid;
  std::vector<Eigen::Triplet<double>>& triplets;

  void add(Eigen::Index row, int i, int j, double weight) {
    const int nx = grid.cells(0);
    const int ny = grid.cells(1);
    if (i < 0) {
      i = -1 - i;
      weight = -weight;
    } else if (i >= nx) {
      i = 2 * nx - 1 - i;
      weight = -weight;
    }
    if (grid.dim() == 2) {
      if (j < 0) {
        j = -1 - j;
        weight = -weight;
      } else if (j >= ny) {
        j = 2 * ny - 1 - j;
        weight = -weight;
      }
    }
    triplets.emplace_back(row, static_cast<Eigen::Index>(grid.index(i, j)), weight);
  }
};

}  // namespace

DifferenceOperators::DifferenceOperators(Grid grid) : grid_(std::move(grid)) {
  const int dim = grid_.dim();
  const double hx = grid_.spacing(0);
  const double hy = grid_.spacing(1);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(grid_.face_total() * static_cast<std::size_t>(dim == 2 ? 12 : 2));
  StencilBuilder sb{grid_, triplets};

  for (std::size_t f = 0; f < grid_.face_total(); ++f) {
    const auto [i, j] = grid_.face_ij(f);
    const auto row0 = static_cast<Eigen::Index>(f) * dim;
    if (grid_.face_axis(f) == 0) {
      sb.add(row0, i, j, 1.0 / hx);
      sb.add(row0, i - 1, j, -1.0 / hx);
      if (dim == 2) {
        const double w = 1.0 / (4.0 * hy);
        sb.add(row0 + 1, i, j + 1, w);
        sb.add(row0 + 1, i, j - 1, -w);
        sb.add(row0 + 1, i - 1, j + 1, w);
        sb.add(row0 + 1, i - 1, j - 1, -w);
      }
    } else {
      const double w = 1.0 / (4.0 * hx);
      sb.add(row0, i + 1, j, w);
      sb.add(row0, i - 1, j, -w);
      sb.add(row0, i + 1, j - 1, w);
      sb.add(row0, i - 1, j - 1, -w);
      sb.add(row0 + 1, i, j, 1.0 / hy);
      sb.add(row0 + 1, i, j - 1, -1.0 / hy);
    }
  }
  gradient_.resize(static_cast<Eigen::Index>(grid_.face_total()) * dim,
                   static_cast<Eigen::Index>(grid_.cell_count()));
  gradient_.setFromTriplets(triplets.begin(), triplets.end());
  // Reflected tangential stencils cancel exactly on walls.
  gradient_.prune(0.0);
  gradient_.makeCompressed();
  gradient_transpose_ = gradient_.transpose();

  face_weights_.resize(static_cast<Eigen::Index>(grid_.face_total()));
  row_weights_.resize(gradient_.rows());
  for (std::size_t f = 0; f < grid_.face_total(); ++f) {
    const double w = (grid_.is_boundary_face(f) ? 0.5 : 1.0) / dim;
    face_weights_[static_cast<Eigen::Index>(f)] = w;
    row_weights_.segment(static_cast<Eigen::Index>(f) * dim, dim).setConstant(w);
  }
}

FaceField DifferenceOperators::gradient(const Eigen::VectorXd& u) const {
  if (u.size() != static_cast<Eigen::Index>(grid_.cell_count())) throw GridMismatch("gradient: wrong field size");
  const Eigen::VectorXd flat = gradient_ * u;
  return Eigen::Map<const Eigen::MatrixXd>(flat.data(), grid_.dim(), static_cast<Eigen::Index>(grid_.face_total()));
}

Eigen::VectorXd DifferenceOperators::divergence(const FaceField& flux) const {
  if (flux.rows() != grid_.dim() || flux.cols() != static_cast<Eigen::Index>(grid_.face_total()))
    throw GridMismatch("divergence: wrong face field shape");
  const Eigen::Map<const Eigen::VectorXd> flat(flux.data(), flux.size());
  return -(gradient_transpose_ * (row_weights_.array() * flat.array()).matrix());
}

double DifferenceOperators::ghost_value(const Eigen::VectorXd& u, int i, int j) const {
  double sign = 1.0;
  const int nx = grid_.cells(0);
  const int ny = grid_.cells(1);
  if (i < 0) {
    i = -1 - i;
    sign = -sign;
  } else if (i >= nx) {
    i = 2 * nx - 1 - i;
    sign = -sign;
  }
  if (grid_.dim() == 2) {
    if (j < 0) {
      j = -1 - j;
      sign = -sign;
    } else if (j >= ny) {
      j = 2 * ny - 1 - j;
      sign = -sign;
    }
  }
  return sign * u[static_cast<Eigen::Index>(grid_.index(i, j))];
}

HessianField DifferenceOperators::hessian(const Eigen::VectorXd& u) const {
  if (u.size() != static_cast<Eigen::Index>(grid_.cell_count())) throw GridMismatch("hessian: wrong field size");
  const int dim = grid_.dim();
  const double hx = grid_.spacing(0);
  const double hy = grid_.spacing(1);
  HessianField out;
  out.dim = dim;
  out.entries.resize(dim == 2 ? 3 : 1, static_cast<Eigen::Index>(grid_.cell_count()));
  for (int j = 0; j < grid_.cells(1); ++j) {
    for (int i = 0; i < grid_.cells(0); ++i) {
      const auto c = static_cast<Eigen::Index>(grid_.index(i, j));
      const double center = u[c];
      out.entries(0, c) = (ghost_value(u, i + 1, j) - 2.0 * center + ghost_value(u, i - 1, j)) / (hx * hx);
      if (dim == 2) {
        out.entries(1, c) = (ghost_value(u, i + 1, j + 1) - ghost_value(u, i + 1, j - 1) -
                             ghost_value(u, i - 1, j + 1) + ghost_value(u, i - 1, j - 1)) /
                            (4.0 * hx * hy);
        out.entries(2, c) = (ghost_value(u, i, j + 1) - 2.0 * center + ghost_value(u, i, j - 1)) / (hy * hy);
      }
    }
  }
  return out;
}

Eigen::MatrixXd DifferenceOperators::cell_gradient(const Eigen::VectorXd& u) const {
  if (u.size() != static_cast<Eigen::Index>(grid_.cell_count())) throw GridMismatch("cell_gradient: wrong field size");
  const int dim = grid_.dim();
  const double hx = grid_.spacing(0);
  const double hy = grid_.spacing(1);
  Eigen::MatrixXd g(dim, static_cast<Eigen::Index>(grid_.cell_count()));
  for (int j = 0; j < grid_.cells(1); ++j) {
    for (int i = 0; i < grid_.cells(0); ++i) {
      const auto c = static_cast<Eigen::Index>(grid_.index(i, j));
      g(0, c) = (ghost_value(u, i + 1, j) - ghost_value(u, i - 1, j)) / (2.0 * hx);
      if (dim == 2) g(1, c) = (ghost_value(u, i, j + 1) - ghost_value(u, i, j - 1)) / (2.0 * hy);
    }
  }
  return g;
}

double DifferenceOperators::cell_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return grid_.cell_volume() * u.dot(v);
}

double DifferenceOperators::face_inner(const FaceField& a, const FaceField& b) const {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.cols() != face_weights_.size())
    throw GridMismatch("face_inner: wrong face field shape");
  return grid_.cell_volume() * ((a.array() * b.array()).colwise().sum().transpose() * face_weights_.array()).sum();
}

FaceField gradient(const Grid& grid, const Eigen::VectorXd& u) { return DifferenceOperators(grid).gradient(u); }

Eigen::VectorXd divergence(const Grid& grid, const FaceField& flux) {
  return DifferenceOperators(grid).divergence(flux);
}

HessianField hessian(const Grid& grid, const Eigen::VectorXd& u) { return DifferenceOperators(grid).hessian(u); }

double l2_norm(const Grid& grid, const Eigen::VectorXd& u) {
  return std::sqrt(grid.cell_volume() * u.squaredNorm());
}

}  // namespace dphase
