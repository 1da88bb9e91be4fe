#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dphase/grid.hpp"

using namespace dphase;

namespace {

Eigen::VectorXd sample(const Grid& g, double (*fn)(double, double)) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(g.cell_count()));
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const Point p = g.center(c);
    v[static_cast<Eigen::Index>(c)] = fn(p.x, p.y);
  }
  return v;
}

bool away_from_walls(const Grid& g, std::size_t c, int margin) {
  const auto [i, j] = g.cell_ij(c);
  if (i < margin || i >= g.cells(0) - margin) return false;
  return g.dim() == 1 || (j >= margin && j < g.cells(1) - margin);
}

}  // namespace

TEST(Grid, GeometryAndIndexing) {
  const Grid g = Grid::square(8, 2.0, 10, 1.0);
  EXPECT_EQ(g.cell_count(), 64u);
  EXPECT_EQ(g.face_count(0), 9u * 8u);
  EXPECT_EQ(g.face_total(), 2u * 72u);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.25);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.0625);
  EXPECT_DOUBLE_EQ(g.tau(), 0.1);
  EXPECT_EQ(g.cell_ij(g.index(3, 5)), (std::array<int, 2>{3, 5}));
  EXPECT_DOUBLE_EQ(g.center(0).x, 0.125);
  const auto f0 = g.face_cells(0);
  EXPECT_EQ(f0[0], -1);
  EXPECT_TRUE(g.is_boundary_face(0));
  EXPECT_FALSE(g.is_boundary_face(1));
  EXPECT_THROW(Grid::line(2, 1.0, 1, 1.0), std::invalid_argument);
  EXPECT_NE(g, g.with_time_steps(11));
}

TEST(Grid, GradientOfZeroAndLinear) {
  const Grid g = Grid::line(16, 1.0, 1, 1.0);
  const DifferenceOperators ops(g);
  EXPECT_EQ(ops.gradient(Eigen::VectorXd::Zero(16)).cwiseAbs().maxCoeff(), 0.0);
  const FaceField grad = ops.gradient(sample(g, [](double x, double) { return x; }));
  for (std::size_t f = 0; f < g.face_total(); ++f)
    if (!g.is_boundary_face(f)) EXPECT_NEAR(grad(0, static_cast<Eigen::Index>(f)), 1.0, 1e-12);
}

TEST(Grid, GradientConvergesAtSecondOrder) {
  double prev = 0.0;
  for (const int n : {16, 32, 64, 128}) {
    const Grid g = Grid::line(n, 1.0, 1, 1.0);
    const FaceField grad = gradient(g, sample(g, [](double x, double) { return std::sin(M_PI * x); }));
    double err = 0.0;
    for (std::size_t f = 0; f < g.face_total(); ++f) {
      const double x = g.face_center(f).x;
      err = std::max(err, std::abs(grad(0, static_cast<Eigen::Index>(f)) - M_PI * std::cos(M_PI * x)));
    }
    if (prev > 0.0) EXPECT_NEAR(std::log2(prev / err), 2.0, 0.1);
    prev = err;
  }
}

TEST(Grid, TangentialGradientConverges2D) {
  double prev = 0.0;
  for (const int n : {16, 32, 64}) {
    const Grid g = Grid::square(n, 1.0, 1, 1.0);
    const FaceField grad =
        gradient(g, sample(g, [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); }));
    double err = 0.0;
    for (std::size_t f = 0; f < g.face_total(); ++f) {
      const Point p = g.face_center(f);
      const Eigen::Vector2d exact(M_PI * std::cos(M_PI * p.x) * std::sin(M_PI * p.y),
                                  M_PI * std::sin(M_PI * p.x) * std::cos(M_PI * p.y));
      err = std::max(err, (grad.col(static_cast<Eigen::Index>(f)) - exact).cwiseAbs().maxCoeff());
    }
    if (prev > 0.0) EXPECT_GT(std::log2(prev / err), 1.8);
    prev = err;
  }
}

TEST(Grid, DivergenceOfConstantAndLinearFlux) {
  const Grid g = Grid::square(12, 1.0, 1, 1.0);
  const DifferenceOperators ops(g);
  FaceField constant = FaceField::Constant(2, static_cast<Eigen::Index>(g.face_total()), 3.0);
  FaceField linear(2, static_cast<Eigen::Index>(g.face_total()));
  for (std::size_t f = 0; f < g.face_total(); ++f) {
    const Point p = g.face_center(f);
    linear.col(static_cast<Eigen::Index>(f)) << p.x, p.y;
  }
  const Eigen::VectorXd d0 = ops.divergence(constant);
  const Eigen::VectorXd d1 = ops.divergence(linear);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!away_from_walls(g, c, 2)) continue;
    EXPECT_NEAR(d0[static_cast<Eigen::Index>(c)], 0.0, 1e-12);
    EXPECT_NEAR(d1[static_cast<Eigen::Index>(c)], 2.0, 1e-12);
  }
}

TEST(Grid, SummationByPartsIsExact) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (const int dim : {1, 2}) {
    const Grid g = dim == 1 ? Grid::line(37, 1.3, 1, 1.0) : Grid(2, {11, 7}, {1.0, 0.6}, 1, 1.0);
    const DifferenceOperators ops(g);
    Eigen::VectorXd v(static_cast<Eigen::Index>(g.cell_count()));
    for (auto& x : v) x = U(rng);
    FaceField F(dim, static_cast<Eigen::Index>(g.face_total()));
    for (Eigen::Index k = 0; k < F.size(); ++k) F.data()[k] = U(rng);
    const double lhs = ops.face_inner(ops.gradient(v), F);
    const double rhs = -ops.cell_inner(v, ops.divergence(F));
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Grid, HessianOfPolynomials) {
  const Grid g = Grid::square(10, 1.0, 1, 1.0);
  const DifferenceOperators ops(g);
  const HessianField hq = ops.hessian(sample(g, [](double x, double) { return 0.5 * x * x; }));
  const HessianField hxy = ops.hessian(sample(g, [](double x, double y) { return x * y; }));
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!away_from_walls(g, c, 1)) continue;
    EXPECT_NEAR(hq.at(c)(0, 0), 1.0, 1e-10);
    EXPECT_NEAR(hq.at(c)(1, 1), 0.0, 1e-10);
    EXPECT_NEAR(hxy.at(c)(0, 1), 1.0, 1e-10);
    EXPECT_NEAR(hxy.at(c)(1, 0), 1.0, 1e-10);
  }
}

TEST(Grid, HessianConvergesAtSecondOrder) {
  double prev = 0.0;
  for (const int n : {16, 32, 64}) {
    const Grid g = Grid::square(n, 1.0, 1, 1.0);
    const HessianField h =
        hessian(g, sample(g, [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); }));
    double err = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      const Point p = g.center(c);
      const double pi2 = M_PI * M_PI;
      err = std::max({err, std::abs(h.at(c)(0, 0) + pi2 * std::sin(M_PI * p.x) * std::sin(M_PI * p.y)),
                      std::abs(h.at(c)(0, 1) - pi2 * std::cos(M_PI * p.x) * std::cos(M_PI * p.y))});
    }
    if (prev > 0.0) EXPECT_GT(std::log2(prev / err), 1.8);
    prev = err;
  }
}

TEST(Grid, MismatchedFieldsAreRejected) {
  const Grid g = Grid::line(8, 1.0, 1, 1.0);
  EXPECT_THROW(gradient(g, Eigen::VectorXd::Zero(7)), GridMismatch);
  EXPECT_THROW(require_same_grid(g, Grid::line(9, 1.0, 1, 1.0), "test"), GridMismatch);
  EXPECT_NEAR(l2_norm(g, Eigen::VectorXd::Ones(8)), 1.0, 1e-15);
}
