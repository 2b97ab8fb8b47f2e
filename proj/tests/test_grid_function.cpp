#include <doctest.h>

#include <cmath>
#include <vector>

#include "pesin/grid_function.hpp"

using namespace pesin;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// degree 4 in each coordinate
Vec poly(const Vec& u) { return Vec::Constant(1, u(0) * u(0) * u(0) - 2 * u(0) * u(1) + std::pow(u(1), 4) / 3); }
Mat grad(const Vec& u) {
  Mat g(1, 2);
  g << 3 * u(0) * u(0) - 2 * u(1), -2 * u(0) + 4 * std::pow(u(1), 3) / 3;
  return g;
}

GridFunction sampled(int nodes, int degree) {
  GridFunction g(v2(0.3, -0.2), 0.5, nodes, degree, 1);
  for (std::size_t f = 0; f < g.size(); ++f) g.set(f, poly(g.node(f)), grad(g.node(f)));
  return g;
}

}  // namespace

TEST_CASE("grid layout") {
  const GridFunction g = sampled(9, 4);
  CHECK(g.size() == 81);
  CHECK(g.input_dim() == 2);
  CHECK(g.value_dim() == 1);
  for (std::size_t f = 0; f < g.size(); ++f) {
    const Vec d = g.node(f) - g.center();
    CHECK(d.cwiseAbs().maxCoeff() <= 0.5 + 1e-15);
  }
}

TEST_CASE("polynomials up to the degree are reproduced") {
  const GridFunction g = sampled(9, 4);
  for (const Vec& off : {v2(0.01, 0.02), v2(-0.37, 0.41), v2(0.499, -0.499), v2(0, 0)}) {
    const Vec u = g.center() + off;
    CHECK(std::abs(g.value(u)(0) - poly(u)(0)) < 1e-13);
    CHECK((g.derivative(u) - grad(u)).norm() < 1e-12);
  }
}

TEST_CASE("nodes are interpolated exactly") {
  const GridFunction g = sampled(7, 3);
  for (std::size_t f = 0; f < g.size(); f += 5) {
    CHECK(std::abs(g.value(g.node(f))(0) - poly(g.node(f))(0)) < 1e-14);
  }
}

TEST_CASE("smooth functions converge with resolution") {
  const auto f = [](const Vec& u) { return std::sin(3 * u(0)) * std::cos(2 * u(1)); };
  std::vector<double> errs;
  for (int m : {9, 17, 33}) {
    GridFunction g(v2(0, 0), 1.0, m, 6, 1);
    for (std::size_t i = 0; i < g.size(); ++i) g.set(i, Vec::Constant(1, f(g.node(i))), Mat::Zero(1, 2));
    double err = 0;
    for (const Vec& u : g.sample_points(3)) err = std::max(err, std::abs(g.value(u)(0) - f(u)));
    errs.push_back(err);
  }
  // degree 6 pieces: halving the spacing gains about 2^7
  CHECK(errs[0] / errs[1] > 32);
  CHECK(errs[1] / errs[2] > 32);
}

TEST_CASE("sample points stay in the ball") {
  const GridFunction g = sampled(9, 4);
  const auto pts = g.sample_points();
  CHECK(pts.size() > g.size() / 2);
  for (const Vec& u : pts) CHECK((u - g.center()).norm() <= 0.5 * (1 + 1e-12));
}

TEST_CASE("one-dimensional grids") {
  GridFunction g(Vec::Zero(1), 2.0, 17, 8, 2);
  for (std::size_t f = 0; f < g.size(); ++f) {
    const double t = g.node(f)(0);
    Mat d(2, 1);
    d << std::cos(t), 2 * t;
    g.set(f, v2(std::sin(t), t * t), d);
  }
  const Vec u = Vec::Constant(1, 0.77);
  CHECK(std::abs(g.value(u)(0) - std::sin(0.77)) < 1e-7);
  CHECK(std::abs(g.value(u)(1) - 0.77 * 0.77) < 1e-13);
  CHECK(std::abs(g.derivative(u)(0, 0) - std::cos(0.77)) < 1e-7);
}
