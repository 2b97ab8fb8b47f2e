#include <doctest.h>

#include <cmath>
#include <random>

#include "pesin/appendix.hpp"
#include "pesin/linalg.hpp"
#include "pesin/scenarios.hpp"

using namespace pesin;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Mat diag23() { return Vec(v2(2, 3)).asDiagonal(); }

Mat random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace

TEST_CASE("restricted_det") {
  CHECK(restricted_det(Mat::Identity(2, 2), Mat(v2(0.6, 0.8))) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(restricted_det(diag23(), Mat(Vec::Unit(2, 0))) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(restricted_det(diag23(), Mat(v2(1, 1))) == doctest::Approx(std::sqrt(6.5)).epsilon(1e-14));
  CHECK(std::sqrt(6.5) == doctest::Approx(2.5495).epsilon(1e-4));
  CHECK(restricted_det(Mat::Zero(2, 2), Mat(v2(1, 0))) == 0.0);
  CHECK_THROWS_AS(restricted_det(diag23(), Mat(2, 0)), Error);

  // Gram-determinant oracle: sqrt det((AQ)^T AQ) for orthonormal Q
  std::mt19937_64 rng(5);
  CHECK(restricted_det(Mat::Identity(3, 3), random_matrix(rng, 3, 2)) == doctest::Approx(1.0).epsilon(1e-14));
  for (int t = 0; t < 50; ++t) {
    const Mat a = random_matrix(rng, 4, 4), e = random_matrix(rng, 4, 2);
    const Mat q = Eigen::HouseholderQR<Mat>(e).householderQ() * Mat::Identity(4, 2);
    const Mat aq = a * q;
    const double oracle = std::sqrt(std::max(0.0, (aq.transpose() * aq).determinant()));
    CHECK(restricted_det(a, e) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("aperture") {
  const Mat e1 = Vec::Unit(2, 0), e2 = Vec::Unit(2, 1);
  CHECK(aperture(e1, e1) == 0.0);
  CHECK(aperture(e1, e2) == doctest::Approx(1.0).epsilon(1e-15));
  // the distance from e1 to span(e1 + e2) is sin(pi/4)
  CHECK(aperture(e1, Mat(v2(1, 1))) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK_THROWS_AS(aperture(e1, Mat(Mat::Identity(2, 2))), Error);
}

TEST_CASE("graph aperture bound over random trials") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 1e300;
  for (int t = 0; t < 1000; ++t) {
    Mat a(1, 1), b(1, 1);
    a << u(rng);
    b << u(rng);
    const BoundCheck c = graph_aperture_bound_check(a, b);
    worst = std::min(worst, c.margin);
    CHECK(c.lhs == doctest::Approx(aperture(graph_basis(a), graph_basis(b))).epsilon(1e-14));
  }
  CHECK(worst >= 0);
  const BoundCheck zero = graph_aperture_bound_check(Mat::Zero(1, 1), Mat::Zero(1, 1));
  CHECK(zero.lhs == 0.0);
}

TEST_CASE("restricted determinant perturbation bound") {
  CHECK(restricted_det_constant(1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(restricted_det_constant(3) == doctest::Approx(3 * std::sqrt(2.0)));
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Mat a = random_matrix(rng, 3, 3);
    const Mat b = a + 1e-3 * random_matrix(rng, 3, 3);
    const Mat e1 = random_matrix(rng, 3, 2);
    const Mat e2 = e1 + 1e-2 * random_matrix(rng, 3, 2);
    const double s = std::max({1.0, op_norm(a), op_norm(b)});
    const BoundCheck c = restricted_det_bound_check(a, b, e1, e2, s);
    CHECK(c.margin >= 0);
    CHECK(c.lhs == doctest::Approx(std::abs(restricted_det(a, e1) - restricted_det(b, e2))).epsilon(1e-12));
  }
  CHECK(restricted_det_bound_check(diag23(), diag23(), Mat(v2(1, 0)), Mat(v2(1, 0)), 3).lhs == 0.0);
}

TEST_CASE("graph volumes") {
  GridFunction flat(Vec::Zero(2), 0.5, 9, 4, 1);
  for (std::size_t f = 0; f < flat.size(); ++f) flat.set(f, Vec::Zero(1), Mat::Zero(1, 2));
  const VolumeCheck v0 = graph_volume_bound_check(flat, 0.0);
  CHECK(v0.domain_volume == doctest::Approx(1.0).epsilon(1e-14));
  // exact up to the rounding of the quadrature sum
  CHECK(std::abs(v0.lower_margin) < 1e-13);
  CHECK(std::abs(v0.upper_margin) < 1e-13);

  const double a = 0.7;
  GridFunction line(Vec::Zero(1), 2.0, 9, 4, 1);
  for (std::size_t f = 0; f < line.size(); ++f) line.set(f, a * line.node(f), Mat::Constant(1, 1, a));
  const VolumeCheck vl = graph_volume_bound_check(line, a);
  CHECK(vl.graph_volume == doctest::Approx(std::sqrt(1 + a * a) * 4).epsilon(1e-13));
  CHECK(std::abs(vl.upper_margin) < 1e-12);
  CHECK(vl.lower_margin > 0);
  CHECK(vl.precondition_ok);
  CHECK_FALSE(graph_volume_bound_check(line, 0.5).precondition_ok);

  PesinParams p;
  p.a = -0.6;
  p.b = 0.6;
  p.eps = 0.002;
  const StableChart ch = local_stable_chart(sample_word(make_scenario("S3"), 1, 1000), Vec::Zero(2), 1.0, p);
  const VolumeCheck vs = graph_volume_bound_check(ch, ch.measured_lip);
  CHECK(vs.lower_margin >= -1e-8);
  CHECK(vs.upper_margin >= -1e-8);
}
