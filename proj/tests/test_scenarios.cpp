#include <doctest.h>

#include <cmath>

#include "pesin/scenarios.hpp"

using namespace pesin;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// y of the S3 leaf through (x0, y0) at abscissa x, summed to k = 60
double s3_leaf(double x0, double y0, double x) {
  double y = y0;
  for (int k = 0; k <= 60; ++k) y -= std::ldexp(std::sin(std::ldexp(x, -k)) - std::sin(std::ldexp(x0, -k)), -k - 1);
  return y;
}

}  // namespace

TEST_CASE("registry") {
  for (const auto& n : scenario_names()) CHECK_NOTHROW(make_scenario(n == "linear" ? "S1" : n));
  CHECK(is_skew(*make_scenario("S3")));
  CHECK(is_skew(*make_scenario("S4")));
  CHECK_FALSE(is_skew(*make_scenario("S1")));
  try {
    make_scenario("S9");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("spec validation") {
  ScenarioSpec bad{"S3", 2, {{"a", 1.5}}, {}};
  CHECK_THROWS_AS(make_scenario(bad), Error);
  ScenarioSpec unknown{"S4", 2, {{"zeta", 1}}, {}};
  CHECK_THROWS_AS(make_scenario(unknown), Error);
  ScenarioSpec lin{"linear", 2, {}, (Mat(2, 2) << 3, 1, 0, 0.5).finished()};
  const OmegaWord w = sample_word(make_scenario(lin), 1, 2);
  CHECK(w.map(0).apply(v2(1, 1)).isApprox(v2(4, 0.5), 1e-15));
}

TEST_CASE("skew_leaf_oracle") {
  const OmegaWord s3 = sample_word(make_scenario("S3"), 1, 100);
  CHECK(skew_leaf_oracle(s3, v2(0, 0), 0).value == 0.0);
  const OracleResult r = skew_leaf_oracle(s3, v2(0, 0), 1.0);
  CHECK(std::abs(r.value - s3_leaf(0, 0, 1)) < 1e-12);
  CHECK(r.error_bound <= 1e-12);
  CHECK(std::abs(skew_leaf_oracle(s3, v2(0.3, 0.7), -0.2).value - s3_leaf(0.3, 0.7, -0.2)) < 1e-12);

  // product system: c = 0 gives horizontal leaves
  ScenarioSpec flat{"S4", 2, {{"c_lo", 0.0}, {"c_hi", 0.0}}, {}};
  const OmegaWord w = sample_word(make_scenario(flat), 3, 100);
  CHECK(skew_leaf_oracle(w, v2(0.1, 0.25), 0.9).value == 0.25);
}

TEST_CASE("oracle tail bound dominates the truncation error") {
  const OmegaWord s4 = sample_word(make_scenario("S4"), 7, 200);
  const OracleResult coarse = skew_leaf_oracle(s4, v2(0.2, 0.1), 0.8, 1e-6);
  const OracleResult fine = skew_leaf_oracle(s4, v2(0.2, 0.1), 0.8, 1e-15);
  CHECK(std::abs(coarse.value - fine.value) <= coarse.error_bound);
  CHECK(fine.truncation > coarse.truncation);
}

TEST_CASE("oracle leaves are invariant") {
  const OmegaWord s4 = sample_word(make_scenario("S4"), 4, 200);
  const Vec z = v2(0.3, -0.2);
  for (double x : {-0.5, 0.2, 0.9}) {
    const Vec p = v2(x, skew_leaf_oracle(s4, z, x).value);
    const Vec fp = s4.map(0).apply(p);
    const Vec fz = s4.map(0).apply(z);
    CHECK(std::abs(fp(1) - skew_leaf_oracle(s4.shift(1), fz, fp(0)).value) < 1e-10);
  }
}

TEST_CASE("skew_holonomy_oracle") {
  const OmegaWord s3 = sample_word(make_scenario("S3"), 1, 100);
  CHECK(skew_holonomy_oracle(s3, 0.4, 0.4).value == 0.0);
  double delta = 0;
  for (int k = 0; k <= 40; ++k) delta -= std::ldexp(std::sin(std::ldexp(0.4, -k)), -k - 1);
  CHECK(std::abs(skew_holonomy_oracle(s3, 0, 0.4).value - delta) < 1e-12);
  CHECK(delta == doctest::Approx(-0.2610).epsilon(1e-3));

  // S4 seed 7: the same series with the realized (a_j, b_j, c_j)
  const OmegaWord s4 = sample_word(make_scenario("S4"), 7, 200);
  double sum = 0, bprod = 1, x1 = 0, x2 = 0.3;
  for (std::size_t k = 0; k < 150; ++k) {
    const Vec p = s4.params(k);  // (a, b, c)
    bprod *= p(1);
    sum -= p(2) * (std::sin(x2) - std::sin(x1)) / bprod;
    x1 *= p(0);
    x2 *= p(0);
  }
  CHECK(std::abs(skew_holonomy_oracle(s4, 0, 0.3).value - sum) < 1e-12);
}

TEST_CASE("difference_orbit avoids cancellation") {
  const OmegaWord s3 = sample_word(make_scenario("S3"), 1, 100);
  // both points on the leaf of the origin: the difference halves every step,
  // while the rounding error in y0 doubles
  const Vec y = v2(1, s3_leaf(0, 0, 1));
  const auto diff = difference_orbit(s3, v2(0, 0), y, 30);
  for (std::size_t n = 1; n <= 30; ++n) {
    const int k = static_cast<int>(n);
    CHECK(diff[n].norm() <= 2 * std::ldexp(y.norm(), -k) + std::ldexp(4e-16, k));
  }
  // a displacement of 1e-300 survives at a base point far from the origin
  const auto tiny = difference_orbit(s3, v2(1e3, 1e6), v2(0, 1e-300), 5);
  CHECK(tiny[5](1) == doctest::Approx(32e-300).epsilon(1e-12));
}

TEST_CASE("brute_force_stable_pairs") {
  const OmegaWord s1 = sample_word(make_scenario("S1"), 1, 100);
  std::vector<Vec> axis;
  for (int i = -4; i <= 4; ++i) axis.push_back(v2(0, 0.25 * i));
  for (const auto& row : brute_force_stable_pairs(s1, v2(0, 0), axis, 20)) {
    CHECK(row.member);
    // (1/20) log(2^-20 |y|)
    if (row.point.norm() > 0) CHECK(row.rate == doctest::Approx(std::log(row.point.norm()) / 20 - std::log(2.0)).epsilon(1e-9));
  }
  CHECK(brute_force_stable_pairs(s1, v2(0, 0), {}, 20).empty());

  // S3: members of a 41 x 41 grid on [-1, 1]^2 hug the oracle leaf
  const OmegaWord s3 = sample_word(make_scenario("S3"), 1, 100);
  std::vector<Vec> grid;
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= 40; ++j) grid.push_back(v2(-1 + 0.05 * i, -1 + 0.05 * j));
  }
  std::size_t members = 0;
  for (const auto& row : brute_force_stable_pairs(s3, v2(0, 0), grid, 20)) {
    if (!row.member) continue;
    ++members;
    CHECK(std::abs(row.point(1) - s3_leaf(0, 0, row.point(0))) <= 0.05);
  }
  CHECK(members >= 1);
}
