#include <doctest.h>

#include <cmath>

#include "pesin/graph_transform.hpp"
#include "pesin/scenarios.hpp"

using namespace pesin;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

PesinParams params(double a, double b, double eps, double l = 1, double r = 1) {
  PesinParams p;
  p.a = a;
  p.b = b;
  p.k = 1;
  p.eps = eps;
  p.l_prime = l;
  p.r_prime = r;
  return p;
}

TransformContext context(const std::string& name, std::uint64_t seed, const PesinParams& p, std::size_t horizon) {
  const OmegaWord w = sample_word(make_scenario(name), seed, 100000);
  const Vec z = Vec::Zero(2);
  return TransformContext(w, build_lyapunov_metric(w, z, stable_splitting(w, z, p, 200), p, horizon));
}

Vec c1(double x) { return Vec::Constant(1, x); }

}  // namespace

TEST_CASE("theorem constants and q bound") {
  const PesinParams p = params(-0.6, 0.6, 0.003);
  const double a = p.a, b = p.b, e = p.eps, C = 0.5;
  const double A = 4 / std::sqrt(1 - std::exp(-2 * e));
  const double eps0 = std::exp(a + 4 * e) - std::exp(a + 2 * e);
  const double c0 = 4 * A * 1.0 * std::exp(2 * e);
  const double r0 = eps0 / c0;
  const TheoremConstants tc = theorem_constants(p);
  CHECK(tc.A == doctest::Approx(A).epsilon(1e-14));
  CHECK(tc.eps0 == doctest::Approx(eps0).epsilon(1e-14));
  CHECK(tc.c0 == doctest::Approx(c0).epsilon(1e-14));
  CHECK(tc.r0 == doctest::Approx(r0).epsilon(1e-14));

  const QBound q = q_admissible(p, C, 2);
  const double t1 = r0 / (2 * A);
  const double t2 = (std::exp(b - 2 * e) - std::exp(a + 12 * e)) / (2 * c0);
  const double t3 = C * (std::exp(b - 18 * e) - std::exp(a + 2 * e)) / (4 * c0);
  CHECK(q.radius_term == doctest::Approx(t1).epsilon(1e-13));
  CHECK(q.gap_term == doctest::Approx(t2).epsilon(1e-13));
  CHECK(q.slope_term == doctest::Approx(t3).epsilon(1e-13));
  CHECK(q.delta_term == 0.25);
  CHECK(q.value == doctest::Approx(std::min({t1, t2, t3, 0.25})).epsilon(1e-13));
  const std::string s = q.describe();
  for (const char* part : {"r0/(2A)", "(2c0)", "(4c0)", "delta_l"}) CHECK(s.find(part) != std::string::npos);
}

TEST_CASE("linear blocks contract and expand in the metric") {
  const PesinParams p = params(-0.6, 0.6, 0.002);
  const TransformContext ctx = context("S4", 3, p, 20);
  for (std::size_t n = 0; n < 20; ++n) {
    CHECK(std::abs(ctx.block_a(n)(0, 0)) <= std::exp(p.a + 2 * p.eps) * (1 + 1e-8));
    CHECK(std::abs(ctx.block_b(n)(0, 0)) >= std::exp(p.b - 2 * p.eps) * (1 - 1e-8));
  }
}

TEST_CASE("remainder vanishes to first order") {
  const TransformContext ctx = context("S3", 1, params(-0.6, 0.6, 0.002), 10);
  for (std::size_t n : {0, 4, 9}) {
    CHECK(ctx.remainder(n, Vec::Zero(2)).norm() < 1e-12);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
      const Vec e = Vec::Unit(2, j) * h;
      const Vec d = (ctx.remainder(n, e) - ctx.remainder(n, -e)) / (2 * h);
      CHECK(d.norm() < 1e-6);
    }
    CHECK((ctx.phi(n, Vec::Zero(2))).norm() == 0.0);
  }
}

TEST_CASE("S1: the zero graph is invariant") {
  const PesinParams p = params(-0.6, 0.6, 0.003);
  const TransformContext ctx = context("S1", 1, p, 10);
  const double C = 0.5, q = q_admissible(p, C, 2).value;
  const auto zero = [](const Vec&) { return c1(0); };
  const auto dzero = [](const Vec&) { return Mat(Mat::Zero(1, 1)); };
  const TransversalEvolution ev = evolve_transversal(ctx, zero, dzero, c1(0), c1(0), q / 4, C, q, 10);
  REQUIRE(ev.charts.size() == 11);
  for (const GraphChart& ch : ev.charts) {
    // zero up to the rounding of the frames
    CHECK(ch.sup_value <= 1e-12 * q);
    CHECK(ch.sup_derivative <= 1e-12);
  }
  CHECK(ev.all_within_bounds);
}

TEST_CASE("S3: vertical lines go to vertical lines") {
  // x = c in ambient coordinates is v = (c - P01 u) / P00 in normalized ones,
  // and its image is x = c/2
  const TransformContext ctx = context("S3", 1, params(-0.6, 0.6, 0.002), 8);
  const auto line = [&](std::size_t n, double c) {
    const Vec col0 = ctx.to_ambient(n, v2(1, 0)), col1 = ctx.to_ambient(n, v2(0, 1));
    return std::make_pair(c / col0(0), -col1(0) / col0(0));  // v = off + slope * u
  };
  const double c = 1e-3;
  const auto [off0, slope0] = line(0, c);
  GraphChart chart = make_chart(
      0, [&](const Vec& u) { return c1(off0 + slope0 * u(0)); }, [&](const Vec&) { return Mat(Mat::Constant(1, 1, slope0)); },
      c1(0), c1(off0), 1e-3);
  for (std::size_t n = 1; n <= 8; ++n) {
    chart = graph_transform_step(ctx, chart);
    const auto [off, slope] = line(n, std::ldexp(c, -static_cast<int>(n)));
    for (std::size_t f = 0; f < chart.psi.size(); ++f) {
      const Vec u = chart.psi.node(f);
      CHECK(std::abs(chart.psi.node_value(f)(0) - (off + slope * u(0))) < 1e-10);
      CHECK(std::abs(chart.psi.node_derivative(f)(0, 0) - slope) < 1e-8);
    }
    CHECK(chart.invariance_residual < 1e-8);
  }
}

TEST_CASE("S3 tanh seed obeys the ledger") {
  const PesinParams p = params(-0.6, 0.6, 0.002);
  const TransformContext ctx = context("S3", 1, p, 10);
  const double C = 0.5, q = q_admissible(p, C, 2).value;
  const auto psi = [](const Vec& u) { return c1(0.05 * std::tanh(u(0))); };
  const auto dpsi = [](const Vec& u) { return Mat(Mat::Constant(1, 1, 0.05 / std::pow(std::cosh(u(0)), 2))); };
  const TransversalEvolution ev = evolve_transversal(ctx, psi, dpsi, c1(0), c1(0), q / 4, C, q, 10);
  REQUIRE(ev.ledger.size() == 11);
  for (const LedgerRow& r : ev.ledger) {
    CHECK(r.sup_dpsi <= C * std::exp(-14 * p.eps * static_cast<double>(r.n)) + 1e-6);
    CHECK(r.sup_psi <= (0.25 + C) * q * std::exp((p.a + 7 * p.eps) * static_cast<double>(r.n)) + 1e-6);
    CHECK(r.invariance_residual < 1e-8);
    CHECK_FALSE(r.violation);
  }
}

TEST_CASE("preconditions are named") {
  const PesinParams p = params(-0.6, 0.6, 0.002);
  const TransformContext ctx = context("S3", 1, p, 5);
  const double C = 0.5, q = q_admissible(p, C, 2).value;
  const auto steep = [](const Vec& u) { return c1(0.9 * u(0)); };
  const auto dsteep = [](const Vec&) { return Mat(Mat::Constant(1, 1, 0.9)); };
  const auto expect = [](auto&& call, const std::string& needle) {
    try {
      call();
      FAIL("expected a precondition error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Precondition);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect([&] { evolve_transversal(ctx, steep, dsteep, c1(0), c1(0), q / 4, C, q, 5); }, "initial graph slope");
  expect([&] { evolve_transversal(ctx, steep, dsteep, c1(0), c1(0), q / 4, C, 2 * q, 5); }, "q <= q1_C");
  expect([&] { evolve_transversal(ctx, steep, dsteep, c1(0), c1(0), q, C, q, 5); }, "delta_0");
  expect([&] { evolve_transversal(ctx, steep, dsteep, c1(1e-3), c1(0), q / 4, C, q, 5); }, "anchor");
  expect([&] { evolve_transversal(ctx, steep, dsteep, c1(0), c1(0), q / 4, 1.5, q, 5); }, "slope constant");
  CHECK_THROWS_AS(evolve_transversal(ctx, steep, dsteep, c1(0), c1(0), q / 4, C, q, 6), Error);
}
