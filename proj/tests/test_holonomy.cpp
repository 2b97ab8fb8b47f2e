#include <doctest.h>

#include <cmath>

#include "pesin/holonomy.hpp"
#include "pesin/scenarios.hpp"

using namespace pesin;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec c1(double x) { return Vec::Constant(1, x); }

OmegaWord word(const std::string& name, std::uint64_t seed = 1) { return sample_word(make_scenario(name), seed, 100000); }

PesinParams params(double a, double b, double eps) {
  PesinParams p;
  p.a = a;
  p.b = b;
  p.k = 1;
  p.eps = eps;
  return p;
}

const PesinParams kP = params(-0.5, 0.5, 0.002);
const Vec kE2 = Vec::Unit(2, 1);

// -sum_k 2^{-k-1} (sin(x2 2^-k) - sin(x1 2^-k)), k = 0..40
double s3_delta(double x1, double x2) {
  double d = 0;
  for (int k = 0; k <= 40; ++k) d -= std::ldexp(std::sin(std::ldexp(x2, -k)) - std::sin(std::ldexp(x1, -k)), -k - 1);
  return d;
}

PoincareHandle vertical(const OmegaWord& w, double x1, double x2) {
  return PoincareHandle(w, kP, line_transversal(w, kP, v2(x1, 0), kE2, 0.5), line_transversal(w, kP, v2(x2, 0), kE2, 0.8));
}

Transversal tilted(const OmegaWord& w, double tilt, double q = 0.5) {
  return make_transversal(
      w, kP, [tilt](const Vec& s) { return v2(tilt * std::tanh(s(0)), s(0)); },
      [tilt](const Vec& s) {
        const double c = std::cosh(s(0));
        return Mat((Mat(2, 1) << tilt / (c * c), 1).finished());
      },
      q);
}

bool transversality_error(ErrorKind k) {
  return k == ErrorKind::Transversality || k == ErrorKind::NonUniqueness || k == ErrorKind::Precondition;
}

}  // namespace

TEST_CASE("leaf meets a vertical line at the series point") {
  const OmegaWord w = word("S3");
  const StableChart leaf = local_stable_chart(w, v2(0, 0), 1.0, kP);
  const Transversal t = line_transversal(w, kP, v2(0.4, 0), kE2, 0.8);
  const Intersection x = intersect_leaf_with_transversal(leaf, t);
  CHECK(std::abs(x.point(0) - 0.4) < 1e-10);
  CHECK(std::abs(x.point(1) - s3_delta(0, 0.4)) < 1e-8);
  CHECK(x.point(1) == doctest::Approx(-0.2610).epsilon(2e-4));
  CHECK(x.residual < 1e-8);
}

TEST_CASE("leaf through a point of the transversal") {
  const OmegaWord w = word("S3");
  const Transversal t = line_transversal(w, kP, v2(0.4, 0), kE2, 0.8);
  const Vec y = t.point(c1(0.1));
  const StableChart leaf = local_stable_chart(w, y, 0.5, kP);
  const Intersection x = intersect_leaf_with_transversal(leaf, t);
  CHECK((x.point - y).norm() < 1e-10);
  CHECK(std::abs(x.s(0) - 0.1) < 1e-10);
}

TEST_CASE("tangential transversals are rejected") {
  const OmegaWord w = word("S3");
  // E_0 at the origin is span(3, -2)
  try {
    const PoincareHandle h(w, kP, line_transversal(w, kP, v2(0, 0), v2(3, -2), 0.5),
                           line_transversal(w, kP, v2(0.4, 0), kE2, 0.8));
    h.map(c1(0.1));
    FAIL("expected a transversality error");
  } catch (const Error& e) {
    CHECK(transversality_error(e.kind()));
  }
}

TEST_CASE("S3 vertical pair: translation, involution, J = 1") {
  const OmegaWord w = word("S3");
  const PoincareHandle h = vertical(w, 0, 0.4);
  const PoincareHandle back = h.reversed();
  const double delta = s3_delta(0, 0.4);
  for (double s : {-0.3, 0.0, 0.25}) {
    const PoincareRecord r = h.map(c1(s));
    const Vec py = poincare_map(h, c1(s));
    CHECK(std::abs(py(0) - 0.4) < 1e-12);
    CHECK(std::abs(py(1) - (s + delta)) < 1e-8);
    CHECK(std::abs(back.map(r.s2).s2(0) - s) < 1e-8);

    const DetEstimate d = jacobian_det_ratio(h, c1(s));
    CHECK(d.converged);
    for (double v : d.history) CHECK(std::abs(v - 1) < 1e-10);
    const RatioEstimate q = jacobian_measure_ratio(h, c1(s));
    for (double v : q.ratios) CHECK(std::abs(v - 1) < 1e-8);
    CHECK(std::abs(q.value - 1) < 1e-8);
  }
  const ActReport rep = act_verify(h, {c1(-0.2), c1(0), c1(0.2)}, 1e-6);
  CHECK(rep.pass);
  CHECK(rep.max_deviation < 1e-6);
}

TEST_CASE("identical transversals give the identity") {
  const OmegaWord w = word("S4", 2);
  const Transversal t = line_transversal(w, kP, v2(0.1, 0), kE2, 0.5);
  const PoincareHandle h(w, kP, t, t);
  CHECK(h.identical());
  CHECK(h.map(c1(0.3)).s2(0) == 0.3);
  const JacobianEstimate j = estimate_jacobian(h, c1(0.3));
  CHECK(j.value_det == 1.0);
  CHECK(j.value_ratio == 1.0);
  const ActReport rep = act_verify(h, {c1(-0.1), c1(0.2)}, 0.0);
  CHECK(rep.max_deviation == 0.0);
  CHECK(rep.pass);
}

TEST_CASE("S1: horizontal transversals are matched at equal x") {
  // leaves of diag(2, 1/2) are the vertical lines, so the holonomy between
  // two horizontal lines keeps x
  const OmegaWord w = word("S1");
  const Vec e1 = Vec::Unit(2, 0);
  const PoincareHandle h(w, kP, line_transversal(w, kP, v2(0, 0), e1, 0.5),
                         line_transversal(w, kP, v2(0, 0.4), e1, 0.8));
  for (double s : {-0.2, 0.0, 0.3}) {
    CHECK(std::abs(h.map(c1(s)).s2(0) - s) < 1e-10);
    CHECK(std::abs(jacobian_det_ratio(h, c1(s)).value - 1) < 1e-10);
  }
}

TEST_CASE("tilted transversal: value_det against finite differences") {
  for (const char* name : {"S3", "S4"}) {
    const OmegaWord w = word(name, 7);
    const Transversal t1 = tilted(w, 0.1);
    const Transversal t2 = line_transversal(w, kP, v2(0.4, 0), kE2, 0.8);
    const PoincareHandle h(w, kP, t1, t2);
    const PoincareHandle back = h.reversed();
    for (double s : {-0.2, 0.05, 0.3}) {
      // J = |T2| ds2/ds1 / |T1|, with |T2| = 1 on the vertical line
      const double dh = 1e-5;
      const double ds2 = (h.map(c1(s + dh)).s2(0) - h.map(c1(s - dh)).s2(0)) / (2 * dh);
      const double fd = ds2 / t1.tangent_at(c1(s)).norm();
      const JacobianEstimate j = estimate_jacobian(h, c1(s));
      CHECK(j.value_det > 0);
      CHECK(std::abs(j.value_det - fd) < 1e-4);
      CHECK(std::abs(j.value_det - j.value_ratio) <= std::max(1e-3, j.quadrature_error));
      const JacobianEstimate jb = estimate_jacobian(back, h.map(c1(s)).s2);
      CHECK(std::abs(j.value_det * jb.value_det - 1) < 1e-6);
    }
  }
}

TEST_CASE("S4 tilt sweep is monotone") {
  const OmegaWord w = word("S4", 7);
  const Transversal t2 = line_transversal(w, kP, v2(0.4, 0), kE2, 0.8);
  std::vector<Vec> grid;
  for (int i = 0; i <= 4; ++i) grid.push_back(c1(-0.2 + 0.1 * i));
  std::vector<double> dev;
  for (double tilt : {0.2, 0.1, 0.05, 0.0}) {
    const PoincareHandle h(w, kP, tilted(w, tilt), t2);
    dev.push_back(act_verify(h, grid, 1.0).max_deviation);
  }
  for (std::size_t i = 1; i < dev.size(); ++i) CHECK(dev[i] <= 1.1 * dev[i - 1]);
  CHECK(dev.back() < 1e-6);
}

TEST_CASE("summarize_act") {
  JacobianEstimate ok;
  ok.value_det = 1.001;
  ok.value_ratio = 0.9995;
  JacobianEstimate skipped;
  skipped.skipped = true;
  const ActReport r = summarize_act({ok, skipped}, 0.002);
  CHECK(r.pass);
  CHECK(r.skipped == 1);
  CHECK(r.max_deviation == doctest::Approx(0.001));
  CHECK_FALSE(summarize_act({ok}, 0.0005).pass);
  CHECK_FALSE(summarize_act({skipped}, 1.0).pass);
}
