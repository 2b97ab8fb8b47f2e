#include "pesin/stable_manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pesin/linalg.hpp"
#include "pesin/scenarios.hpp"

namespace pesin {

std::size_t finite_orbit_length(const OmegaWord& word, const Vec& x, std::size_t cap) {
  Vec xj = x;
  for (std::size_t j = 0; j < cap; ++j) {
    xj = word.map(j).apply(xj);
    if (!xj.allFinite() || xj.cwiseAbs().maxCoeff() > kOverflowGuard) return j;
  }
  return cap;
}

OseledetsSplit local_splitting(const OmegaWord& word, const Vec& x, const PesinParams& params,
                               std::size_t max_horizon) {
  const int d = static_cast<int>(x.size());
  const std::size_t L = finite_orbit_length(word, x, max_horizon);
  if (L < 10) {
    fail(ErrorKind::ChartDomain, "local_splitting: the orbit leaves the finite range after " + std::to_string(L) +
                                     " steps");
  }
  OseledetsSplit split;
  split.a = params.a;
  split.b = params.b;
  split.horizon = L;
  split.positive_b = params.b > 0;
  split.spectrum = lyapunov_spectrum(word, x, L);
  const Vec& rho = split.spectrum.exponents;
  int k = 0;
  for (int i = 0; i < d; ++i) {
    if (rho(i) >= params.a && rho(i) <= params.b) {
      fail(ErrorKind::ChartDomain, "local_splitting: exponent " + std::to_string(rho(i)) +
                                       " lies in the gap; no contraction to build a chart from");
    }
    if (rho(i) < params.a) ++k;
  }
  if (k != params.k) {
    fail(ErrorKind::ChartDomain, "local_splitting: found " + std::to_string(k) + " exponents below a, expected " +
                                     std::to_string(params.k));
  }
  split.k = k;
  split.burn_in = std::min(default_burn_in(split.spectrum, k), L);
  const OrbitFrames frames = build_frames(word, x, k, 0, split.burn_in);
  split.E0 = frames.E[0];
  split.H0 = frames.H[0];
  return split;
}

namespace {

// Anchor orbit, step maps and the forward-propagated transverse basis.
struct ShootingTrack {
  std::vector<DiffeoMap> maps;
  Orbit base;
  std::vector<Mat> hb;
  std::vector<double> log_growth;  // log of the expansion of hb up to step j
  std::size_t length = 0;
};

ShootingTrack make_track(const ShootingProblem& pr) {
  ShootingTrack t;
  const std::size_t L = finite_orbit_length(pr.word, pr.anchor, pr.n_shoot);
  t.length = L;
  t.base.push_back(pr.anchor);
  t.hb.push_back(orthonormalize(pr.direction));
  t.log_growth.push_back(0);
  for (std::size_t j = 0; j < L; ++j) {
    t.maps.push_back(pr.word.map(j));
    const Mat jac = t.maps[j].jacobian_at(t.base[j]);
    const Mat img = jac * t.hb[j];
    Eigen::HouseholderQR<Mat> qr(img);
    const Mat r = qr.matrixQR().topRows(img.cols()).triangularView<Eigen::Upper>();
    t.log_growth.push_back(t.log_growth.back() + std::log(std::abs(r.diagonal().prod())) / img.cols());
    t.hb.push_back(orthonormalize(img));
    t.base.push_back(t.maps[j].apply(t.base[j]));
  }
  return t;
}

// Unstable component of the displacement at the stopping time.
Vec track_functional(const ShootingProblem& pr, const ShootingTrack& t, const Vec& s, std::size_t horizon,
                     bool allow_escape, std::size_t& stop) {
  Vec delta = pr.offset(s);
  const double threshold = std::max(pr.escape_radius, 16 * delta.norm());
  for (std::size_t j = 0; j < horizon; ++j) {
    Vec next = t.maps[j].apply_difference(t.base[j], delta);
    if (!next.allFinite()) {
      if (allow_escape) {
        stop = j;
        return t.hb[j].transpose() * delta;
      }
      fail(ErrorKind::ChartDomain, "shoot_to_leaf: displacement left the finite range");
    }
    delta = std::move(next);
    if (allow_escape && delta.norm() > threshold) {
      stop = j + 1;
      return t.hb[j + 1].transpose() * delta;
    }
  }
  stop = horizon;
  return t.hb[horizon].transpose() * delta;
}

double sign_of(double v) { return (v > 0) - (v < 0); }

ShootingResult bisect(const ShootingProblem& pr, const ShootingTrack& t, double lo, double hi, double glo,
                      double s_tol) {
  ShootingResult res;
  std::size_t stop = 0;
  int it = 0;
  double mid = 0.5 * (lo + hi);
  for (; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    if (hi - lo <= s_tol * std::max(1.0, std::abs(mid))) break;
    Vec sm(1);
    sm(0) = mid;
    const double g = track_functional(pr, t, sm, t.length, true, stop)(0);
    if (g == 0) {
      lo = hi = mid;
      break;
    }
    if (sign_of(g) == sign_of(glo)) {
      lo = mid;
      glo = g;
    } else {
      hi = mid;
    }
  }
  res.s = Vec::Constant(1, mid);
  res.iterations = it;
  res.bracket_width = std::abs(hi - lo);
  const Vec g = track_functional(pr, t, res.s, t.length, true, stop);
  res.horizon_used = stop;
  res.leaf_residual = std::abs(g(0)) * std::exp(-t.log_growth[stop]) + res.bracket_width * op_norm(pr.direction);
  return res;
}

ShootingResult newton_continuation(const ShootingProblem& pr, const ShootingTrack& t, const Vec& seed,
                                   double s_tol) {
  ShootingResult res;
  Vec s = seed;
  const Index p = seed.size();
  std::size_t stop = 0;
  std::vector<std::size_t> horizons;
  for (std::size_t n = 1; n < t.length; n *= 2) horizons.push_back(n);
  horizons.push_back(t.length);
  int total = 0;
  for (std::size_t n : horizons) {
    for (int it = 0; it < 30; ++it, ++total) {
      const Vec g = track_functional(pr, t, s, n, false, stop);
      Mat jac(p, p);
      const double hs = 1e-7 * std::max(1.0, s.norm());
      for (Index j = 0; j < p; ++j) {
        Vec sp = s, sm = s;
        sp(j) += hs;
        sm(j) -= hs;
        jac.col(j) = (track_functional(pr, t, sp, n, false, stop) - track_functional(pr, t, sm, n, false, stop)) /
                     (2 * hs);
      }
      const Vec step = jac.partialPivLu().solve(g);
      if (!step.allFinite()) fail(ErrorKind::ChartDomain, "shoot_to_leaf: singular shooting Jacobian");
      s -= step;
      if (step.norm() <= s_tol * std::max(1.0, s.norm())) break;
    }
  }
  res.s = s;
  res.iterations = total;
  const Vec g = track_functional(pr, t, s, t.length, false, stop);
  res.horizon_used = t.length;
  res.leaf_residual = g.norm() * std::exp(-t.log_growth[t.length]);
  return res;
}

}  // namespace

double shooting_functional(const ShootingProblem& problem, const Vec& s, std::size_t* stop) {
  const ShootingTrack t = make_track(problem);
  std::size_t st = 0;
  const Vec g = track_functional(problem, t, s, t.length, true, st);
  if (stop) *stop = st;
  return g(0);
}

ShootingResult shoot_in_interval(const ShootingProblem& problem, double lo, double hi, double s_tol) {
  const ShootingTrack t = make_track(problem);
  if (t.length < 1) fail(ErrorKind::ChartDomain, "shoot_in_interval: anchor orbit leaves the finite range");
  std::size_t stop = 0;
  const double glo = track_functional(problem, t, Vec::Constant(1, lo), t.length, true, stop)(0);
  const double ghi = track_functional(problem, t, Vec::Constant(1, hi), t.length, true, stop)(0);
  if (glo == 0) return bisect(problem, t, lo, lo, glo, s_tol);
  if (ghi == 0) return bisect(problem, t, hi, hi, ghi, s_tol);
  if (sign_of(glo) == sign_of(ghi)) {
    fail(ErrorKind::Transversality, "shoot_in_interval: no sign change of the unstable component on [" +
                                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return bisect(problem, t, lo, hi, glo, s_tol);
}

ShootingResult shoot_to_leaf(const ShootingProblem& problem, const Vec& seed, double step, int max_expand,
                             double s_tol) {
  const ShootingTrack t = make_track(problem);
  if (t.length < 1) fail(ErrorKind::ChartDomain, "shoot_to_leaf: anchor orbit leaves the finite range");
  if (seed.size() > 1) return newton_continuation(problem, t, seed, s_tol);
  std::size_t stop = 0;
  const double s0 = seed(0);
  const double g0 = track_functional(problem, t, seed, t.length, true, stop)(0);
  if (g0 == 0) return bisect(problem, t, s0, s0, g0, s_tol);
  double w = step;
  for (int i = 0; i < max_expand; ++i, w *= 2) {
    for (double sgn : {1.0, -1.0}) {
      const double s1 = s0 + sgn * w;
      const double g1 = track_functional(problem, t, Vec::Constant(1, s1), t.length, true, stop)(0);
      if (sign_of(g1) != sign_of(g0)) {
        return sgn > 0 ? bisect(problem, t, s0, s1, g0, s_tol) : bisect(problem, t, s1, s0, g1, s_tol);
      }
    }
  }
  fail(ErrorKind::ChartDomain,
       "shoot_to_leaf: no bracket for the leaf found; the chart domain is too large, try a smaller radius");
}

Vec StableChart::constants_at(std::size_t m) const {
  const double dm = static_cast<double>(m) - static_cast<double>(n);
  Vec c(3);
  c << alpha * std::exp(-5 * params.eps * dm), beta_lip * std::exp(7 * params.eps * dm),
      gamma * std::exp(2 * params.eps * dm);
  return c;
}

StableChart local_stable_chart(const OmegaWord& word, const Vec& z, double radius_request, const PesinParams& params,
                               const StableChartOptions& options) {
  if (!(radius_request > 0)) fail(ErrorKind::Domain, "local_stable_chart: radius must be positive");
  const OseledetsSplit split = local_splitting(word, z, params, options.spectrum_horizon);
  StableChart chart;
  chart.word = word;
  chart.base = z;
  chart.params = params;
  chart.k = split.k;
  chart.E0 = split.E0;
  chart.H0 = split.H0;
  chart.radius = std::min(radius_request, options.alpha0);
  chart.alpha = chart.radius;
  chart.beta_lip = options.beta0;
  chart.gamma = options.gamma0 > 0 ? options.gamma0 : 2 * params.metric_constant();
  const int k = chart.k;
  const int p = static_cast<int>(z.size()) - k;

  std::size_t n_shoot = options.n_shoot;
  if (n_shoot == 0) {
    n_shoot = std::max<std::size_t>(50, static_cast<std::size_t>(std::ceil(40.0 / (params.b - params.a))));
  }
  n_shoot = std::min(n_shoot, finite_orbit_length(word, z, n_shoot));
  if (n_shoot < 10) fail(ErrorKind::ChartDomain, "local_stable_chart: the orbit of z is too short to shoot along");
  chart.n_shoot = n_shoot;

  chart.h = GridFunction(Vec::Zero(k), chart.radius, options.nodes_per_dim, options.degree, p);
  ShootingProblem pr{word, z, nullptr, chart.H0, n_shoot, options.escape_radius};
  const auto solve_at = [&](const Vec& xi, const Vec& seed) {
    pr.offset = [&, xi](const Vec& s) { return Vec(chart.E0 * xi + chart.H0 * s); };
    const ShootingResult r = shoot_to_leaf(pr, seed, 1e-3 * chart.radius);
    chart.max_leaf_residual = std::max(chart.max_leaf_residual, r.leaf_residual);
    return r.s;
  };

  // Continuation outward from the centre: each node is seeded by the
  // nearest node already solved.
  const std::size_t count = chart.h.size();
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return chart.h.node(i).norm() < chart.h.node(j).norm(); });
  std::vector<Vec> solved(count);
  std::vector<bool> done(count, false);
  const double dstep = options.derivative_step * chart.radius;
  for (std::size_t idx : order) {
    const Vec xi = chart.h.node(idx);
    Vec seed = Vec::Zero(p);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < count; ++j) {
      if (!done[j]) continue;
      const double dist = (chart.h.node(j) - xi).norm();
      if (dist < best) {
        best = dist;
        seed = solved[j];
      }
    }
    Vec eta = xi.norm() == 0 ? Vec(Vec::Zero(p)) : solve_at(xi, seed);
    Mat dh(p, k);
    for (int j = 0; j < k; ++j) {
      Vec xp = xi, xm = xi;
      xp(j) += dstep;
      xm(j) -= dstep;
      dh.col(j) = (solve_at(xp, eta) - solve_at(xm, eta)) / (2 * dstep);
    }
    solved[idx] = eta;
    done[idx] = true;
    chart.h.set(idx, eta, dh);
  }
  for (const Vec& xi : chart.h.sample_points(2)) {
    chart.measured_lip = std::max(chart.measured_lip, op_norm(chart.h.derivative(xi)));
  }
  return chart;
}

ContractionReport stable_contraction_check(const StableChart& chart, const Vec& xi1, const Vec& xi2,
                                           std::size_t l_steps, double rel_tol) {
  ContractionReport rep;
  // Anchor orbit, truncated where it leaves the finite range.
  const std::size_t L = finite_orbit_length(chart.word, chart.base, l_steps);
  rep.truncated = L < l_steps;
  rep.steps_done = L;
  std::vector<DiffeoMap> maps;
  Orbit base{chart.base};
  for (std::size_t j = 0; j < L; ++j) {
    maps.push_back(chart.word.map(j));
    base.push_back(maps[j].apply(base[j]));
  }
  const auto lengths = [&](std::size_t segments) {
    std::vector<double> len(L + 1, 0.0);
    std::vector<Vec> prev(L + 1);
    for (std::size_t i = 0; i <= segments; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(segments);
      Vec delta = chart.point(xi1 + t * (xi2 - xi1)) - chart.base;
      std::vector<Vec> cur(L + 1);
      cur[0] = delta;
      for (std::size_t j = 0; j < L; ++j) {
        delta = maps[j].apply_difference(base[j], delta);
        cur[j + 1] = delta;
      }
      if (i > 0) {
        for (std::size_t j = 0; j <= L; ++j) len[j] += (cur[j] - prev[j]).norm();
      }
      prev = std::move(cur);
    }
    return len;
  };

  std::vector<double> d;
  if ((xi1 - xi2).norm() == 0) {
    d.assign(L + 1, 0.0);
  } else {
    std::size_t segments = 16;
    d = lengths(segments);
    for (; segments < (1u << 20);) {
      segments *= 2;
      std::vector<double> finer = lengths(segments);
      bool ok = true;
      for (std::size_t j = 0; j <= L; ++j) ok = ok && std::abs(finer[j] - d[j]) <= rel_tol * finer[j];
      // Polyline lengths converge like segments^{-2}; extrapolate the last pair.
      for (std::size_t j = 0; j <= L; ++j) d[j] = finer[j] + (finer[j] - d[j]) / 3;
      if (ok) break;
    }
  }
  rep.distances = d;
  const double rate = chart.params.a + 4 * chart.params.eps;
  for (std::size_t j = 0; j <= L; ++j) {
    rep.bounds.push_back(chart.gamma * std::exp(rate * static_cast<double>(j)) * d[0]);
    rep.holds = rep.holds && d[j] <= rep.bounds[j] * (1 + 1e-12);
    if (j > 0) rep.ratios.push_back(d[j - 1] > 0 ? d[j] / d[j - 1] : 0.0);
  }
  if (L > 0 && d[0] > 0) rep.geometric_mean = std::pow(d[L] / d[0], 1.0 / static_cast<double>(L));
  return rep;
}

GlobalStableResult global_stable_test(const OmegaWord& word, const Vec& x, const Vec& y, std::size_t horizon,
                                      double rate_margin) {
  if (horizon < 10) fail(ErrorKind::Domain, "global_stable_test: horizon must be at least 10");
  GlobalStableResult res;
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<Vec> diffs;
  try {
    diffs = difference_orbit(word, x, y - x, horizon);
  } catch (const OrbitDivergence&) {
    res.diverged = true;
    res.member = false;
    res.rate = std::numeric_limits<double>::infinity();
    return res;
  }
  for (std::size_t n = 1; n <= horizon; ++n) {
    const double dn = diffs[n].norm();
    res.slopes.push_back(dn > 0 ? std::log(dn) / static_cast<double>(n) : ninf);
  }
  res.rate = ninf;
  for (std::size_t n = (horizon + 1) / 2; n <= horizon; ++n) res.rate = std::max(res.rate, res.slopes[n - 1]);
  res.member = res.rate < -rate_margin;
  return res;
}

}  // namespace pesin
