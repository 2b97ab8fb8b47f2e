#include "pesin/oseledets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pesin/linalg.hpp"
#include "pesin/rng.hpp"

namespace pesin {

double group_tolerance(std::size_t horizon) {
  return std::max(1e-3, 5.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(horizon, 1))));
}

SpectrumEstimate lyapunov_spectrum(const OmegaWord& word, const Vec& x, std::size_t horizon,
                                   std::size_t qr_stride, std::size_t record_every) {
  if (qr_stride < 1 || horizon < qr_stride) fail(ErrorKind::Domain, "lyapunov_spectrum: need n >= stride >= 1");
  const Index d = x.size();
  const OmegaWord w = word.extended(horizon);
  SpectrumEstimate est;
  est.horizon = horizon;
  Mat q = Mat::Identity(d, d);
  Vec logs = Vec::Zero(d);
  Vec half_logs = Vec::Zero(d);
  std::size_t half_steps = 0;
  double logdet = 0;
  Vec p = x;
  std::size_t j = 0;
  while (j < horizon) {
    const std::size_t block = std::min(qr_stride, horizon - j);
    Mat m = q;
    for (std::size_t i = 0; i < block; ++i, ++j) {
      const DiffeoMap f = w.map(j);
      const Mat jac = f.jacobian_at(p);
      logdet += std::log(std::abs(jac.determinant()));
      m = jac * m;
      p = f.apply(p);
      if (!p.allFinite() || p.cwiseAbs().maxCoeff() > kOverflowGuard) {
        throw OrbitDivergence(j, "lyapunov_spectrum: orbit left the finite range after step " + std::to_string(j));
      }
    }
    Mat l;
    ql_decompose(m, q, l);
    for (Index i = 0; i < d; ++i) {
      const double diag = l(i, i);
      if (diag == 0.0) fail(ErrorKind::SingularCocycle, "lyapunov_spectrum: cocycle lost rank");
      if (diag < 1e-300) est.underflow = true;
      logs(i) += std::log(diag);
    }
    if (record_every > 0 && (j % record_every == 0 || j == horizon)) {
      Vec running = logs / static_cast<double>(j);
      std::sort(running.begin(), running.end());
      est.trace.emplace_back(j, running);
    }
    if (half_steps == 0 && 2 * j >= horizon) {
      half_logs = logs;
      half_steps = j;
    }
  }
  const double n = static_cast<double>(horizon);
  est.exponents = logs / n;
  std::sort(est.exponents.begin(), est.exponents.end());
  Vec half = half_logs / static_cast<double>(std::max<std::size_t>(half_steps, 1));
  std::sort(half.begin(), half.end());
  est.slope_stability = (est.exponents - half).cwiseAbs();
  est.log_det_rate = logdet / n;
  est.volume_residual = std::abs(est.exponents.sum() - est.log_det_rate);

  const double tol = group_tolerance(horizon);
  Index start = 0;
  for (Index i = 1; i <= d; ++i) {
    if (i == d || est.exponents(i) - est.exponents(i - 1) >= tol) {
      const int mult = static_cast<int>(i - start);
      est.groups.emplace_back(est.exponents.segment(start, mult).mean(), mult);
      start = i;
    }
  }
  return est;
}

double epsilon_ceiling(double a, double b, int d) {
  if (!(a < b)) fail(ErrorKind::Domain, "epsilon_ceiling: need a < b");
  if (d < 1) fail(ErrorKind::Domain, "epsilon_ceiling: need d >= 1");
  return std::min(1.0, (b - a) / (200.0 * d));
}

void PesinParams::validate(int d) const {
  if (!(a < b)) fail(ErrorKind::Config, "pesin params: need a < b");
  if (k < 1 || k >= d) fail(ErrorKind::Config, "pesin params: need 1 <= k < d");
  const double ceil = epsilon_ceiling(a, b, d);
  if (!(eps > 0 && eps <= ceil * (1 + 1e-12))) {
    fail(ErrorKind::Config, "pesin params: eps must lie in (0, min{1, (b-a)/(200d)}] = (0, " +
                                std::to_string(ceil) + "]");
  }
  if (!(l_prime > 0) || !(r_prime > 0) || !(c_prime > 0)) fail(ErrorKind::Config, "pesin params: l', r' and C' must be positive");
}

double PesinParams::metric_constant() const {
  return 4 * l_prime * l_prime / std::sqrt(1 - std::exp(-2 * eps));
}

std::size_t default_burn_in(const SpectrumEstimate& spectrum, int k) {
  const double gap = spectrum.exponents(k) - spectrum.exponents(k - 1);
  if (!(gap > 0)) return 2000;
  return static_cast<std::size_t>(std::clamp(std::ceil(40.0 / gap), 20.0, 2000.0));
}

OseledetsSplit stable_splitting(const OmegaWord& word, const Vec& x, double a, double b, std::size_t horizon) {
  if (!(a < b)) fail(ErrorKind::Domain, "stable_splitting: need a < b");
  const int d = static_cast<int>(x.size());
  OseledetsSplit split;
  split.a = a;
  split.b = b;
  split.horizon = horizon;
  split.positive_b = b > 0;
  split.spectrum = lyapunov_spectrum(word, x, horizon);
  const Vec& rho = split.spectrum.exponents;
  int k = 0;
  for (int i = 0; i < d; ++i) {
    if (rho(i) >= a && rho(i) <= b) {
      fail(ErrorKind::GapViolation, "stable_splitting: exponent " + std::to_string(rho(i)) + " lies in the gap [" +
                                        std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    if (rho(i) < a) ++k;
  }
  if (k == 0 || k == d) {
    fail(ErrorKind::GapViolation, "stable_splitting: the gap does not separate the spectrum (k = " +
                                      std::to_string(k) + ")");
  }
  split.k = k;
  const double n = static_cast<double>(horizon);
  split.low_confidence = (rho(k) - rho(k - 1)) * n < (b - a) * n / 2;
  split.burn_in = default_burn_in(split.spectrum, k);
  const OrbitFrames frames = build_frames(word, x, k, 0, split.burn_in);
  split.E0 = frames.E[0];
  split.H0 = frames.H[0];
  return split;
}

OseledetsSplit stable_splitting(const OmegaWord& word, const Vec& x, const PesinParams& params,
                                std::size_t horizon) {
  OseledetsSplit s = stable_splitting(word, x, params.a, params.b, horizon);
  if (s.k != params.k) {
    fail(ErrorKind::GapViolation, "stable_splitting: dim E_0 = " + std::to_string(s.k) + " but k = " +
                                      std::to_string(params.k) + " was requested");
  }
  return s;
}

namespace {

// Fixed generic orthogonal start for the backward sweep; the identity would
// be an invariant (non-generic) start for diagonal cocycles.
Mat generic_orthogonal(Index d) {
  const CounterRng rng(0x0123456789ABCDEFULL);
  Mat m(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = rng.uniform(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)) - 0.5;
  return orthonormalize(m);
}

}  // namespace

OrbitFrames build_frames(const OmegaWord& word, const Vec& x, int k, std::size_t count, std::size_t burn_in) {
  const Index d = x.size();
  if (k < 1 || k >= d) fail(ErrorKind::Domain, "build_frames: need 1 <= k < d");
  const std::size_t total = count + burn_in;
  const OmegaWord w = word.extended(total);
  OrbitFrames fr;
  fr.k = k;
  fr.count = count;
  Orbit full = iterate(w, x, total);
  std::vector<Mat> jac(total);
  for (std::size_t j = 0; j < total; ++j) {
    jac[j] = w.map(j).jacobian_at(full[j]);
    if (!jac[j].allFinite()) fail(ErrorKind::SingularCocycle, "build_frames: non-finite Jacobian");
  }

  // Backward sweep with transposed Jacobians: the leading d-k columns align
  // with the fastest directions, the trailing k columns span E_j.
  fr.E.assign(count + 1, Mat());
  fr.Eperp.assign(count + 1, Mat());
  Mat q = generic_orthogonal(d);
  for (std::size_t jj = total; jj-- > 0;) {
    q = orthonormalize(jac[jj].transpose() * q);
    if (jj <= count) {
      fr.E[jj] = q.rightCols(k);
      fr.Eperp[jj] = q.leftCols(d - k);
    }
  }
  if (total == 0) {
    fr.E[0] = q.rightCols(k);
    fr.Eperp[0] = q.leftCols(d - k);
  }

  fr.orbit.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(count + 1));
  fr.jac.assign(jac.begin(), jac.begin() + static_cast<std::ptrdiff_t>(count));
  fr.H.assign(count + 1, Mat());
  fr.H[0] = fr.Eperp[0];
  fr.s.resize(count);
  fr.u.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    const Mat jh = jac[j] * fr.H[j];
    fr.H[j + 1] = orthonormalize(jh);
    fr.u[j] = fr.H[j + 1].transpose() * jh;
    const Mat je = jac[j] * fr.E[j];
    fr.s[j] = fr.E[j + 1].transpose() * je;
    fr.invariance_residual = std::max(fr.invariance_residual, aperture(je, fr.E[j + 1]));
    const double det_u = fr.u[j].determinant();
    if (det_u == 0.0 || !std::isfinite(det_u))
      fail(ErrorKind::SingularCocycle, "build_frames: restricted unstable cocycle is singular");
  }
  return fr;
}

std::pair<Vec, Vec> OrbitFrames::decompose(std::size_t n, const Vec& zeta) const {
  const Vec c = basis(n).partialPivLu().solve(zeta);
  return {c.head(k), c.tail(dim() - k)};
}

Mat OrbitFrames::basis(std::size_t n) const {
  Mat b(dim(), dim());
  b << E[n], H[n];
  return b;
}

}  // namespace pesin
