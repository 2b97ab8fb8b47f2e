#include "pesin/pesin_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pesin/linalg.hpp"

namespace pesin {

LEstimate estimate_l(const OrbitFrames& frames, const PesinParams& params, std::size_t horizon) {
  if (frames.count < 2 * horizon) fail(ErrorKind::Domain, "estimate_l: frames must reach twice the horizon");
  LEstimate est;
  est.horizon = horizon;
  const std::size_t N = horizon;
  const double a = params.a, b = params.b, eps = params.eps;

  std::vector<double> angle(2 * N + 1);
  for (std::size_t m = 0; m <= 2 * N; ++m) angle[m] = subspace_angle(frames.E[m], frames.H[m]);

  est.l_min = Vec::Ones(static_cast<Index>(N + 1));
  for (std::size_t n = 0; n <= N; ++n) {
    // Products are carried with a separate log scale so long windows cannot overflow.
    Mat ps = Mat::Identity(frames.k, frames.k);
    Mat pu = Mat::Identity(frames.dim() - frames.k, frames.dim() - frames.k);
    double log_s = 0, log_u = 0;
    double worst = 1;
    for (std::size_t l = 1; l <= N; ++l) {
      ps = frames.s[n + l - 1] * ps;
      pu = frames.u[n + l - 1] * pu;
      const double ns = ps.norm(), nu = pu.norm();
      ps /= ns;
      pu /= nu;
      log_s += std::log(ns);
      log_u += std::log(nu);
      const double dl = static_cast<double>(l);
      const double c1 = std::exp(std::log(op_norm(ps)) + log_s - (a + eps) * dl);
      const double c2 = std::exp((b - eps) * dl - std::log(min_singular_value(pu)) - log_u);
      const double c3 = std::exp(-eps * dl) / angle[n + l];
      est.stable_part = std::max(est.stable_part, c1);
      est.unstable_part = std::max(est.unstable_part, c2);
      est.angle_part = std::max(est.angle_part, c3);
      worst = std::max({worst, c1, c2, c3});
    }
    est.l_min(static_cast<Index>(n)) = worst;
    if (n == 0) {
      const double dn = static_cast<double>(N);
      const double rate_s = (std::log(op_norm(ps)) + log_s) / dn;
      const double rate_u = (std::log(min_singular_value(pu)) + log_u) / dn;
      if (!(rate_s < a + eps)) {
        est.infinite = true;
        est.reason = "stable growth rate " + std::to_string(rate_s) + " is not below a + eps";
      } else if (!(rate_u > b - eps)) {
        est.infinite = true;
        est.reason = "unstable growth rate " + std::to_string(rate_u) + " is not above b - eps";
      }
    }
  }
  est.l_consistent = est.l_min;
  for (std::size_t n = N; n-- > 0;) {
    const Index i = static_cast<Index>(n);
    est.l_consistent(i) = std::max(est.l_min(i), est.l_consistent(i + 1) * std::exp(-eps));
  }
  est.l_value = est.l_min.maxCoeff();
  est.l0 = est.l_consistent(0);
  if (!std::isfinite(est.l_value)) {
    est.infinite = true;
    if (est.reason.empty()) est.reason = "non-finite constant";
  }
  if (est.infinite) est.l_value = std::numeric_limits<double>::infinity();
  return est;
}

LEstimate estimate_l(const OmegaWord& word, const Vec& x, const OseledetsSplit& split, const PesinParams& params,
                     std::size_t horizon) {
  const OrbitFrames frames = build_frames(word, x, split.k, 2 * horizon, split.burn_in);
  return estimate_l(frames, params, horizon);
}

LEstimate estimate_l(const OmegaWord& word, const Vec& x, const PesinParams& params, std::size_t horizon) {
  try {
    const OseledetsSplit split = stable_splitting(word, x, params, std::max<std::size_t>(horizon, 200));
    return estimate_l(word, x, split, params, horizon);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::GapViolation) throw;
    LEstimate est;
    est.horizon = horizon;
    est.infinite = true;
    est.l_value = est.l0 = std::numeric_limits<double>::infinity();
    est.reason = e.what();
    return est;
  }
}

REstimate estimate_r(const OmegaWord& word, const Vec& x, int sample_count, double eps, std::size_t horizon,
                     double growth_tol) {
  if (sample_count < 2) fail(ErrorKind::Domain, "estimate_r: need at least 2 samples per dimension");
  REstimate est;
  est.horizon = horizon;
  const std::size_t len = 2 * horizon;
  const OmegaWord w = word.extended(len + 1);
  const Orbit orbit = iterate(w, x, len);
  est.profile = Vec::Zero(static_cast<Index>(len + 1));
  for (std::size_t m = 0; m <= len; ++m) {
    const auto sup = sample_second_derivative_sup(w.map(m), orbit[m], 1.0, sample_count);
    if (!std::isfinite(sup.forward) || !std::isfinite(sup.inverse)) est.violation = true;
    est.profile(static_cast<Index>(m)) = std::max(sup.forward, sup.inverse);
    if (m == 0) {
      est.r_forward = sup.forward;
      est.r_inverse = sup.inverse;
    }
  }
  // r(F^n) over a window of length H starting at n.
  const auto r_at = [&](std::size_t n) {
    double r = 0;
    for (std::size_t m = n; m <= n + horizon; ++m)
      r = std::max(r, est.profile(static_cast<Index>(m)) * std::exp(-eps * static_cast<double>(m - n)));
    return r;
  };
  est.r_value = r_at(0);
  est.growth_margin = -1;
  for (std::size_t n = 0; n <= horizon; ++n) {
    const double lhs = r_at(n) * std::exp(-eps * static_cast<double>(n));
    const double m = est.r_value > 0 ? lhs / est.r_value - 1 : (lhs > 0 ? 1.0 : -1.0);
    est.growth_margin = std::max(est.growth_margin, m);
  }
  est.growth_ok = est.growth_margin <= growth_tol;
  return est;
}

double estimate_Cdelta(const OmegaWord& word, const Vec& x, double delta, std::size_t horizon) {
  if (!(delta > 0 && delta < 1)) fail(ErrorKind::Domain, "estimate_Cdelta: delta must lie in (0, 1)");
  const OmegaWord w = word.extended(horizon + 1);
  const Orbit orbit = iterate(w, x, horizon + 1);
  double c = 0;
  for (std::size_t n = 0; n <= horizon; ++n) {
    const Mat jac = w.map(n).jacobian_at(orbit[n]);
    Eigen::FullPivLU<Mat> lu(jac);
    if (!lu.isInvertible()) fail(ErrorKind::SingularCocycle, "estimate_Cdelta: singular step Jacobian");
    c = std::max(c, op_norm(lu.inverse()) * std::exp(-delta * static_cast<double>(n)));
  }
  return c;
}

PesinCertificate pesin_membership(const OmegaWord& word, const Vec& x, const PesinParams& params,
                                  std::size_t horizon, const CertificateOptions& options) {
  PesinCertificate cert;
  cert.seed = word.seed();
  cert.x = x;
  cert.params = params;
  cert.horizon = horizon;
  const std::size_t sh = options.spectrum_horizon ? options.spectrum_horizon : std::max<std::size_t>(horizon, 200);
  try {
    params.validate(word.dim());
    const OseledetsSplit split = stable_splitting(word, x, params, sh);
    const LEstimate l = estimate_l(word, x, split, params, horizon);
    cert.l_value = l.l_value;
    cert.infinite_l = l.infinite;
    if (l.infinite) cert.reason = l.reason;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::GapViolation) throw;
    cert.infinite_l = true;
    cert.reason = e.what();
  }
  const REstimate r = estimate_r(word, x, options.r_samples, params.eps, horizon);
  cert.r_value = r.r_value;
  cert.c_delta = estimate_Cdelta(word, x, params.eps, horizon);
  cert.member = !cert.infinite_l && !r.violation && cert.l_value <= params.l_prime &&
                cert.r_value * options.r_safety <= params.r_prime && cert.c_delta <= params.c_prime;
  if (!cert.member && cert.reason.empty()) {
    if (cert.l_value > params.l_prime) cert.reason = "l above l'";
    else if (cert.r_value * options.r_safety > params.r_prime) cert.reason = "r above r'";
    else if (cert.c_delta > params.c_prime) cert.reason = "C_delta above C'";
  }
  return cert;
}

}  // namespace pesin
