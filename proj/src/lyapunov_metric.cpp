#include "pesin/lyapunov_metric.hpp"

#include <algorithm>
#include <cmath>

#include "pesin/linalg.hpp"
#include "pesin/rng.hpp"
#include "pesin/scenarios.hpp"

namespace pesin {

namespace {

Mat upper_factor(const Mat& gram, const char* who) {
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success) fail(ErrorKind::SingularCocycle, std::string(who) + ": Gram not positive definite");
  return llt.matrixU();
}

}  // namespace

LyapunovMetric::LyapunovMetric(OrbitFrames frames, PesinParams params, std::size_t horizon, MetricOptions options)
    : frames_(std::move(frames)), params_(params), horizon_(horizon) {
  if (frames_.count < horizon_) fail(ErrorKind::Domain, "LyapunovMetric: frames shorter than the horizon");
  const int k = frames_.k;
  const int p = frames_.dim() - k;
  const double w_s = std::exp(-2 * (params_.a + 2 * params_.eps));
  const double w_u = std::exp(2 * (params_.b - 2 * params_.eps));
  const std::size_t cap = options.k_cap ? options.k_cap : 10 * std::max<std::size_t>(horizon_, 100);
  const double sqrt_ws = std::sqrt(w_s);

  stable_gram_.resize(horizon_ + 1);
  stable_factor_.resize(horizon_ + 1);
  truncation_.resize(horizon_ + 1);
  tail_bound_.resize(horizon_ + 1);
  for (std::size_t n = 0; n <= horizon_; ++n) {
    Mat sum = Mat::Identity(k, k);
    Mat scaled = Mat::Identity(k, k);  // e^{-(a+2eps)l} S^l_n in frame coordinates
    double prev = 1.0, ratio = 0.0;
    int rising = 0;
    std::size_t l = 0;
    bool stopped = false;
    const std::size_t avail = frames_.count - n;
    const std::size_t limit = options.fixed_k ? options.fixed_k : std::min(cap, avail);
    while (l < limit && l < avail) {
      scaled = sqrt_ws * frames_.s[n + l] * scaled;
      ++l;
      const Mat term = scaled.transpose() * scaled;
      sum += term;
      const double t = term.trace();
      ratio = prev > 0 ? t / prev : 0.0;
      prev = t;
      rising = ratio >= 1.0 ? rising + 1 : 0;
      if (rising >= 10) {
        divergent_ = true;
        break;
      }
      if (!options.fixed_k && t < options.rel_tol * sum.trace()) {
        stopped = true;
        break;
      }
    }
    if (options.fixed_k && l < options.fixed_k) converged_ = false;
    if (!options.fixed_k && !stopped) converged_ = false;
    truncation_[n] = l;
    tail_bound_[n] = (ratio < 1.0) ? prev * ratio / (1.0 - ratio) : std::numeric_limits<double>::infinity();
    stable_gram_[n] = sum;
    stable_factor_[n] = upper_factor(sum, "LyapunovMetric stable");
  }

  unstable_gram_.resize(horizon_ + 1);
  unstable_factor_.resize(horizon_ + 1);
  unstable_gram_[0] = Mat::Identity(p, p);
  for (std::size_t n = 1; n <= horizon_; ++n) {
    const Mat uinv = frames_.u[n - 1].inverse();
    unstable_gram_[n] = Mat::Identity(p, p) + w_u * uinv.transpose() * unstable_gram_[n - 1] * uinv;
  }
  for (std::size_t n = 0; n <= horizon_; ++n) unstable_factor_[n] = upper_factor(unstable_gram_[n], "LyapunovMetric unstable");
}

double LyapunovMetric::inner(std::size_t n, const Vec& zeta, const Vec& zeta2) const {
  const auto [e1, h1] = frames_.decompose(n, zeta);
  const auto [e2, h2] = frames_.decompose(n, zeta2);
  return e1.dot(stable_gram(n) * e2) + h1.dot(unstable_gram(n) * h2);
}

double LyapunovMetric::stable_norm(std::size_t n, const Vec& coeff_e) const {
  return (stable_factor(n) * coeff_e).norm();
}

double LyapunovMetric::unstable_norm(std::size_t n, const Vec& coeff_h) const {
  return (unstable_factor(n) * coeff_h).norm();
}

double LyapunovMetric::norm(std::size_t n, const Vec& zeta) const {
  const auto [e, h] = frames_.decompose(n, zeta);
  return std::max(stable_norm(n, e), unstable_norm(n, h));
}

Mat LyapunovMetric::normalizing(std::size_t n) const {
  const int k = frames_.k;
  const int d = frames_.dim();
  Mat p(d, d);
  p.leftCols(k) = stable_factor(n).triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(frames_.E[n]);
  p.rightCols(d - k) = unstable_factor(n).triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(frames_.H[n]);
  return p;
}

Vec LyapunovMetric::normalized_coords(std::size_t n, const Vec& zeta) const {
  const auto [e, h] = frames_.decompose(n, zeta);
  Vec out(dim());
  out << stable_factor(n) * e, unstable_factor(n) * h;
  return out;
}

LyapunovMetric build_lyapunov_metric(const OmegaWord& word, const Vec& x, const OseledetsSplit& split,
                                     const PesinParams& params, std::size_t horizon, MetricOptions options) {
  const std::size_t cap = options.k_cap ? options.k_cap : 10 * std::max<std::size_t>(horizon, 100);
  std::size_t extra;
  if (options.fixed_k) {
    extra = options.fixed_k;
  } else {
    const double rho = split.spectrum.exponents(split.k - 1);
    const double r = std::exp(-2 * (params.a + 2 * params.eps) + 2 * rho);
    extra = r < 1 ? static_cast<std::size_t>(std::ceil(std::log(options.rel_tol) / std::log(r))) + 20 : cap;
    extra = std::min(extra, cap);
  }
  std::size_t ceiling = horizon + cap;
  for (;;) {
    std::size_t count = horizon + extra;
    OrbitFrames frames;
    try {
      frames = build_frames(word, x, split.k, count, split.burn_in);
    } catch (const OrbitDivergence& e) {
      // The orbit escapes: keep what is finite and report the truncation.
      const std::size_t finite = e.last_finite_index();
      if (finite < horizon + split.burn_in + 1) throw;
      count = finite - split.burn_in - 1;
      ceiling = count;
      frames = build_frames(word, x, split.k, count, split.burn_in);
    }
    LyapunovMetric metric(std::move(frames), params, horizon, options);
    if (metric.converged() || metric.series_divergent() || options.fixed_k || count >= ceiling) return metric;
    extra = std::min(2 * extra, cap);
    if (horizon + extra > ceiling) extra = ceiling - horizon;
  }
}

double lyapunov_inner(const LyapunovMetric& metric, std::size_t n, const Vec& zeta, const Vec& zeta2) {
  if (n > metric.horizon()) fail(ErrorKind::Domain, "lyapunov_inner: n beyond the metric horizon");
  return metric.inner(n, zeta, zeta2);
}

NormEquivalenceReport norm_equivalence_check(const LyapunovMetric& metric, std::size_t n,
                                             const std::vector<Vec>& samples) {
  NormEquivalenceReport rep;
  const double upper = metric.metric_constant() * std::exp(2 * metric.params().eps * static_cast<double>(n));
  rep.lower_ratio_min = std::numeric_limits<double>::infinity();
  rep.worst_margin = -std::numeric_limits<double>::infinity();
  for (const Vec& z : samples) {
    const double e = z.norm();
    if (e == 0) continue;
    const double ln = metric.norm(n, z);
    const double lo_excess = (0.5 * e - ln) / e;
    const double hi_excess = (ln - upper * e) / (upper * e);
    const double m = std::max(lo_excess, hi_excess);
    rep.worst_margin = std::max(rep.worst_margin, m);
    if (m > 0) ++rep.violations;
    rep.lower_ratio_min = std::min(rep.lower_ratio_min, ln / e);
    rep.upper_ratio_max = std::max(rep.upper_ratio_max, ln / (upper * e));
    ++rep.samples;
  }
  return rep;
}

NormEquivalenceReport norm_equivalence_check(const LyapunovMetric& metric, std::size_t n, std::size_t count,
                                             std::uint64_t seed) {
  const CounterRng rng(seed);
  std::vector<Vec> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec z(metric.dim());
    for (int j = 0; j < metric.dim(); ++j) z(j) = 2 * rng.uniform(i, static_cast<std::uint64_t>(j)) - 1;
    samples.push_back(z);
  }
  return norm_equivalence_check(metric, n, samples);
}

NormComparison compare_norms_at_points(const OmegaWord& word, const LyapunovMetric& at_z,
                                       const LyapunovMetric& at_z2, std::size_t n, const Vec& z1,
                                       const Vec& z2) {
  // exp maps on R^d are translations, so both sides see the same displacement.
  const Vec disp = difference_orbit(word, z1, z2 - z1, n).back();
  NormComparison c;
  c.bound = 2 * at_z.metric_constant() * std::exp(2 * at_z.params().eps * static_cast<double>(n));
  c.lhs = at_z.norm(n, disp);
  const double other = at_z2.norm(n, disp);
  c.rhs = c.bound * other;
  c.ratio = other > 0 ? c.lhs / other : (c.lhs == 0 ? 1.0 : std::numeric_limits<double>::infinity());
  c.holds = c.lhs <= c.rhs || (c.lhs == 0 && c.rhs == 0);
  return c;
}

}  // namespace pesin
