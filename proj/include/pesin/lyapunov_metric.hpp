#pragma once

// Lyapunov inner products <.,.>'_n along an orbit. On E_n the product is
// the weighted forward series sum_l e^{-2(a+2eps)l} <S^l_n xi, S^l_n xi'>,
// on H_n the finite backward sum over l = 0..n, and E_n, H_n are declared
// orthogonal. Grams are stored in the frame coordinates of OrbitFrames.

#include <cstddef>
#include <vector>

#include "pesin/oseledets.hpp"

namespace pesin {

struct MetricOptions {
  double rel_tol = 1e-12;      // stop when a term drops below rel_tol * running sum
  std::size_t k_cap = 0;       // 0: 10 * max(horizon, 100)
  std::size_t fixed_k = 0;     // > 0: sum exactly l = 0..fixed_k
};

class LyapunovMetric {
 public:
  LyapunovMetric(OrbitFrames frames, PesinParams params, std::size_t horizon, MetricOptions options = {});

  const OrbitFrames& frames() const { return frames_; }
  const PesinParams& params() const { return params_; }
  std::size_t horizon() const { return horizon_; }
  int k() const { return frames_.k; }
  int dim() const { return frames_.dim(); }

  const Mat& stable_gram(std::size_t n) const { return stable_gram_.at(n); }
  const Mat& unstable_gram(std::size_t n) const { return unstable_gram_.at(n); }
  /// Upper-triangular W with G = W^T W, so |W c| is the norm of E c (or H c).
  const Mat& stable_factor(std::size_t n) const { return stable_factor_.at(n); }
  const Mat& unstable_factor(std::size_t n) const { return unstable_factor_.at(n); }
  std::size_t truncation(std::size_t n) const { return truncation_.at(n); }
  double tail_bound(std::size_t n) const { return tail_bound_.at(n); }
  bool series_divergent() const { return divergent_; }
  /// True when every stable series met the stopping rule before the cap.
  bool converged() const { return converged_; }

  double inner(std::size_t n, const Vec& zeta, const Vec& zeta2) const;
  double norm(std::size_t n, const Vec& zeta) const;
  double stable_norm(std::size_t n, const Vec& coeff_e) const;
  double unstable_norm(std::size_t n, const Vec& coeff_h) const;

  /// P_n = [E_n W_E^{-1}, H_n W_H^{-1}]: maps Lyapunov-normalized
  /// coordinates (v, u) to ambient vectors, so that |(v, u)|' = max(|v|, |u|).
  Mat normalizing(std::size_t n) const;
  /// (v, u) coordinates of an ambient vector.
  Vec normalized_coords(std::size_t n, const Vec& zeta) const;

  double metric_constant() const { return params_.metric_constant(); }

 private:
  OrbitFrames frames_;
  PesinParams params_;
  std::size_t horizon_;
  std::vector<Mat> stable_gram_, unstable_gram_, stable_factor_, unstable_factor_;
  std::vector<std::size_t> truncation_;
  std::vector<double> tail_bound_;
  bool divergent_ = false;
  bool converged_ = true;
};

/// Builds frames long enough for the stable series at every n <= horizon,
/// extending the orbit until the series meet the stopping rule.
LyapunovMetric build_lyapunov_metric(const OmegaWord& word, const Vec& x, const OseledetsSplit& split,
                                     const PesinParams& params, std::size_t horizon, MetricOptions options = {});

double lyapunov_inner(const LyapunovMetric& metric, std::size_t n, const Vec& zeta, const Vec& zeta2);

struct NormEquivalenceReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_margin = -1;  // max over samples of the relative excess; <= 0 means the bounds hold
  double lower_ratio_min = 0;  // min |zeta|'/|zeta|
  double upper_ratio_max = 0;  // max |zeta|'/(A e^{2 eps n}|zeta|)
};

/// Checks 1/2 |zeta| <= |zeta|'_n <= A e^{2 eps n} |zeta| on the given vectors.
NormEquivalenceReport norm_equivalence_check(const LyapunovMetric& metric, std::size_t n,
                                             const std::vector<Vec>& samples);
/// Same on `count` deterministic pseudo-random vectors.
NormEquivalenceReport norm_equivalence_check(const LyapunovMetric& metric, std::size_t n, std::size_t count,
                                             std::uint64_t seed = 1);

struct NormComparison {
  double lhs = 0;    // |f^n z1 - f^n z2|'_{z, n}
  double rhs = 0;    // 2 A e^{2 eps n} |f^n z1 - f^n z2|'_{z', n}
  double ratio = 0;  // lhs / |.|'_{z', n}
  double bound = 0;  // 2 A e^{2 eps n}
  bool holds = false;
};

/// Compares the Lyapunov norms at base points z and z' of the displacement
/// between the orbits of z1 and z2 after n steps.
NormComparison compare_norms_at_points(const OmegaWord& word, const LyapunovMetric& at_z,
                                       const LyapunovMetric& at_z2, std::size_t n, const Vec& z1,
                                       const Vec& z2);

}  // namespace pesin
