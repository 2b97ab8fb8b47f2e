#pragma once

// Finite-horizon certificates for the Pesin sets: the hyperbolicity
// function l, the second-derivative function r and the inverse-derivative
// growth constant C_delta.

#include <cstdint>
#include <limits>
#include <string>

#include "pesin/oseledets.hpp"

namespace pesin {

struct LEstimate {
  double l_value = 1;    // uniform constant over n in [0, N]
  double l0 = 1;         // consistent function at n = 0
  Vec l_min;             // per-n minimal constants for (i)-(iii)
  Vec l_consistent;      // l(n) = max_{m >= n} l_min(m) e^{-eps (m - n)}
  double stable_part = 0, unstable_part = 0, angle_part = 0;  // worst constant per inequality
  bool infinite = false;
  std::string reason;
  std::size_t horizon = 0;
};

/// Windows n in [0, N], l in [1, N].
LEstimate estimate_l(const OrbitFrames& frames, const PesinParams& params, std::size_t horizon);
LEstimate estimate_l(const OmegaWord& word, const Vec& x, const OseledetsSplit& split, const PesinParams& params,
                     std::size_t horizon);
/// Builds the splitting itself; a gap violation yields the infinite flag.
LEstimate estimate_l(const OmegaWord& word, const Vec& x, const PesinParams& params, std::size_t horizon);

struct REstimate {
  double r_value = 0;     // sup_{n <= H} r'(F^n) e^{-eps n}
  double r_forward = 0;   // sampled sup |D^2 F| on the unit ball at n = 0
  double r_inverse = 0;   // sampled sup |D^2 F^{-1}| on the image ball at n = 0
  Vec profile;            // r'(F^n) for n = 0..2H
  double growth_margin = 0;  // max_n r(F^n) e^{-eps n} / r(0) - 1 (<= tolerance passes)
  bool growth_ok = true;
  bool violation = false;
  std::size_t horizon = 0;
};

/// `sample_count` ball points per dimension; the growth check compares
/// r(F^n) (computed over a window of the same length) against r e^{eps n}.
REstimate estimate_r(const OmegaWord& word, const Vec& x, int sample_count, double eps, std::size_t horizon,
                     double growth_tol = 0.05);

/// max_{n <= horizon} |D_0 F^{-1}_n| e^{-delta n}.
double estimate_Cdelta(const OmegaWord& word, const Vec& x, double delta, std::size_t horizon);

struct CertificateOptions {
  int r_samples = 4;
  double r_safety = 1.1;   // multiplier on the sampled r before comparing with r'
  std::size_t spectrum_horizon = 0;  // 0: max(horizon, 200)
};

struct PesinCertificate {
  std::uint64_t seed = 0;
  Vec x;
  PesinParams params;
  double l_value = std::numeric_limits<double>::infinity();
  double r_value = 0;
  double c_delta = 0;
  bool member = false;
  bool infinite_l = false;
  std::string reason;
  std::size_t horizon = 0;
};

PesinCertificate pesin_membership(const OmegaWord& word, const Vec& x, const PesinParams& params,
                                  std::size_t horizon, const CertificateOptions& options = {});

}  // namespace pesin
