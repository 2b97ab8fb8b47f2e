#pragma once

// Lyapunov spectra, the stable splitting E_0 + H_0 and the frames E_n, H_n
// propagated along an orbit.

#include <utility>
#include <vector>

#include "pesin/rds.hpp"

namespace pesin {

struct SpectrumEstimate {
  Vec exponents;                               // ascending, nats per step
  std::vector<std::pair<double, int>> groups;  // (lambda_i, multiplicity)
  std::size_t horizon = 0;
  Vec slope_stability;    // |estimate(n) - estimate(n/2)| per exponent
  double log_det_rate = 0;  // (1/n) log |det D f^n|
  double volume_residual = 0;
  bool underflow = false;
  std::vector<std::pair<std::size_t, Vec>> trace;  // running estimates (n, ascending exponents)
};

double group_tolerance(std::size_t horizon);

/// Exponents from the accumulated log-diagonal of QL re-orthogonalized
/// cocycle products. The QL form keeps lower-triangular cocycles exact.
/// With record_every > 0 the running estimates at multiples of it (and at
/// the horizon) are kept in `trace`.
SpectrumEstimate lyapunov_spectrum(const OmegaWord& word, const Vec& x, std::size_t horizon,
                                   std::size_t qr_stride = 1, std::size_t record_every = 0);

/// min{1, (b - a) / (200 d)}.
double epsilon_ceiling(double a, double b, int d);

struct PesinParams {
  double a = -1;
  double b = 0;
  int k = 1;
  double eps = 0;
  double l_prime = 1;
  double r_prime = 1;
  double c_prime = 2;   // bound on C_delta

  /// Throws Config on a >= b, eps outside (0, ceiling], k < 1 or
  /// non-positive l', r', C'.
  void validate(int d) const;
  /// A = 4 l'^2 (1 - e^{-2 eps})^{-1/2}.
  double metric_constant() const;
};

struct OseledetsSplit {
  double a = 0;
  double b = 0;
  int k = 0;
  Mat E0;  // d x k, orthonormal
  Mat H0;  // d x (d - k), orthonormal complement
  SpectrumEstimate spectrum;
  std::size_t horizon = 0;
  std::size_t burn_in = 0;   // backward-sweep length used for the frames
  bool low_confidence = false;
  bool positive_b = false;   // diagnostic gap with b > 0
};

/// k = number of exponents below a. Throws GapViolation when an exponent
/// lies in [a, b] or k is 0 or d.
OseledetsSplit stable_splitting(const OmegaWord& word, const Vec& x, double a, double b, std::size_t horizon);
OseledetsSplit stable_splitting(const OmegaWord& word, const Vec& x, const PesinParams& params,
                                std::size_t horizon);

/// Backward-sweep length that resolves E_n to roughly e^{-40}.
std::size_t default_burn_in(const SpectrumEstimate& spectrum, int k);

/// Frames along the orbit for indices 0..count:
///   E[n]  orthonormal basis of E_n = D f^n E_0 (from a backward sweep of
///         transposed Jacobians, exactly invariant up to rounding),
///   H[n]  orthonormal basis of D f^n (E_0^perp),
///   s[n] = E[n+1]^T J_n E[n] and u[n] = H[n+1]^T J_n H[n], the restricted
///   one-step cocycles in these bases.
struct OrbitFrames {
  int k = 0;
  std::size_t count = 0;
  Orbit orbit;
  std::vector<Mat> jac;
  std::vector<Mat> E, Eperp, H;
  std::vector<Mat> s, u;
  double invariance_residual = 0;  // max aperture(J_n E_n, E_{n+1})

  int dim() const { return static_cast<int>(orbit.front().size()); }
  /// Coefficients (c_E, c_H) of zeta = E[n] c_E + H[n] c_H.
  std::pair<Vec, Vec> decompose(std::size_t n, const Vec& zeta) const;
  Mat basis(std::size_t n) const;  // [E[n] H[n]]
};

OrbitFrames build_frames(const OmegaWord& word, const Vec& x, int k, std::size_t count, std::size_t burn_in);

}  // namespace pesin
