#pragma once

// Local stable charts by the Lyapunov-Perron shooting method, contraction
// along leaves and the global stable-set test.
//
// A chart at z is the graph {z + E_0 xi + H_0 h(xi)} over the Euclidean
// ball |xi| <= radius in the orthonormal E_0 coordinates. A point lies on
// the leaf when its forward orbit tracks the orbit of z; off the leaf the
// unstable component grows like e^{b n}, so its sign at a late time brackets
// the leaf.

#include <functional>
#include <limits>
#include <vector>

#include "pesin/grid_function.hpp"
#include "pesin/oseledets.hpp"

namespace pesin {

/// Number of steps before the orbit of x leaves the finite range, capped.
std::size_t finite_orbit_length(const OmegaWord& word, const Vec& x, std::size_t cap);

/// Splitting at x from a spectrum horizon that fits inside the finite part
/// of the orbit; a gap failure is reported as ChartDomain.
OseledetsSplit local_splitting(const OmegaWord& word, const Vec& x, const PesinParams& params,
                               std::size_t max_horizon = 200);

/// Shooting along a family of points c(s), s in R^p: finds s with the orbit
/// of c(s) asymptotic to the orbit of the anchor.
struct ShootingProblem {
  OmegaWord word;
  Vec anchor;
  std::function<Vec(const Vec&)> offset;  // s -> c(s) - anchor
  Mat direction;                          // d x p, transverse to E_0 at the anchor
  std::size_t n_shoot = 50;
  double escape_radius = 1.0;
};

struct ShootingResult {
  Vec s;
  std::size_t horizon_used = 0;
  double bracket_width = 0;
  double leaf_residual = 0;  // unstable component pulled back to time 0
  int iterations = 0;
};

/// Bisection when p = 1 (bracket expanded geometrically from `seed` with
/// initial half-width `step`), Newton with continuation in the horizon when
/// p > 1. Throws ChartDomain when no bracket is found within `max_expand`.
ShootingResult shoot_to_leaf(const ShootingProblem& problem, const Vec& seed, double step, int max_expand = 50,
                             double s_tol = 1e-14);
/// p = 1 bisection inside a fixed interval [lo, hi]; the signs at the ends
/// must differ.
ShootingResult shoot_in_interval(const ShootingProblem& problem, double lo, double hi, double s_tol = 1e-14);
/// Sign-carrying unstable component at the stopping time (p = 1).
double shooting_functional(const ShootingProblem& problem, const Vec& s, std::size_t* stop = nullptr);

struct StableChartOptions {
  int nodes_per_dim = 21;
  int degree = 8;
  std::size_t n_shoot = 0;       // 0: max(50, ceil(40 / (b - a))), cut at the finite orbit length
  double escape_radius = 1.0;
  double derivative_step = 1e-4;  // relative to the radius
  double beta0 = 1.0;
  double gamma0 = 0;              // 0: 2A
  double alpha0 = std::numeric_limits<double>::infinity();
  std::size_t spectrum_horizon = 200;
};

struct StableChart {
  OmegaWord word;
  Vec base;
  PesinParams params;
  int k = 0;
  Mat E0, H0;
  std::size_t n = 0;
  double radius = 0;      // alpha_n actually used
  double alpha = 0, beta_lip = 0, gamma = 0;
  GridFunction h;         // xi -> eta, both in the orthonormal frame coordinates
  double measured_lip = 0;
  std::size_t n_shoot = 0;
  double max_leaf_residual = 0;

  Vec point(const Vec& xi) const { return base + E0 * xi + H0 * h.value(xi); }
  /// Tangent basis d x k of the leaf at point(xi).
  Mat tangent(const Vec& xi) const { return E0 + H0 * h.derivative(xi); }
  /// (alpha_m, beta_m, gamma_m) under the update rules.
  Vec constants_at(std::size_t m) const;
};

StableChart local_stable_chart(const OmegaWord& word, const Vec& z, double radius_request, const PesinParams& params,
                               const StableChartOptions& options = {});

struct ContractionReport {
  std::vector<double> distances;  // d^s(f^l y, f^l y') for l = 0..steps_done
  std::vector<double> ratios;     // per-step ratios
  std::vector<double> bounds;     // gamma_0 e^{(a+4eps) l} d^s(y, y')
  double geometric_mean = 0;
  bool holds = true;
  bool truncated = false;
  std::size_t steps_done = 0;
};

/// Arc length of the leaf segment between chart parameters xi1 and xi2 and
/// of its forward images, by polyline refinement to `rel_tol`.
ContractionReport stable_contraction_check(const StableChart& chart, const Vec& xi1, const Vec& xi2,
                                           std::size_t l_steps, double rel_tol = 1e-8);

struct GlobalStableResult {
  bool member = false;
  double rate = 0;  // -inf when the orbits coincide
  bool diverged = false;
  std::vector<double> slopes;  // (1/n) log |f^n x - f^n y|, n = 1..horizon
};

GlobalStableResult global_stable_test(const OmegaWord& word, const Vec& x, const Vec& y, std::size_t horizon = 20,
                                      double rate_margin = 1e-3);

}  // namespace pesin
