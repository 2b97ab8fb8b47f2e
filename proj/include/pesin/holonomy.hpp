#pragma once

// Transversals, the Poincare (holonomy) map along stable leaves and two
// independent estimates of its Jacobian.

#include <functional>
#include <string>
#include <vector>

#include "pesin/stable_manifold.hpp"

namespace pesin {

/// A p-dimensional transversal parametrized by s in the ball |s| <= q.
/// Its norm is computed from the graph form over H_0 at the base point:
/// |W| = sup |psi| + sup |D psi| in orthonormal frame coordinates.
struct Transversal {
  Vec base;
  Mat E0, H0;
  double q = 0;
  std::function<Vec(const Vec&)> param;
  std::function<Mat(const Vec&)> tangent;  // d x p
  double sup_psi = 0, sup_dpsi = 0, norm = 0;

  int p() const { return static_cast<int>(H0.cols()); }
  Vec point(const Vec& s) const { return param(s); }
  Mat tangent_at(const Vec& s) const { return tangent(s); }
};

/// Frames from the splitting at param(0); the norm is sampled on a grid of
/// the parameter ball.
Transversal make_transversal(const OmegaWord& word, const PesinParams& params, std::function<Vec(const Vec&)> param,
                             std::function<Mat(const Vec&)> tangent, double q);
/// The line {base + s * direction : |s| <= q}.
Transversal line_transversal(const OmegaWord& word, const PesinParams& params, const Vec& base, const Vec& direction,
                             double q);

struct HolonomyOptions {
  double eps_c = 2.0;            // smallness gate on |W|
  double leaf_slope = 1.0 / 3.0; // gate on the leaf chart slope
  int seeds = 8;
  double newton_tol = 1e-10;
  std::size_t n_shoot = 0;       // 0: the chart rule
  double escape_radius = 1.0;
  double leaf_tol = 1e-8;
};

struct Intersection {
  Vec point;
  Vec xi;  // leaf chart parameter
  Vec s;   // transversal parameter
  double residual = 0;
  int iterations = 0;
};

/// Newton on chart.point(xi) = W.point(s) from `options.seeds` starts.
Intersection intersect_leaf_with_transversal(const StableChart& leaf, const Transversal& w,
                                             const HolonomyOptions& options = {});

struct PoincareRecord {
  Vec s1, s2;
  double leaf_residual = 0;
  std::size_t horizon = 0;
};

class PoincareHandle {
 public:
  PoincareHandle(OmegaWord word, PesinParams params, Transversal w1, Transversal w2, HolonomyOptions options = {});

  const OmegaWord& word() const { return word_; }
  const PesinParams& params() const { return params_; }
  const Transversal& source() const { return w1_; }
  const Transversal& target() const { return w2_; }
  const HolonomyOptions& options() const { return options_; }
  PoincareHandle reversed() const { return PoincareHandle(word_, params_, w2_, w1_, options_); }
  bool identical() const { return identical_; }
  std::size_t n_shoot() const;

  /// Parameter on W2 of the point where the leaf of w1.point(s1) meets W2.
  PoincareRecord map(const Vec& s1) const;

 private:
  OmegaWord word_;
  PesinParams params_;
  Transversal w1_, w2_;
  HolonomyOptions options_;
  bool identical_ = false;
};

/// Convenience: ambient point P(y) for y = W1.point(s1).
Vec poincare_map(const PoincareHandle& handle, const Vec& s1);

struct DetEstimate {
  double value = 0;
  std::size_t depth = 0;
  bool converged = false;
  std::vector<double> history;  // value at depth 1, 2, ...
};

/// Telescoping product of restricted determinants along the two orbits,
/// closed by the linear holonomy along E_n between the propagated tangents.
DetEstimate jacobian_det_ratio(const PoincareHandle& handle, const Vec& s1, std::size_t n_depth = 40,
                               double tol = 1e-6);

struct RatioEstimate {
  double value = 0;          // Richardson extrapolation on the two smallest radii
  std::vector<double> radii;
  std::vector<double> ratios;
  double quadrature_error = 0;  // |GL16 - GL8| relative, worst over the schedule
  double extrapolation_change = 0;
  double h_min = 0;
  std::size_t samples = 0;
};

/// lambda_{W2}(P(Q(y, h))) / lambda_{W1}(Q(y, h)) over a radius schedule.
RatioEstimate jacobian_measure_ratio(const PoincareHandle& handle, const Vec& s1,
                                     const std::vector<double>& radii = {0.02, 0.01, 0.005});

struct JacobianEstimate {
  Vec s;
  Vec point;
  double value_det = 0;
  double value_ratio = 0;
  double discrepancy = 0;
  double quadrature_error = 0;
  double h_min = 0;
  bool det_converged = false;
  bool skipped = false;
  std::string reason;
};

JacobianEstimate estimate_jacobian(const PoincareHandle& handle, const Vec& s1, std::size_t n_depth = 40,
                                   const std::vector<double>& radii = {0.02, 0.01, 0.005});

struct ActReport {
  std::vector<JacobianEstimate> rows;
  double max_deviation = 0;  // max |J - 1| over both estimators
  double act_c = 0;
  bool pass = false;
  std::size_t skipped = 0;
};

/// Pass iff at least one row was computed and every computed row has
/// |J - 1| <= act_c under both estimators.
ActReport summarize_act(std::vector<JacobianEstimate> rows, double act_c);

ActReport act_verify(const PoincareHandle& handle, const std::vector<Vec>& grid, double act_c,
                     std::size_t n_depth = 40, const std::vector<double>& radii = {0.02, 0.01, 0.005});

}  // namespace pesin
