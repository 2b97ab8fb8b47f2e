#pragma once

// Graph transform of transversal graphs psi_n : H_n -> E_n along the orbit
// of a Pesin point z. All work happens in Lyapunov-normalized coordinates
// (v, u) = (W_E c_E, W_H c_H), in which |(v, u)|'_n = max(|v|, |u|).

#include <functional>
#include <string>
#include <vector>

#include "pesin/grid_function.hpp"
#include "pesin/lyapunov_metric.hpp"

namespace pesin {

struct TheoremConstants {
  double eps0 = 0;  // e^{a+4eps} - e^{a+2eps}
  double c0 = 0;    // 4 A r' e^{2eps}
  double r0 = 0;    // eps0 / c0
  double A = 0;
};

TheoremConstants theorem_constants(const PesinParams& params);

/// q^(1)_C = min{r0/(2A), (e^{b-2eps} - e^{a+12eps})/(2c0), C(e^{b-9d eps} - e^{a+2eps})/(4c0), delta_l}.
struct QBound {
  double value = 0;
  double radius_term = 0;
  double gap_term = 0;
  double slope_term = 0;
  double delta_term = 0;
  std::string describe() const;
};

QBound q_admissible(const PesinParams& params, double C, int d, double delta_l = 0.25);

/// The centred maps F_n written in normalized coordinates, with the
/// block decomposition F_n(v, u) = (A_n v + a_n(v, u), B_n u + b_n(v, u)).
class TransformContext {
 public:
  TransformContext(OmegaWord word, LyapunovMetric metric);

  const LyapunovMetric& metric() const { return metric_; }
  int k() const { return metric_.k(); }
  int dim() const { return metric_.dim(); }
  std::size_t horizon() const { return metric_.horizon(); }

  /// Phi_n(v, u) = P_{n+1}^{-1} F_n(P_n (v, u)), returned as (v', u').
  Vec phi(std::size_t n, const Vec& vu) const;
  Mat dphi(std::size_t n, const Vec& vu) const;
  /// Linear blocks A_n (k x k) and B_n ((d-k) x (d-k)) of D Phi_n(0).
  Mat block_a(std::size_t n) const;
  Mat block_b(std::size_t n) const;
  /// Nonlinear remainders t_n = (a_n, b_n).
  Vec remainder(std::size_t n, const Vec& vu) const;

  /// Ambient vector of normalized coordinates at index n, and back.
  Vec to_ambient(std::size_t n, const Vec& vu) const { return P_[n] * vu; }
  Vec to_normalized(std::size_t n, const Vec& zeta) const { return Pinv_[n] * zeta; }
  const Vec& base_point(std::size_t n) const { return metric_.frames().orbit[n]; }

 private:
  OmegaWord word_;
  LyapunovMetric metric_;
  std::vector<Mat> P_, Pinv_;
  std::vector<DiffeoMap> maps_;
};

struct GraphChart {
  std::size_t n = 0;
  GridFunction psi;   // u -> v on the cube around eta_center
  Vec eta_center;     // eta_n (normalized)
  Vec xi_anchor;      // xi_n (normalized)
  double radius = 0;  // delta'_n
  double sup_value = 0;       // sup |psi_n|' over the ball
  double sup_derivative = 0;  // sup |D psi_n|' over the ball
  double invariance_residual = 0;
  int newton_iterations_max = 0;
};

struct GraphOptions {
  int nodes_per_dim = 17;
  int degree = 8;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
};

using GraphFn = std::function<Vec(const Vec&)>;
using GraphDerivFn = std::function<Mat(const Vec&)>;

/// Samples psi (and D psi, or central differences) on the grid of a ball.
GraphChart make_chart(std::size_t n, const GraphFn& psi, const GraphDerivFn& dpsi, const Vec& eta_center,
                      const Vec& xi_anchor, double radius, const GraphOptions& options = {});

void measure_ledger(GraphChart& chart);

/// psi_{n+1} = pi_E F_n (psi_n x id) beta_n^{-1} on the ball of radius
/// radius * e^{a + 11 eps} around eta_{n+1}.
GraphChart graph_transform_step(const TransformContext& ctx, const GraphChart& chart, const GraphOptions& options = {});

struct LedgerRow {
  std::size_t n = 0;
  double sup_psi = 0, bound_psi = 0;
  double sup_dpsi = 0, bound_dpsi = 0;
  double invariance_residual = 0;
  bool violation = false;
};

struct TransversalEvolution {
  std::vector<GraphChart> charts;  // n = 0..n_steps
  std::vector<LedgerRow> ledger;
  QBound q_bound;
  double q = 0;
  double C = 0;
  bool all_within_bounds = true;
};

struct EvolveOptions {
  GraphOptions graph;
  double delta_l = 0.25;
  bool allow_large_q = false;
  double slack_tol = 1e-6;
};

/// Checks the hypotheses on (psi_0, anchor, delta_0, C, q) and iterates the
/// graph transform. A failed hypothesis throws Precondition naming it.
TransversalEvolution evolve_transversal(const TransformContext& ctx, const GraphFn& psi0, const GraphDerivFn& dpsi0,
                                        const Vec& xi0, const Vec& eta0, double delta0, double C, double q,
                                        std::size_t n_steps, const EvolveOptions& options = {});

}  // namespace pesin
