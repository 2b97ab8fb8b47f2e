#include "pesin/graph_transform.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "pesin/linalg.hpp"

namespace pesin {

TheoremConstants theorem_constants(const PesinParams& params) {
  TheoremConstants c;
  c.A = params.metric_constant();
  c.eps0 = std::exp(params.a + 4 * params.eps) - std::exp(params.a + 2 * params.eps);
  c.c0 = 4 * c.A * params.r_prime * std::exp(2 * params.eps);
  c.r0 = c.eps0 / c.c0;
  return c;
}

std::string QBound::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "q1_C = min{r0/(2A) = " << radius_term << ", (e^{b-2eps} - e^{a+12eps})/(2c0) = " << gap_term
     << ", C(e^{b-9d eps} - e^{a+2eps})/(4c0) = " << slope_term << ", delta_l = " << delta_term << "} = " << value;
  return os.str();
}

QBound q_admissible(const PesinParams& params, double C, int d, double delta_l) {
  const TheoremConstants tc = theorem_constants(params);
  const double a = params.a, b = params.b, e = params.eps;
  QBound q;
  q.radius_term = tc.r0 / (2 * tc.A);
  q.gap_term = (std::exp(b - 2 * e) - std::exp(a + 12 * e)) / (2 * tc.c0);
  q.slope_term = C * (std::exp(b - 9 * d * e) - std::exp(a + 2 * e)) / (4 * tc.c0);
  q.delta_term = delta_l;
  q.value = std::min({q.radius_term, q.gap_term, q.slope_term, q.delta_term});
  return q;
}

TransformContext::TransformContext(OmegaWord word, LyapunovMetric metric)
    : word_(std::move(word)), metric_(std::move(metric)) {
  const std::size_t N = metric_.horizon();
  for (std::size_t n = 0; n <= N; ++n) {
    P_.push_back(metric_.normalizing(n));
    Pinv_.push_back(P_.back().inverse());
  }
  for (std::size_t n = 0; n < N; ++n) maps_.push_back(word_.map(n));
}

Vec TransformContext::phi(std::size_t n, const Vec& vu) const {
  if (n >= maps_.size()) fail(ErrorKind::Domain, "TransformContext: index beyond the metric horizon");
  return Pinv_[n + 1] * maps_[n].apply_difference(base_point(n), P_[n] * vu);
}

Mat TransformContext::dphi(std::size_t n, const Vec& vu) const {
  if (n >= maps_.size()) fail(ErrorKind::Domain, "TransformContext: index beyond the metric horizon");
  return Pinv_[n + 1] * maps_[n].jacobian_at(base_point(n) + P_[n] * vu) * P_[n];
}

Mat TransformContext::block_a(std::size_t n) const {
  return dphi(n, Vec::Zero(dim())).topLeftCorner(k(), k());
}

Mat TransformContext::block_b(std::size_t n) const {
  return dphi(n, Vec::Zero(dim())).bottomRightCorner(dim() - k(), dim() - k());
}

Vec TransformContext::remainder(std::size_t n, const Vec& vu) const {
  Vec lin(dim());
  lin << block_a(n) * vu.head(k()), block_b(n) * vu.tail(dim() - k());
  return phi(n, vu) - lin;
}

GraphChart make_chart(std::size_t n, const GraphFn& psi, const GraphDerivFn& dpsi, const Vec& eta_center,
                      const Vec& xi_anchor, double radius, const GraphOptions& options) {
  GraphChart chart;
  chart.n = n;
  chart.eta_center = eta_center;
  chart.xi_anchor = xi_anchor;
  chart.radius = radius;
  const int p = static_cast<int>(eta_center.size());
  const int k = static_cast<int>(xi_anchor.size());
  chart.psi = GridFunction(eta_center, radius, options.nodes_per_dim, options.degree, k);
  const double h = 1e-3 * radius;
  for (std::size_t f = 0; f < chart.psi.size(); ++f) {
    const Vec u = chart.psi.node(f);
    Mat d(k, p);
    if (dpsi) {
      d = dpsi(u);
    } else {
      for (int j = 0; j < p; ++j) {
        Vec up = u, um = u;
        up(j) += h;
        um(j) -= h;
        d.col(j) = (psi(up) - psi(um)) / (2 * h);
      }
    }
    chart.psi.set(f, psi(u), d);
  }
  measure_ledger(chart);
  return chart;
}

void measure_ledger(GraphChart& chart) {
  chart.sup_value = 0;
  chart.sup_derivative = 0;
  for (const Vec& u : chart.psi.sample_points(2)) {
    chart.sup_value = std::max(chart.sup_value, chart.psi.value(u).norm());
    chart.sup_derivative = std::max(chart.sup_derivative, op_norm(chart.psi.derivative(u)));
  }
}

GraphChart graph_transform_step(const TransformContext& ctx, const GraphChart& chart, const GraphOptions& options) {
  const std::size_t n = chart.n;
  const int k = ctx.k();
  const int d = ctx.dim();
  const int p = d - k;
  const auto& params = ctx.metric().params();

  Vec anchor(d);
  anchor << chart.xi_anchor, chart.eta_center;
  const Vec next_anchor = ctx.phi(n, anchor);

  GraphChart out;
  out.n = n + 1;
  out.xi_anchor = next_anchor.head(k);
  out.eta_center = next_anchor.tail(p);
  out.radius = chart.radius * std::exp(params.a + 11 * params.eps);
  out.psi = GridFunction(out.eta_center, out.radius, options.nodes_per_dim, options.degree, k);

  const Mat b_inv = ctx.block_b(n).inverse();
  const auto beta = [&](const Vec& u, Vec& full) {
    Vec vu(d);
    vu << chart.psi.value(u), u;
    full = ctx.phi(n, vu);
    return Vec(full.tail(p));
  };

  for (std::size_t f = 0; f < out.psi.size(); ++f) {
    const Vec target = out.psi.node(f);
    const double scale = std::max(out.radius, target.norm());
    Vec u = chart.eta_center + b_inv * (target - out.eta_center);
    Vec full;
    Vec r = beta(u, full) - target;
    int it = 0;
    for (;; ++it) {
      const double floor = 64 * DBL_EPSILON * (target.norm() + full.norm());
      if (r.norm() <= std::max(options.newton_tol * std::min(1.0, scale), floor)) break;
      if (it >= options.newton_max_iter) {
        std::ostringstream os;
        os.precision(17);
        os << "graph_transform_step: Newton did not converge at node " << f << " (target " << target.transpose()
           << ", residual " << r.norm() << ") for n = " << n;
        fail(ErrorKind::StepFailure, os.str());
      }
      Vec vu(d);
      vu << chart.psi.value(u), u;
      const Mat dp = ctx.dphi(n, vu);
      const Mat jac = dp.bottomLeftCorner(p, k) * chart.psi.derivative(u) + dp.bottomRightCorner(p, p);
      const Vec step = -jac.partialPivLu().solve(r);
      // Damped step: halve until the residual decreases.
      double t = 1;
      Vec trial_full;
      Vec trial_r = beta(u + step, trial_full) - target;
      while (trial_r.norm() >= r.norm() && t > 1e-8) {
        t /= 2;
        trial_r = beta(u + t * step, trial_full) - target;
      }
      if (trial_r.norm() >= r.norm()) {
        if (r.norm() <= 1e3 * floor) break;  // stagnated at rounding level
      }
      u += t * step;
      r = trial_r;
      full = trial_full;
    }
    out.newton_iterations_max = std::max(out.newton_iterations_max, it);

    Vec vu(d);
    vu << chart.psi.value(u), u;
    const Mat dp = ctx.dphi(n, vu);
    Mat lift(d, p);
    lift << chart.psi.derivative(u), Mat::Identity(p, p);
    const Mat img = dp * lift;
    const Mat dpsi = img.topRows(k) * img.bottomRows(p).inverse();
    const Vec value = full.head(k);
    out.psi.set(f, value, dpsi);
    // Distance of the new graph node from F_n(graph psi_n), in the max norm.
    Vec node(d);
    node << value, target;
    const Vec diff = full - node;
    out.invariance_residual =
        std::max(out.invariance_residual, std::max(diff.head(k).norm(), diff.tail(p).norm()));
  }
  measure_ledger(out);
  return out;
}

namespace {

[[noreturn]] void precondition(const std::string& name, double lhs, double rhs) {
  std::ostringstream os;
  os.precision(17);
  os << "precondition violated: " << name << " (lhs = " << lhs << ", rhs = " << rhs << ")";
  fail(ErrorKind::Precondition, os.str());
}

}  // namespace

TransversalEvolution evolve_transversal(const TransformContext& ctx, const GraphFn& psi0, const GraphDerivFn& dpsi0,
                                        const Vec& xi0, const Vec& eta0, double delta0, double C, double q,
                                        std::size_t n_steps, const EvolveOptions& options) {
  const auto& params = ctx.metric().params();
  const int d = ctx.dim();
  if (n_steps > ctx.horizon()) fail(ErrorKind::Domain, "evolve_transversal: metric horizon shorter than n_steps");
  TransversalEvolution ev;
  ev.q = q;
  ev.C = C;
  ev.q_bound = q_admissible(params, C, d, options.delta_l);

  if (!(C > 0 && C < 1)) precondition("slope constant C in (0, 1)", C, 1.0);
  if (!(q > 0)) precondition("q > 0", q, 0.0);
  if (!options.allow_large_q && q > ev.q_bound.value) {
    precondition("q <= q1_C, " + ev.q_bound.describe(), q, ev.q_bound.value);
  }
  if (!(delta0 > 0 && delta0 <= q / 4)) precondition("0 < delta_0 <= q/4", delta0, q / 4);
  const double anchor_norm = std::max(xi0.norm(), eta0.norm());
  if (anchor_norm > q / 4) precondition("anchor size |(xi_0, eta_0)|' <= q/4", anchor_norm, q / 4);
  const double anchor_gap = (psi0(eta0) - xi0).norm();
  if (anchor_gap > 1e-12 * std::max(1.0, xi0.norm()) + 1e-300) {
    precondition("anchor on the graph: psi_0(eta_0) = xi_0", anchor_gap, 0.0);
  }

  GraphChart chart = make_chart(0, psi0, dpsi0, eta0, xi0, delta0, options.graph);
  if (chart.sup_value > q / 4) precondition("initial graph size: sup |psi_0|' <= q/4", chart.sup_value, q / 4);
  if (chart.sup_derivative > C) precondition("initial graph slope: sup |D psi_0|' <= C", chart.sup_derivative, C);

  const auto row_for = [&](const GraphChart& c) {
    LedgerRow row;
    row.n = c.n;
    const double dn = static_cast<double>(c.n);
    row.sup_psi = c.sup_value;
    row.bound_psi = (0.25 + C) * q * std::exp((params.a + 7 * params.eps) * dn);
    row.sup_dpsi = c.sup_derivative;
    row.bound_dpsi = C * std::exp(-7.0 * d * params.eps * dn);
    row.invariance_residual = c.invariance_residual;
    row.violation = row.sup_psi > row.bound_psi + options.slack_tol || row.sup_dpsi > row.bound_dpsi + options.slack_tol;
    return row;
  };
  ev.ledger.push_back(row_for(chart));
  ev.charts.push_back(chart);
  for (std::size_t i = 0; i < n_steps; ++i) {
    chart = graph_transform_step(ctx, chart, options.graph);
    ev.ledger.push_back(row_for(chart));
    ev.charts.push_back(chart);
  }
  for (const auto& r : ev.ledger) ev.all_within_bounds = ev.all_within_bounds && !r.violation;
  return ev;
}

}  // namespace pesin
