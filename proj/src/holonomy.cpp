#include "pesin/holonomy.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pesin/linalg.hpp"

namespace pesin {

namespace {

// Parameter samples of the ball |s| <= q.
std::vector<Vec> parameter_samples(int p, double q) {
  std::vector<Vec> out;
  if (p == 1) {
    for (int i = 0; i <= 64; ++i) out.push_back(Vec::Constant(1, -q + 2 * q * i / 64.0));
  } else {
    for (const Vec& u : unit_ball_points(p, 256)) out.push_back(q * u);
    for (const Vec& u : unit_directions(p, 32)) out.push_back(q * u);
  }
  return out;
}

// Full Gauss-Legendre rule on [-1, 1] from boost's half-rule tables.
template <unsigned N>
void gauss_rule(std::vector<double>& x, std::vector<double>& w) {
  using Rule = boost::math::quadrature::gauss<double, N>;
  x.clear();
  w.clear();
  const auto& ab = Rule::abscissa();
  const auto& wt = Rule::weights();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    if (ab[i] == 0) {
      x.push_back(0);
      w.push_back(wt[i]);
    } else {
      x.push_back(-ab[i]);
      w.push_back(wt[i]);
      x.push_back(ab[i]);
      w.push_back(wt[i]);
    }
  }
}

// Tensor Gauss-Legendre integral over the cube centre +- h.
template <unsigned N, typename F>
double tensor_integral(const Vec& centre, double h, F f) {
  std::vector<double> x, w;
  gauss_rule<N>(x, w);
  const Index p = centre.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0);
  double acc = 0;
  for (;;) {
    Vec s(p);
    double weight = 1;
    for (Index i = 0; i < p; ++i) {
      s(i) = centre(i) + h * x[idx[static_cast<std::size_t>(i)]];
      weight *= h * w[idx[static_cast<std::size_t>(i)]];
    }
    acc += weight * f(s);
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == x.size()) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  return acc;
}

double volume_element(const Mat& t) { return std::sqrt(std::max(0.0, (t.transpose() * t).determinant())); }

}  // namespace

Transversal make_transversal(const OmegaWord& word, const PesinParams& params, std::function<Vec(const Vec&)> param,
                             std::function<Mat(const Vec&)> tangent, double q) {
  if (!(q > 0)) fail(ErrorKind::Domain, "make_transversal: q must be positive");
  Transversal w;
  w.q = q;
  w.param = std::move(param);
  w.tangent = std::move(tangent);
  const int p = static_cast<int>(word.dim()) - params.k;
  w.base = w.param(Vec::Zero(p));
  const OseledetsSplit split = local_splitting(word, w.base, params);
  w.E0 = split.E0;
  w.H0 = split.H0;
  if (w.tangent(Vec::Zero(p)).cols() != p) fail(ErrorKind::Domain, "make_transversal: tangent must be d x (d - k)");
  for (const Vec& s : parameter_samples(p, q)) {
    const Vec delta = w.param(s) - w.base;
    w.sup_psi = std::max(w.sup_psi, (w.E0.transpose() * delta).norm());
    const Mat t = w.tangent(s);
    const Mat th = w.H0.transpose() * t;
    const Eigen::FullPivLU<Mat> lu(th);
    if (!lu.isInvertible()) {
      w.sup_dpsi = std::numeric_limits<double>::infinity();
    } else {
      w.sup_dpsi = std::max(w.sup_dpsi, op_norm(Mat(w.E0.transpose() * t * lu.inverse())));
    }
  }
  w.norm = w.sup_psi + w.sup_dpsi;
  return w;
}

Transversal line_transversal(const OmegaWord& word, const PesinParams& params, const Vec& base, const Vec& direction,
                             double q) {
  const Vec dir = direction;
  return make_transversal(
      word, params, [base, dir](const Vec& s) { return Vec(base + s(0) * dir); },
      [dir](const Vec&) { return Mat(dir); }, q);
}

Intersection intersect_leaf_with_transversal(const StableChart& leaf, const Transversal& w,
                                             const HolonomyOptions& options) {
  if (w.norm > options.eps_c) {
    std::ostringstream os;
    os << "intersect_leaf_with_transversal: |W| = " << w.norm << " exceeds eps_C = " << options.eps_c;
    fail(ErrorKind::Precondition, os.str());
  }
  if (leaf.measured_lip > options.leaf_slope) {
    std::ostringstream os;
    os << "intersect_leaf_with_transversal: leaf slope " << leaf.measured_lip << " exceeds " << options.leaf_slope;
    fail(ErrorKind::Precondition, os.str());
  }
  const int k = leaf.k;
  const int p = w.p();
  std::vector<Intersection> found;
  for (const Vec& u : unit_ball_points(k + p, options.seeds)) {
    Vec xi = leaf.radius * u.head(k);
    Vec s = w.q * u.tail(p);
    Intersection cand;
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      const Vec f = leaf.point(xi) - w.point(s);
      if (f.norm() < options.newton_tol) {
        cand.residual = f.norm();
        cand.iterations = it;
        ok = true;
        break;
      }
      Mat jac(f.size(), k + p);
      jac << leaf.tangent(xi), -w.tangent_at(s);
      const Vec step = jac.fullPivLu().solve(f);
      if (!step.allFinite()) break;
      // Halve the step while the residual grows.
      double t = 1;
      while (t > 1e-6) {
        const Vec xn = xi - t * step.head(k);
        const Vec sn = s - t * step.tail(p);
        if ((leaf.point(xn) - w.point(sn)).norm() < f.norm()) break;
        t /= 2;
      }
      xi -= t * step.head(k);
      s -= t * step.tail(p);
    }
    if (!ok || xi.norm() > leaf.radius * (1 + 1e-9) || s.norm() > w.q * (1 + 1e-9)) continue;
    cand.xi = xi;
    cand.s = s;
    cand.point = w.point(s);
    bool seen = false;
    for (const auto& other : found) seen = seen || (other.point - cand.point).norm() < 1e-7;
    if (!seen) found.push_back(cand);
  }
  if (found.empty()) {
    fail(ErrorKind::Transversality, "intersect_leaf_with_transversal: Newton found no intersection from " +
                                        std::to_string(options.seeds) + " starts");
  }
  if (found.size() > 1) {
    fail(ErrorKind::NonUniqueness, "intersect_leaf_with_transversal: " + std::to_string(found.size()) +
                                       " distinct intersections; the transversal is not transverse to the leaf");
  }
  return found.front();
}

PoincareHandle::PoincareHandle(OmegaWord word, PesinParams params, Transversal w1, Transversal w2,
                               HolonomyOptions options)
    : word_(std::move(word)), params_(params), w1_(std::move(w1)), w2_(std::move(w2)), options_(options) {
  for (const Transversal* w : {&w1_, &w2_}) {
    if (w->norm > options_.eps_c) {
      std::ostringstream os;
      os << "PoincareHandle: transversal norm |W| = " << w->norm << " exceeds eps_C = " << options_.eps_c;
      fail(ErrorKind::Precondition, os.str());
    }
  }
  identical_ = w1_.q == w2_.q && w1_.p() == w2_.p();
  if (identical_) {
    for (const Vec& s : parameter_samples(w1_.p(), w1_.q)) {
      identical_ = identical_ && (w1_.point(s) - w2_.point(s)).norm() == 0;
    }
  }
}

std::size_t PoincareHandle::n_shoot() const {
  if (options_.n_shoot > 0) return options_.n_shoot;
  return std::max<std::size_t>(50, static_cast<std::size_t>(std::ceil(40.0 / (params_.b - params_.a))));
}

PoincareRecord PoincareHandle::map(const Vec& s1) const {
  PoincareRecord rec;
  rec.s1 = s1;
  if (identical_) {
    rec.s2 = s1;
    return rec;
  }
  const Vec y = w1_.point(s1);
  const Transversal& w2 = w2_;
  ShootingProblem pr{word_, y, [&w2, y](const Vec& s) { return Vec(w2.point(s) - y); },
                     w2.tangent_at(Vec::Zero(w2.p())), n_shoot(), options_.escape_radius};
  const double q = w2.q;
  ShootingResult res;
  if (w2.p() == 1) {
    // Sign pattern of the unstable component on 8 subintervals of [-q, q].
    std::vector<double> nodes, signs;
    for (int i = 0; i <= options_.seeds; ++i) {
      nodes.push_back(-q + 2 * q * i / options_.seeds);
      const double g = shooting_functional(pr, Vec::Constant(1, nodes.back()));
      signs.push_back((g > 0) - (g < 0));
    }
    // crossings: exact zeros at nodes, and sign changes between nonzero nodes
    std::vector<std::pair<double, double>> brackets;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (signs[i] == 0) brackets.emplace_back(nodes[i], nodes[i]);
      if (i + 1 < nodes.size() && signs[i] != 0 && signs[i + 1] != 0 && signs[i] != signs[i + 1]) {
        brackets.emplace_back(nodes[i], nodes[i + 1]);
      }
    }
    if (brackets.empty()) {
      fail(ErrorKind::Transversality, "poincare_map: the leaf through the point does not cross the target transversal");
    }
    if (brackets.size() > 1) {
      fail(ErrorKind::NonUniqueness, "poincare_map: the leaf crosses the target transversal " +
                                         std::to_string(brackets.size()) + " times");
    }
    res = shoot_in_interval(pr, brackets.front().first, brackets.front().second);
  } else {
    res = shoot_to_leaf(pr, Vec::Zero(w2.p()), q);
    if (res.s.norm() > q * (1 + 1e-9)) {
      fail(ErrorKind::Transversality, "poincare_map: the leaf meets the target outside its parameter ball");
    }
  }
  rec.s2 = res.s;
  rec.leaf_residual = res.leaf_residual;
  rec.horizon = res.horizon_used;
  if (rec.leaf_residual > options_.leaf_tol) {
    std::ostringstream os;
    os << "poincare_map: leaf residual " << rec.leaf_residual << " above " << options_.leaf_tol;
    fail(ErrorKind::Transversality, os.str());
  }
  return rec;
}

Vec poincare_map(const PoincareHandle& handle, const Vec& s1) { return handle.target().point(handle.map(s1).s2); }

DetEstimate jacobian_det_ratio(const PoincareHandle& handle, const Vec& s1, std::size_t n_depth, double tol) {
  DetEstimate est;
  if (handle.identical()) {
    est.value = 1;
    est.converged = true;
    est.history.push_back(1);
    return est;
  }
  const PoincareRecord rec = handle.map(s1);
  const OmegaWord& word = handle.word();
  const Vec y1 = handle.source().point(s1);
  const Vec y2 = handle.target().point(rec.s2);
  const std::size_t cap = n_depth + 200;
  const std::size_t L = std::min(finite_orbit_length(word, y1, cap), finite_orbit_length(word, y2, cap));
  const std::size_t n_max = std::min(n_depth, L / 2);
  if (n_max < 1) fail(ErrorKind::OrbitDivergence, "jacobian_det_ratio: orbits leave the finite range immediately");
  const std::size_t burn = std::min<std::size_t>(L - n_max, 200);
  const int k = handle.params().k;
  const OrbitFrames frames = build_frames(word, y1, k, n_max, burn);
  const Orbit orbit2 = iterate(word, y2, n_max);
  Mat t1 = orthonormalize(handle.source().tangent_at(s1));
  Mat t2 = orthonormalize(handle.target().tangent_at(rec.s2));
  const Index p = t1.cols();
  double log1 = 0, log2 = 0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const DiffeoMap f = word.map(n - 1);
    const Mat j1 = f.jacobian_at(frames.orbit[n - 1]);
    const Mat j2 = f.jacobian_at(orbit2[n - 1]);
    log1 += std::log(restricted_det(j1, t1));
    log2 += std::log(restricted_det(j2, t2));
    t1 = orthonormalize(Mat(j1 * t1));
    t2 = orthonormalize(Mat(j2 * t2));
    // Linear holonomy from span t1 to span t2 along E_n.
    Mat basis(t1.rows(), p + k);
    basis << t2, frames.E[n];
    const Mat m = basis.fullPivLu().solve(t1).topRows(p);
    const double value = std::exp(log1 - log2) * std::abs(m.determinant());
    if (!(value > 0) || !std::isfinite(value)) {
      fail(ErrorKind::StepFailure, "jacobian_det_ratio: non-positive Jacobian estimate");
    }
    est.history.push_back(value);
    est.value = value;
    est.depth = n;
    if (n >= 2 && std::abs(value - est.history[n - 2]) < tol) {
      est.converged = true;
      break;
    }
  }
  return est;
}

RatioEstimate jacobian_measure_ratio(const PoincareHandle& handle, const Vec& s1, const std::vector<double>& radii) {
  if (radii.size() < 2) fail(ErrorKind::Domain, "jacobian_measure_ratio: need at least two radii");
  RatioEstimate est;
  est.radii = radii;
  std::sort(est.radii.begin(), est.radii.end(), std::greater<>());
  const Transversal& w1 = handle.source();
  const Transversal& w2 = handle.target();
  const Index p = s1.size();
  const auto mapped = [&](const Vec& s) {
    ++est.samples;
    try {
      return handle.map(s).s2;
    } catch (const Error& e) {
      fail(ErrorKind::ChartDomain, std::string("jacobian_measure_ratio: the mapped ball leaves the target; "
                                               "use a smaller radius schedule (") + e.what() + ")");
    }
  };
  for (double h : est.radii) {
    if (s1.norm() + h * std::sqrt(static_cast<double>(p)) > w1.q) {
      fail(ErrorKind::ChartDomain, "jacobian_measure_ratio: the ball of radius " + std::to_string(h) +
                                       " leaves the source transversal; use a smaller radius schedule");
    }
    double ratio16 = 0, ratio8 = 0;
    if (p == 1) {
      using G16 = boost::math::quadrature::gauss<double, 16>;
      using G8 = boost::math::quadrature::gauss<double, 8>;
      const auto speed1 = [&](double s) { return w1.tangent_at(Vec::Constant(1, s)).norm(); };
      const auto speed2 = [&](double s) { return w2.tangent_at(Vec::Constant(1, s)).norm(); };
      const double a = s1(0) - h, b = s1(0) + h;
      const double pa = mapped(Vec::Constant(1, a))(0);
      const double pb = mapped(Vec::Constant(1, b))(0);
      const double lo = std::min(pa, pb), hi = std::max(pa, pb);
      ratio16 = G16::integrate(speed2, lo, hi) / G16::integrate(speed1, a, b);
      ratio8 = G8::integrate(speed2, lo, hi) / G8::integrate(speed1, a, b);
    } else {
      // Area of P(Q) as the integral of the pulled-back volume element, with
      // D P from central differences of the map.
      const double delta = h * 1e-3;
      const auto area2 = [&](const Vec& s) {
        const Vec s2 = mapped(s);
        Mat dp(p, p);
        for (Index j = 0; j < p; ++j) {
          Vec sp = s, sm = s;
          sp(j) += delta;
          sm(j) -= delta;
          dp.col(j) = (mapped(sp) - mapped(sm)) / (2 * delta);
        }
        return volume_element(Mat(w2.tangent_at(s2) * dp));
      };
      const auto area1 = [&](const Vec& s) { return volume_element(w1.tangent_at(s)); };
      ratio16 = tensor_integral<8>(s1, h, area2) / tensor_integral<8>(s1, h, area1);
      ratio8 = tensor_integral<4>(s1, h, area2) / tensor_integral<4>(s1, h, area1);
    }
    if (!(ratio16 > 0)) fail(ErrorKind::StepFailure, "jacobian_measure_ratio: non-positive measure ratio");
    est.ratios.push_back(ratio16);
    est.quadrature_error = std::max(est.quadrature_error, std::abs(ratio16 - ratio8));
  }
  // The ball is symmetric about y, so the error is even in h.
  const std::size_t m = est.ratios.size();
  const double rho = est.radii[m - 2] / est.radii[m - 1];
  est.value = (rho * rho * est.ratios[m - 1] - est.ratios[m - 2]) / (rho * rho - 1);
  est.extrapolation_change = std::abs(est.value - est.ratios[m - 1]);
  est.h_min = est.radii[m - 1];
  return est;
}

JacobianEstimate estimate_jacobian(const PoincareHandle& handle, const Vec& s1, std::size_t n_depth,
                                   const std::vector<double>& radii) {
  JacobianEstimate row;
  row.s = s1;
  row.point = handle.source().point(s1);
  try {
    const DetEstimate det = jacobian_det_ratio(handle, s1, n_depth);
    const RatioEstimate ratio = jacobian_measure_ratio(handle, s1, radii);
    row.value_det = det.value;
    row.det_converged = det.converged;
    row.value_ratio = ratio.value;
    row.quadrature_error = ratio.quadrature_error;
    row.h_min = ratio.h_min;
    row.discrepancy = std::abs(row.value_det - row.value_ratio);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::StepFailure) throw;
    row.skipped = true;
    row.reason = std::string(to_string(e.kind())) + ": " + e.what();
  }
  return row;
}

ActReport summarize_act(std::vector<JacobianEstimate> rows, double act_c) {
  ActReport rep;
  rep.act_c = act_c;
  std::size_t computed = 0;
  for (const JacobianEstimate& row : rows) {
    if (row.skipped) {
      ++rep.skipped;
    } else {
      ++computed;
      rep.max_deviation =
          std::max({rep.max_deviation, std::abs(row.value_det - 1), std::abs(row.value_ratio - 1)});
    }
  }
  rep.rows = std::move(rows);
  rep.pass = computed > 0 && rep.max_deviation <= act_c;
  return rep;
}

ActReport act_verify(const PoincareHandle& handle, const std::vector<Vec>& grid, double act_c, std::size_t n_depth,
                     const std::vector<double>& radii) {
  std::vector<JacobianEstimate> rows;
  for (const Vec& s : grid) rows.push_back(estimate_jacobian(handle, s, n_depth, radii));
  return summarize_act(std::move(rows), act_c);
}

}  // namespace pesin
