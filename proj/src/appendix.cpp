#include "pesin/appendix.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

#include "pesin/linalg.hpp"

namespace pesin {

double restricted_det_constant(int p) { return std::sqrt(2.0) * p; }

BoundCheck restricted_det_bound_check(const Mat& A, const Mat& B, const Mat& E1, const Mat& E2, double a) {
  if (E1.cols() != E2.cols() || E1.cols() < 1) fail(ErrorKind::Domain, "restricted_det_bound_check: dimension mismatch");
  if (a < 1 || op_norm(A) > a * (1 + 1e-12) || op_norm(B) > a * (1 + 1e-12)) {
    fail(ErrorKind::Domain, "restricted_det_bound_check: need a >= max(1, |A|, |B|)");
  }
  const int p = static_cast<int>(E1.cols());
  BoundCheck c;
  c.lhs = std::abs(restricted_det(A, E1) - restricted_det(B, E2));
  c.rhs = restricted_det_constant(p) * std::pow(a, p) * (op_norm(Mat(A - B)) + aperture(E1, E2));
  c.margin = c.rhs - c.lhs;
  return c;
}

Mat graph_basis(const Mat& A) {
  Mat g(A.cols() + A.rows(), A.cols());
  g << Mat::Identity(A.cols(), A.cols()), A;
  return g;
}

BoundCheck graph_aperture_bound_check(const Mat& A, const Mat& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) fail(ErrorKind::Domain, "graph_aperture_bound_check: shape mismatch");
  BoundCheck c;
  c.lhs = aperture(graph_basis(A), graph_basis(B));
  c.rhs = 2 * (op_norm(A) + op_norm(B));
  c.margin = c.rhs - c.lhs;
  return c;
}

VolumeCheck graph_volume_bound_check(const GridFunction& psi, double a_m) {
  using Rule = boost::math::quadrature::gauss<double, 16>;
  std::vector<double> x, w;
  for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
    const double ab = Rule::abscissa()[i], wt = Rule::weights()[i];
    x.push_back(-ab);
    w.push_back(wt);
    x.push_back(ab);
    w.push_back(wt);
  }
  const int p = psi.input_dim();
  const int cells = psi.nodes_per_dim() - 1;
  const double R = psi.radius();
  const double hc = R / cells;  // half width of a cell
  const std::size_t per_dim = static_cast<std::size_t>(cells) * x.size();
  VolumeCheck v;
  v.domain_volume = std::pow(2 * R, p);
  std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0);
  for (;;) {
    Vec u(p);
    double weight = 1;
    for (int i = 0; i < p; ++i) {
      const std::size_t cell = idx[static_cast<std::size_t>(i)] / x.size();
      const std::size_t node = idx[static_cast<std::size_t>(i)] % x.size();
      const double mid = psi.center()(i) - R + (2 * static_cast<double>(cell) + 1) * hc;
      u(i) = mid + hc * x[node];
      weight *= hc * w[node];
    }
    const Mat D = psi.derivative(u);
    v.node_derivative_sup = std::max(v.node_derivative_sup, op_norm(D));
    const Mat g = Mat::Identity(p, p) + D.transpose() * D;
    v.graph_volume += weight * std::sqrt(g.determinant());
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == per_dim) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  v.upper_bound = std::pow(1 + a_m * a_m, 0.5 * p) * v.domain_volume;
  v.lower_margin = v.graph_volume - v.domain_volume;
  v.upper_margin = v.upper_bound - v.graph_volume;
  v.precondition_ok = v.node_derivative_sup <= a_m * (1 + 1e-9);
  return v;
}

VolumeCheck graph_volume_bound_check(const GraphChart& chart, double a_m) {
  return graph_volume_bound_check(chart.psi, a_m);
}

VolumeCheck graph_volume_bound_check(const StableChart& chart, double a_m) {
  return graph_volume_bound_check(chart.h, a_m);
}

}  // namespace pesin
