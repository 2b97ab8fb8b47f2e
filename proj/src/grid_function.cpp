#include "pesin/grid_function.hpp"

#include <boost/math/special_functions/binomial.hpp>

#include <algorithm>
#include <cmath>

namespace pesin {

GridFunction::GridFunction(Vec center, double radius, int nodes_per_dim, int degree, int value_dim)
    : center_(std::move(center)), radius_(radius), m_(nodes_per_dim), degree_(degree), value_dim_(value_dim) {
  if (center_.size() < 1) fail(ErrorKind::Domain, "GridFunction: empty domain");
  if (!(radius_ > 0)) fail(ErrorKind::Domain, "GridFunction: radius must be positive");
  if (degree_ < 1 || m_ < degree_ + 1) fail(ErrorKind::Domain, "GridFunction: need nodes_per_dim > degree >= 1");
  bary_.resize(degree_ + 1);
  for (int j = 0; j <= degree_; ++j) {
    bary_[j] = ((j % 2) ? -1.0 : 1.0) * boost::math::binomial_coefficient<double>(degree_, j);
  }
  std::size_t total = 1;
  for (int i = 0; i < input_dim(); ++i) total *= static_cast<std::size_t>(m_);
  values_.assign(total, Vec::Zero(value_dim_));
  derivs_.assign(total, Mat::Zero(value_dim_, input_dim()));
}

Vec GridFunction::node(std::size_t flat) const {
  Vec u(input_dim());
  const double h = 2 * radius_ / (m_ - 1);
  for (int i = 0; i < input_dim(); ++i) {
    const auto idx = static_cast<int>(flat % static_cast<std::size_t>(m_));
    flat /= static_cast<std::size_t>(m_);
    u(i) = center_(i) - radius_ + h * idx;
  }
  return u;
}

void GridFunction::set(std::size_t flat, const Vec& value, const Mat& derivative) {
  values_.at(flat) = value;
  derivs_.at(flat) = derivative;
}

void GridFunction::weights_1d(double t, int& start, std::vector<double>& w) const {
  // t is the position in node units, 0 .. m-1.
  const int pieces = std::max(1, (m_ - 1 + degree_ - 1) / degree_);
  int piece = static_cast<int>(std::floor(t / degree_));
  piece = std::clamp(piece, 0, pieces - 1);
  start = std::min(piece * degree_, m_ - 1 - degree_);
  w.assign(degree_ + 1, 0.0);
  const double local = t - start;
  for (int j = 0; j <= degree_; ++j) {
    if (local == static_cast<double>(j)) {
      w[j] = 1.0;
      return;
    }
  }
  double sum = 0;
  for (int j = 0; j <= degree_; ++j) {
    w[j] = bary_[j] / (local - j);
    sum += w[j];
  }
  for (double& x : w) x /= sum;
}

template <typename T, typename Get>
T GridFunction::interpolate(const Vec& u, const T& zero, Get get) const {
  const int p = input_dim();
  const double h = 2 * radius_ / (m_ - 1);
  std::vector<int> start(p);
  std::vector<std::vector<double>> w(p);
  for (int i = 0; i < p; ++i) weights_1d((u(i) - (center_(i) - radius_)) / h, start[i], w[i]);
  T acc = zero;
  std::vector<int> idx(p, 0);
  for (;;) {
    double coeff = 1;
    std::size_t flat = 0, stride = 1;
    for (int i = 0; i < p; ++i) {
      coeff *= w[i][idx[i]];
      flat += static_cast<std::size_t>(start[i] + idx[i]) * stride;
      stride *= static_cast<std::size_t>(m_);
    }
    if (coeff != 0.0) acc += coeff * get(flat);
    int i = 0;
    while (i < p && ++idx[i] > degree_) idx[i++] = 0;
    if (i == p) break;
  }
  return acc;
}

Vec GridFunction::value(const Vec& u) const {
  return interpolate<Vec>(u, Vec::Zero(value_dim_), [this](std::size_t f) -> const Vec& { return values_[f]; });
}

Mat GridFunction::derivative(const Vec& u) const {
  return interpolate<Mat>(u, Mat::Zero(value_dim_, input_dim()),
                          [this](std::size_t f) -> const Mat& { return derivs_[f]; });
}

std::vector<Vec> GridFunction::sample_points(int refine) const {
  const int p = input_dim();
  const int mm = (m_ - 1) * refine + 1;
  const double h = 2 * radius_ / (mm - 1);
  std::size_t total = 1;
  for (int i = 0; i < p; ++i) total *= static_cast<std::size_t>(mm);
  std::vector<Vec> pts;
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec u(p);
    std::size_t f = flat;
    for (int i = 0; i < p; ++i) {
      u(i) = center_(i) - radius_ + h * static_cast<double>(f % static_cast<std::size_t>(mm));
      f /= static_cast<std::size_t>(mm);
    }
    if ((u - center_).norm() <= radius_ * (1 + 1e-12)) pts.push_back(u);
  }
  return pts;
}

}  // namespace pesin
