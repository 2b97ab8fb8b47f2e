#pragma once

// Vector-valued functions on a cube [c - R, c + R]^p sampled on a uniform
// tensor grid and evaluated by piecewise barycentric Lagrange interpolation.
// Values and derivative data are stored and interpolated separately.

#include <vector>

#include "pesin/common.hpp"

namespace pesin {

class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(Vec center, double radius, int nodes_per_dim, int degree, int value_dim);

  int input_dim() const { return static_cast<int>(center_.size()); }
  int value_dim() const { return value_dim_; }
  int nodes_per_dim() const { return m_; }
  int degree() const { return degree_; }
  std::size_t size() const { return values_.size(); }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }

  Vec node(std::size_t flat) const;
  void set(std::size_t flat, const Vec& value, const Mat& derivative);
  const Vec& node_value(std::size_t flat) const { return values_[flat]; }
  const Mat& node_derivative(std::size_t flat) const { return derivs_[flat]; }

  Vec value(const Vec& u) const;
  Mat derivative(const Vec& u) const;

  /// Nodes together with cell midpoints, restricted to the Euclidean ball of
  /// the domain radius: the sample set for sup-norm ledgers.
  std::vector<Vec> sample_points(int refine = 2) const;

 private:
  // Start index of the interpolation piece and normalized Lagrange weights
  // for one coordinate.
  void weights_1d(double t, int& start, std::vector<double>& w) const;
  template <typename T, typename Get>
  T interpolate(const Vec& u, const T& zero, Get get) const;

  Vec center_;
  double radius_ = 0;
  int m_ = 0;
  int degree_ = 0;
  int value_dim_ = 0;
  std::vector<double> bary_;
  std::vector<Vec> values_;
  std::vector<Mat> derivs_;
};

}  // namespace pesin
