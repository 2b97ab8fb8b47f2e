#pragma once

// Random dynamical systems on R^d: i.i.d. map families, realized words,
// orbits, tangent cocycles and the maps re-centred along a trajectory.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pesin/common.hpp"

namespace pesin {

/// One C^2 diffeomorphism of R^d. Derivatives fall back to central
/// differences when no closed form is supplied.
struct DiffeoMap {
  using VecFn = std::function<Vec(const Vec&)>;
  using MatFn = std::function<Mat(const Vec&)>;

  VecFn forward;
  VecFn inverse;
  /// Optional cancellation-free evaluation of f(base + v) - f(base); far
  /// from the origin the naive difference loses all significant digits.
  std::function<Vec(const Vec& base, const Vec& v)> difference;
  MatFn jacobian;          // optional
  MatFn inverse_jacobian;  // optional; argument is a point of the image
  /// Optional sup of |D^2 f| over the ball (x, radius).
  std::function<double(const Vec&, double)> second_derivative_bound;
  Vec params;

  Vec apply(const Vec& x) const { return forward(x); }
  Vec apply_inverse(const Vec& y) const { return inverse(y); }
  Mat jacobian_at(const Vec& x) const;
  Mat inverse_jacobian_at(const Vec& y) const;
  Vec apply_difference(const Vec& base, const Vec& v) const {
    return difference ? difference(base, v) : Vec(forward(base + v) - forward(base));
  }
};

/// Central-difference Jacobian with step 1e-6 * max(1, |x|).
Mat finite_difference_jacobian(const DiffeoMap::VecFn& f, const Vec& x);

struct ParameterBound {
  std::string name;
  double lo = 0;
  double hi = 0;
};

/// A law on diffeomorphisms, represented by a deterministic sampler of
/// parameters and a builder turning parameters into maps.
class MapFamily {
 public:
  using Sampler = std::function<Vec(std::uint64_t seed, std::uint64_t index)>;
  using Builder = std::function<DiffeoMap(const Vec& params)>;

  MapFamily(std::string name, int dim, std::string description, std::vector<ParameterBound> bounds,
            Sampler sampler, Builder builder);

  /// Parameters of the index-th map of the word with this seed; throws a
  /// Config error when they fall outside the declared bounds.
  Vec sample_params(std::uint64_t seed, std::uint64_t index) const;
  DiffeoMap sample(std::uint64_t seed, std::uint64_t index) const;
  DiffeoMap build(const Vec& params) const { return builder_(params); }

  const std::string& name() const { return name_; }
  const std::string& description() const { return description_; }
  int dim() const { return dim_; }
  const std::vector<ParameterBound>& parameter_bounds() const { return bounds_; }

 private:
  std::string name_;
  int dim_;
  std::string description_;
  std::vector<ParameterBound> bounds_;
  Sampler sampler_;
  Builder builder_;
};

using FamilyPtr = std::shared_ptr<const MapFamily>;

/// A realized noise sequence omega = (f_0, f_1, ...). Entries are computed
/// on demand from (seed, offset + i), so the word is an infinite sequence
/// with a nominal length used for precondition checks.
class OmegaWord {
 public:
  OmegaWord() = default;
  OmegaWord(FamilyPtr family, std::uint64_t seed, std::size_t length, std::size_t offset = 0);

  DiffeoMap map(std::size_t i) const;
  Vec params(std::size_t i) const;
  std::vector<DiffeoMap> realized() const;

  /// Left shift by `k`: shift(w).map(i) == w.map(i + k).
  OmegaWord shift(std::size_t k = 1) const;
  OmegaWord extended(std::size_t new_length) const;

  std::size_t length() const { return length_; }
  std::size_t offset() const { return offset_; }
  std::uint64_t seed() const { return seed_; }
  int dim() const { return family_->dim(); }
  const MapFamily& family() const { return *family_; }
  const FamilyPtr& family_ptr() const { return family_; }

 private:
  FamilyPtr family_;
  std::uint64_t seed_ = 0;
  std::size_t length_ = 0;
  std::size_t offset_ = 0;
};

OmegaWord sample_word(FamilyPtr family, std::uint64_t seed, std::size_t n);

using Orbit = std::vector<Vec>;

/// x, f_0 x, f_1 f_0 x, ..., n+1 points. Throws OrbitDivergence when a
/// coordinate is non-finite or |x| exceeds the overflow guard.
Orbit iterate(const OmegaWord& word, const Vec& x, std::size_t n);

struct CocycleBlock {
  Vec base_point;
  std::size_t start = 0;
  std::size_t length = 0;
  Mat matrix;
};

/// D f^l_n at f^n x: ordered product of step Jacobians along the orbit.
CocycleBlock cocycle_block(const OmegaWord& word, const Vec& x, std::size_t n, std::size_t l);

/// The map v -> f_n(x_n + v) - x_{n+1} centred on the orbit of x.
class CenteredFrame {
 public:
  CenteredFrame(OmegaWord word, Vec base, std::size_t index,
                double domain_radius = std::numeric_limits<double>::infinity());

  const Vec& point() const { return orbit_[index_]; }
  const Vec& next_point() const { return orbit_[index_ + 1]; }
  std::size_t index() const { return index_; }
  double domain_radius() const { return domain_radius_; }
  const DiffeoMap& step_map() const { return map_; }

 private:
  OmegaWord word_;
  Vec base_;
  std::size_t index_;
  double domain_radius_;
  Orbit orbit_;
  DiffeoMap map_;
};

Vec centered_map(const CenteredFrame& frame, const Vec& v);
Mat centered_jacobian(const CenteredFrame& frame, const Vec& v);
/// Inverse of centered_map: w -> f_n^{-1}(x_{n+1} + w) - x_n.
Vec centered_inverse(const CenteredFrame& frame, const Vec& w);
/// Difference quotient (DF(v + h u) - DF(v - h u)) / 2h, a probe of D^2F[u].
Mat second_derivative_probe(const CenteredFrame& frame, const Vec& v, const Vec& u, double h = 1e-4);

/// Sampled suprema of the second derivatives of a map and of its inverse
/// over the unit ball around x (inverse measured on the image ball).
struct SecondDerivativeSup {
  double forward = 0;
  double inverse = 0;
};

SecondDerivativeSup sample_second_derivative_sup(const DiffeoMap& map, const Vec& x, double radius,
                                                 int points_per_dim);

/// Quasi-random points of the unit ball in R^d (Sobol, deterministic),
/// preceded by the centre.
std::vector<Vec> unit_ball_points(int dim, int count);
/// Deterministic set of unit directions: coordinate axes plus Sobol points.
std::vector<Vec> unit_directions(int dim, int count);

struct AssumptionReport {
  std::size_t samples = 0;
  double mean_log_plus_df = 0;        // log+ |D f|
  double mean_log_sup_d2f = 0;        // log sup |D^2 F| over the unit ball
  double mean_log_sup_d2f_inverse = 0;
  double mean_log_df_inverse = 0;     // log |D f^{-1}|
  double stderr_log_plus_df = 0;
  double stderr_log_df_inverse = 0;
  bool log_floor_engaged = false;
  bool overflow = false;
  bool violation = false;             // a non-finite derivative sample was seen
};

/// Empirical means of the three integrability quantities over samples
/// (f_i, x_i) with f_i ~ family and x_i = mu_sampler(i).
AssumptionReport validate_assumptions(const MapFamily& family,
                                      const std::function<Vec(std::uint64_t)>& mu_sampler,
                                      std::size_t sample_budget, std::uint64_t seed = 0,
                                      int points_per_dim = 4);

}  // namespace pesin
