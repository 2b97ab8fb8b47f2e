#pragma once

// Experiment configuration: a YAML document with fixed sections. Unknown
// keys are rejected with the offending line.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pesin/oseledets.hpp"
#include "pesin/scenarios.hpp"

namespace pesin::cli {

inline constexpr double kAuto = std::numeric_limits<double>::quiet_NaN();

struct PesinSection {
  double a = -0.6;
  double b = 0.6;
  int k = 1;
  double eps = kAuto;  // NaN: epsilon_ceiling(a, b, d)
  double l_prime = 2;
  double r_prime = 2;
  double c_prime = 2;
};

struct GridSpec {
  std::vector<Vec> points;  // explicit points take precedence
  Vec lo, hi;
  std::vector<int> n;       // per-dimension counts

  std::vector<Vec> expand() const;
};

struct SpectrumSection {
  std::size_t horizon = 1000;
  std::size_t stride = 1;
  std::size_t record_every = 0;  // 0: horizon / 100
  Vec point;
};

struct PesinGridSection {
  std::size_t horizon = 50;
  int r_samples = 4;
  GridSpec grid;
};

struct PsiSpec {
  std::string type = "tanh";  // tanh | linear | constant
  double amplitude = 0.2;     // tanh: psi(u) = amplitude q tanh(u_1 / q)
  double slope = 0;           // linear: psi(u) = slope u_1
  double value = 0;           // constant
};

struct TransformSection {
  bool enabled = true;
  double C = 0.5;
  double q = kAuto;       // NaN: q1_C
  double delta0 = kAuto;  // NaN: q / 4
  std::size_t steps = 20;
  bool allow_large_q = false;
  int nodes = 17;
  int degree = 8;
  PsiSpec psi;
};

struct ManifoldSection {
  GridSpec grid;
  double radius = 1.0;
  int nodes = 21;
  int degree = 8;
  std::size_t samples = 41;  // leaf points written per chart
  TransformSection transform;
};

struct TransversalSpec {
  Vec base;
  Vec direction;
  double tilt = 0;  // base + s direction + tilt tanh(s) tilt_direction
  Vec tilt_direction;
  double q = 0.5;
};

struct HolonomySection {
  TransversalSpec w1, w2;
  double lo = -0.4, hi = 0.4;
  int n = 9;
  std::size_t depth = 40;
  std::vector<double> radii{0.02, 0.01, 0.005};
  double act_c = 0.01;
  double eps_c = 2.0;
  std::vector<double> tilts;  // optional sweep of w1 tilts
};

struct ExperimentConfig {
  ScenarioSpec scenario;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds;  // spectrum: several words
  PesinSection pesin;
  SpectrumSection spectrum;
  PesinGridSection pesin_grid;
  ManifoldSection manifold;
  HolonomySection holonomy;
  std::string output_dir = "out";

  /// Pesin parameters with eps resolved.
  PesinParams pesin_params() const;
  int dim() const;
  std::vector<std::uint64_t> seed_list() const;
};

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source = "<string>");
ExperimentConfig load_config(const std::string& path);

/// Canonical YAML rendering: every field, fixed order, %.17g numbers.
/// parse_config(emit_config(c)) reproduces c.
std::string emit_config(const ExperimentConfig& config);

/// SHA-256 of the canonical rendering with the output directory blanked,
/// hex encoded.
std::string config_hash(const ExperimentConfig& config);

}  // namespace pesin::cli
