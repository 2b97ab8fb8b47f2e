#pragma once

// Benchmark systems with closed-form foliations and their series oracles.
//
//   identity   f = id on R^d
//   S1         constant diag(d1, d2), default diag(2, 1/2)
//   S2         i.i.d. diag(a, b), log a and log b uniform on their ranges
//   S3         f(x, y) = (a x, b y + c sin x), default a = 1/2, b = 2, c = 1
//   S4         the S3 form with a, b, c drawn uniformly per step
//   linear     constant user matrix
//   skew       S4 with user ranges

#include <map>
#include <string>
#include <vector>

#include "pesin/rds.hpp"

namespace pesin {

struct ScenarioSpec {
  std::string name;
  int dim = 2;                           // identity only
  std::map<std::string, double> params;  // overrides of the defaults above
  Mat matrix;                            // linear only
};

/// Parameter names and defaults understood by a scenario.
std::map<std::string, double> scenario_defaults(const std::string& name);
std::vector<std::string> scenario_names();

/// Throws a Config error for unknown names, unknown parameters or ranges
/// that break sup|a| < 1 < inf|b| on skew systems.
FamilyPtr make_scenario(const ScenarioSpec& spec);
FamilyPtr make_scenario(const std::string& name);

DiffeoMap make_skew_map(double a, double b, double c);
DiffeoMap make_linear_map(const Mat& m);

bool is_skew(const MapFamily& family);

struct OracleResult {
  std::string quantity;
  double value = 0;
  std::size_t truncation = 0;  // number of series terms summed
  double error_bound = 0;      // geometric bound on the discarded tail
};

/// y-coordinate at abscissa x of the stable leaf through (x0, y0) for a
/// skew word: y = y0 - sum_k (b_0...b_k)^{-1} c_k [sin x_k - sin x'_k].
OracleResult skew_leaf_oracle(const OmegaWord& word, const Vec& base, double x, double tail_tol = 1e-12);

/// Translation along the leaves from {x = c1} to {x = c2}; the Jacobian of
/// this holonomy is identically 1.
OracleResult skew_holonomy_oracle(const OmegaWord& word, double c1, double c2, double tail_tol = 1e-12);

struct StablePairRow {
  Vec point;
  double rate = 0;   // (1/n) log |f^n x - f^n y|
  bool member = false;
  bool diverged = false;
};

/// Exhaustive forward classification of grid points y against x.
std::vector<StablePairRow> brute_force_stable_pairs(const OmegaWord& word, const Vec& x,
                                                    const std::vector<Vec>& grid, std::size_t horizon,
                                                    double margin = 1e-3);

/// Orbit of the difference f^j(x + v) - f^j(x) evaluated without cancellation.
std::vector<Vec> difference_orbit(const OmegaWord& word, const Vec& x, const Vec& v, std::size_t n);

}  // namespace pesin
