#include "pesin/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pesin/rng.hpp"

namespace pesin {

namespace {

const std::map<std::string, std::map<std::string, double>>& defaults_table() {
  static const std::map<std::string, std::map<std::string, double>> table = {
      {"identity", {}},
      {"S1", {{"d1", 2.0}, {"d2", 0.5}}},
      {"S2", {{"a_lo", 0.3}, {"a_hi", 0.7}, {"b_lo", 1.5}, {"b_hi", 2.5}}},
      {"S3", {{"a", 0.5}, {"b", 2.0}, {"c", 1.0}}},
      {"S4", {{"a_lo", 0.4}, {"a_hi", 0.6}, {"b_lo", 1.8}, {"b_hi", 2.2}, {"c_lo", 0.5}, {"c_hi", 1.0}}},
      {"linear", {}},
      {"skew", {{"a_lo", 0.4}, {"a_hi", 0.6}, {"b_lo", 1.8}, {"b_hi", 2.2}, {"c_lo", 0.5}, {"c_hi", 1.0}}},
  };
  return table;
}

std::map<std::string, double> merged(const ScenarioSpec& spec) {
  auto p = scenario_defaults(spec.name);
  for (const auto& [k, v] : spec.params) {
    if (!p.count(k)) fail(ErrorKind::Config, "scenario '" + spec.name + "': unknown parameter '" + k + "'");
    if (!std::isfinite(v)) fail(ErrorKind::Config, "scenario '" + spec.name + "': parameter '" + k + "' not finite");
    p[k] = v;
  }
  return p;
}

double uniform_in(const CounterRng& rng, std::uint64_t index, std::uint64_t slot, double lo, double hi) {
  return std::clamp(lo + (hi - lo) * rng.uniform(index, slot), lo, hi);
}

double log_uniform_in(const CounterRng& rng, std::uint64_t index, std::uint64_t slot, double lo, double hi) {
  const double la = std::log(lo), lb = std::log(hi);
  return std::clamp(std::exp(la + (lb - la) * rng.uniform(index, slot)), lo, hi);
}

void check_range(const std::string& who, const std::string& key, double lo, double hi) {
  if (!(lo <= hi)) fail(ErrorKind::Config, "scenario '" + who + "': " + key + "_lo > " + key + "_hi");
}

void check_skew(const std::string& who, double a_lo, double a_hi, double b_lo, double b_hi) {
  if (!(a_lo > 0 && a_hi < 1 && b_lo > 1 && std::isfinite(b_hi))) {
    fail(ErrorKind::Config, "scenario '" + who + "': skew systems need 0 < a < 1 < b");
  }
}

DiffeoMap make_diag_map(const Vec& diag) {
  DiffeoMap m;
  m.params = diag;
  m.forward = [diag](const Vec& x) { return Vec(diag.cwiseProduct(x)); };
  m.inverse = [diag](const Vec& y) { return Vec(y.cwiseQuotient(diag)); };
  m.difference = [diag](const Vec&, const Vec& v) { return Vec(diag.cwiseProduct(v)); };
  m.jacobian = [diag](const Vec&) { return Mat(diag.asDiagonal()); };
  m.inverse_jacobian = [diag](const Vec&) { return Mat(diag.cwiseInverse().asDiagonal()); };
  m.second_derivative_bound = [](const Vec&, double) { return 0.0; };
  return m;
}

}  // namespace

std::map<std::string, double> scenario_defaults(const std::string& name) {
  const auto& t = defaults_table();
  const auto it = t.find(name);
  if (it == t.end()) fail(ErrorKind::Config, "unknown scenario '" + name + "'");
  return it->second;
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : defaults_table()) names.push_back(k);
  return names;
}

DiffeoMap make_skew_map(double a, double b, double c) {
  DiffeoMap m;
  m.params = Vec(3);
  m.params << a, b, c;
  m.forward = [a, b, c](const Vec& p) {
    Vec out(2);
    out << a * p(0), b * p(1) + c * std::sin(p(0));
    return out;
  };
  m.inverse = [a, b, c](const Vec& q) {
    Vec out(2);
    const double x = q(0) / a;
    out << x, (q(1) - c * std::sin(x)) / b;
    return out;
  };
  m.difference = [a, b, c](const Vec& p, const Vec& v) {
    Vec out(2);
    // sin(x + h) - sin(x) = 2 cos(x + h/2) sin(h/2)
    out << a * v(0), b * v(1) + 2 * c * std::cos(p(0) + v(0) / 2) * std::sin(v(0) / 2);
    return out;
  };
  m.jacobian = [a, b, c](const Vec& p) {
    Mat j(2, 2);
    j << a, 0, c * std::cos(p(0)), b;
    return j;
  };
  m.inverse_jacobian = [a, b, c](const Vec& q) {
    Mat j(2, 2);
    const double x = q(0) / a;
    j << 1 / a, 0, -c * std::cos(x) / (a * b), 1 / b;
    return j;
  };
  return m;
}

DiffeoMap make_linear_map(const Mat& mat) {
  Eigen::FullPivLU<Mat> lu(mat);
  if (mat.rows() != mat.cols() || !lu.isInvertible()) {
    fail(ErrorKind::Config, "linear scenario: matrix must be square and invertible");
  }
  const Mat inv = lu.inverse();
  DiffeoMap m;
  m.params = Eigen::Map<const Vec>(mat.data(), mat.size());
  m.forward = [mat](const Vec& x) { return Vec(mat * x); };
  m.inverse = [inv](const Vec& y) { return Vec(inv * y); };
  m.difference = [mat](const Vec&, const Vec& v) { return Vec(mat * v); };
  m.jacobian = [mat](const Vec&) { return mat; };
  m.inverse_jacobian = [inv](const Vec&) { return inv; };
  m.second_derivative_bound = [](const Vec&, double) { return 0.0; };
  return m;
}

FamilyPtr make_scenario(const ScenarioSpec& spec) {
  const auto p = merged(spec);
  const std::string& name = spec.name;
  if (name == "identity") {
    const int d = spec.dim;
    if (d < 1) fail(ErrorKind::Config, "identity scenario: dim must be >= 1");
    return std::make_shared<MapFamily>(
        "identity", d, "identity map on R^d", std::vector<ParameterBound>{},
        [](std::uint64_t, std::uint64_t) { return Vec(0); },
        [d](const Vec&) { return make_diag_map(Vec::Ones(d)); });
  }
  if (name == "S1") {
    const double d1 = p.at("d1"), d2 = p.at("d2");
    if (!(d1 != 0 && d2 != 0)) fail(ErrorKind::Config, "S1: diagonal entries must be non-zero");
    return std::make_shared<MapFamily>(
        "S1", 2, "constant diag(d1, d2)",
        std::vector<ParameterBound>{{"d1", d1, d1}, {"d2", d2, d2}},
        [d1, d2](std::uint64_t, std::uint64_t) {
          Vec v(2);
          v << d1, d2;
          return v;
        },
        [](const Vec& q) { return make_diag_map(q); });
  }
  if (name == "S2") {
    const double a_lo = p.at("a_lo"), a_hi = p.at("a_hi"), b_lo = p.at("b_lo"), b_hi = p.at("b_hi");
    check_range(name, "a", a_lo, a_hi);
    check_range(name, "b", b_lo, b_hi);
    if (!(a_lo > 0 && b_lo > 0)) fail(ErrorKind::Config, "S2: ranges must be positive");
    return std::make_shared<MapFamily>(
        "S2", 2, "i.i.d. diag(a, b), log-uniform a and b",
        std::vector<ParameterBound>{{"a", a_lo, a_hi}, {"b", b_lo, b_hi}},
        [=](std::uint64_t seed, std::uint64_t index) {
          const CounterRng rng(seed);
          Vec v(2);
          v << log_uniform_in(rng, index, 0, a_lo, a_hi), log_uniform_in(rng, index, 1, b_lo, b_hi);
          return v;
        },
        [](const Vec& q) { return make_diag_map(q); });
  }
  if (name == "S3") {
    const double a = p.at("a"), b = p.at("b"), c = p.at("c");
    check_skew(name, a, a, b, b);
    return std::make_shared<MapFamily>(
        "S3", 2, "skew map (a x, b y + c sin x)",
        std::vector<ParameterBound>{{"a", a, a}, {"b", b, b}, {"c", c, c}},
        [a, b, c](std::uint64_t, std::uint64_t) {
          Vec v(3);
          v << a, b, c;
          return v;
        },
        [](const Vec& q) { return make_skew_map(q(0), q(1), q(2)); });
  }
  if (name == "S4" || name == "skew") {
    const double a_lo = p.at("a_lo"), a_hi = p.at("a_hi"), b_lo = p.at("b_lo"), b_hi = p.at("b_hi");
    const double c_lo = p.at("c_lo"), c_hi = p.at("c_hi");
    check_range(name, "a", a_lo, a_hi);
    check_range(name, "b", b_lo, b_hi);
    check_range(name, "c", c_lo, c_hi);
    check_skew(name, a_lo, a_hi, b_lo, b_hi);
    return std::make_shared<MapFamily>(
        name, 2, "random skew map (a x, b y + c sin x), uniform a, b, c",
        std::vector<ParameterBound>{{"a", a_lo, a_hi}, {"b", b_lo, b_hi}, {"c", c_lo, c_hi}},
        [=](std::uint64_t seed, std::uint64_t index) {
          const CounterRng rng(seed);
          Vec v(3);
          v << uniform_in(rng, index, 0, a_lo, a_hi), uniform_in(rng, index, 1, b_lo, b_hi),
              uniform_in(rng, index, 2, c_lo, c_hi);
          return v;
        },
        [](const Vec& q) { return make_skew_map(q(0), q(1), q(2)); });
  }
  if (name == "linear") {
    const Mat m = spec.matrix;
    const DiffeoMap probe = make_linear_map(m);  // validates
    (void)probe;
    std::vector<ParameterBound> bounds;
    for (Index i = 0; i < m.size(); ++i) bounds.push_back({"m" + std::to_string(i), m.data()[i], m.data()[i]});
    return std::make_shared<MapFamily>(
        "linear", static_cast<int>(m.rows()), "constant linear map", bounds,
        [m](std::uint64_t, std::uint64_t) { return Vec(Eigen::Map<const Vec>(m.data(), m.size())); },
        [m](const Vec&) { return make_linear_map(m); });
  }
  fail(ErrorKind::Config, "unknown scenario '" + name + "'");
}

FamilyPtr make_scenario(const std::string& name) {
  ScenarioSpec s;
  s.name = name;
  return make_scenario(s);
}

bool is_skew(const MapFamily& family) {
  const auto& n = family.name();
  return n == "S3" || n == "S4" || n == "skew";
}

namespace {

struct SkewBounds {
  double a_max, b_min, c_max;
};

SkewBounds skew_bounds(const MapFamily& family) {
  if (!is_skew(family)) fail(ErrorKind::Domain, "skew oracle: family '" + family.name() + "' is not skew");
  const auto& b = family.parameter_bounds();
  return {b[0].hi, b[1].lo, b[2].hi};
}

}  // namespace

OracleResult skew_leaf_oracle(const OmegaWord& word, const Vec& base, double x, double tail_tol) {
  const SkewBounds sb = skew_bounds(word.family());
  const double rho = sb.a_max / sb.b_min;
  OracleResult out;
  out.quantity = "leaf_y";
  std::vector<double> terms;
  double xk = x, xpk = base(0), bprod = 1;
  for (std::size_t k = 0;; ++k) {
    const Vec p = word.params(k);
    bprod *= p(1);
    const double dx = xk - xpk;
    // sin(xk) - sin(xpk) without cancellation
    const double dsin = 2 * std::cos(xpk + dx / 2) * std::sin(dx / 2);
    terms.push_back(p(2) * dsin / bprod);
    xk *= p(0);
    xpk *= p(0);
    const double tail = sb.c_max * std::min(2.0, std::abs(xk - xpk)) / bprod / (1 - rho);
    if (tail < tail_tol || k > 10000) {
      out.truncation = k + 1;
      out.error_bound = tail;
      break;
    }
  }
  double s = 0;
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) s += *it;
  out.value = base(1) - s;
  return out;
}

OracleResult skew_holonomy_oracle(const OmegaWord& word, double c1, double c2, double tail_tol) {
  Vec base(2);
  base << c1, 0.0;
  OracleResult r = skew_leaf_oracle(word, base, c2, tail_tol);
  r.quantity = "holonomy_offset";
  return r;
}

std::vector<Vec> difference_orbit(const OmegaWord& word, const Vec& x, const Vec& v, std::size_t n) {
  std::vector<Vec> diffs;
  diffs.reserve(n + 1);
  diffs.push_back(v);
  Vec xj = x;
  for (std::size_t j = 0; j < n; ++j) {
    const DiffeoMap f = word.map(j);
    Vec next = f.apply_difference(xj, diffs.back());
    xj = f.apply(xj);
    if (!next.allFinite() || !xj.allFinite() || next.cwiseAbs().maxCoeff() > kOverflowGuard ||
        xj.cwiseAbs().maxCoeff() > kOverflowGuard) {
      throw OrbitDivergence(j, "difference_orbit: left the finite range after step " + std::to_string(j));
    }
    diffs.push_back(std::move(next));
  }
  return diffs;
}

std::vector<StablePairRow> brute_force_stable_pairs(const OmegaWord& word, const Vec& x,
                                                    const std::vector<Vec>& grid, std::size_t horizon,
                                                    double margin) {
  if (horizon < 1) fail(ErrorKind::Domain, "brute_force_stable_pairs: horizon must be >= 1");
  std::vector<StablePairRow> rows;
  rows.reserve(grid.size());
  for (const Vec& y : grid) {
    StablePairRow row;
    row.point = y;
    try {
      const auto diffs = difference_orbit(word, x, y - x, horizon);
      const double dn = diffs.back().norm();
      row.rate = dn > 0 ? std::log(dn) / static_cast<double>(horizon)
                        : -std::numeric_limits<double>::infinity();
      row.member = row.rate < -margin;
    } catch (const OrbitDivergence&) {
      row.diverged = true;
      row.rate = std::numeric_limits<double>::infinity();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pesin
