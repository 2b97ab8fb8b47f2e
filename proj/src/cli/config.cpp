#include "pesin/cli/config.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pesin::cli {

namespace {

[[noreturn]] void config_error(const YAML::Node& node, const std::string& field, const std::string& what) {
  std::ostringstream os;
  os << "config error";
  if (node.Mark().line >= 0) os << " at line " << node.Mark().line + 1;
  os << ", field '" << field << "': " << what;
  fail(ErrorKind::Config, os.str());
}

void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.IsMap()) config_error(node, path, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) config_error(kv.first, path.empty() ? key : path + "." + key, "unknown key");
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    config_error(node, field, "wrong type");
  }
}

double number_or_auto(const YAML::Node& node, const std::string& field) {
  if (node.IsScalar() && node.Scalar() == "auto") return kAuto;
  return scalar<double>(node, field);
}

Vec vec(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) config_error(node, field, "expected a list of numbers");
  Vec v(static_cast<Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) v(static_cast<Index>(i)) = scalar<double>(node[i], field);
  return v;
}

GridSpec grid(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"points", "lo", "hi", "n"});
  GridSpec g;
  if (node["points"]) {
    for (const auto& p : node["points"]) g.points.push_back(vec(p, path + ".points"));
  }
  if (node["lo"]) g.lo = vec(node["lo"], path + ".lo");
  if (node["hi"]) g.hi = vec(node["hi"], path + ".hi");
  if (node["n"]) {
    for (const auto& c : node["n"]) g.n.push_back(scalar<int>(c, path + ".n"));
  }
  if (g.points.empty()) {
    if (g.lo.size() == 0 || g.lo.size() != g.hi.size() || g.n.size() != static_cast<std::size_t>(g.lo.size())) {
      config_error(node, path, "give either points or lo, hi and n of equal length");
    }
    for (int c : g.n) {
      if (c < 1) config_error(node, path + ".n", "counts must be positive");
    }
  }
  return g;
}

TransversalSpec transversal(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"base", "direction", "tilt", "tilt_direction", "q"});
  TransversalSpec t;
  if (node["base"]) t.base = vec(node["base"], path + ".base");
  if (node["direction"]) t.direction = vec(node["direction"], path + ".direction");
  if (node["tilt"]) t.tilt = scalar<double>(node["tilt"], path + ".tilt");
  if (node["tilt_direction"]) t.tilt_direction = vec(node["tilt_direction"], path + ".tilt_direction");
  if (node["q"]) t.q = scalar<double>(node["q"], path + ".q");
  if (!(t.q > 0)) config_error(node, path + ".q", "must be positive");
  return t;
}

void fill_transversal_defaults(TransversalSpec& t, int d, double shift) {
  if (t.base.size() == 0) {
    t.base = Vec::Zero(d);
    t.base(0) = shift;
  }
  if (t.direction.size() == 0) t.direction = Vec::Unit(d, d - 1);
  if (t.tilt_direction.size() == 0) t.tilt_direction = Vec::Unit(d, 0);
}

void check_dim(const Vec& v, int d, const std::string& field) {
  if (v.size() != d) {
    fail(ErrorKind::Config, "config error, field '" + field + "': expected " + std::to_string(d) + " coordinates");
  }
}

}  // namespace

std::vector<Vec> GridSpec::expand() const {
  if (!points.empty()) return points;
  std::vector<Vec> out;
  const Index d = lo.size();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (;;) {
    Vec p(d);
    for (Index i = 0; i < d; ++i) {
      const int c = n[static_cast<std::size_t>(i)];
      p(i) = c == 1 ? lo(i) : lo(i) + (hi(i) - lo(i)) * idx[static_cast<std::size_t>(i)] / (c - 1);
    }
    out.push_back(p);
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == n[i]) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  return out;
}

int ExperimentConfig::dim() const {
  if (scenario.name == "identity") return scenario.dim;
  if (scenario.name == "linear") return static_cast<int>(scenario.matrix.rows());
  return 2;
}

PesinParams ExperimentConfig::pesin_params() const {
  PesinParams p;
  p.a = pesin.a;
  p.b = pesin.b;
  p.k = pesin.k;
  p.eps = std::isnan(pesin.eps) ? epsilon_ceiling(pesin.a, pesin.b, dim()) : pesin.eps;
  p.l_prime = pesin.l_prime;
  p.r_prime = pesin.r_prime;
  p.c_prime = pesin.c_prime;
  return p;
}

std::vector<std::uint64_t> ExperimentConfig::seed_list() const {
  return seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds;
}

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::Config, "config error in " + source + ": " + e.what());
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) fail(ErrorKind::Config, "config error in " + source + ": empty document");
  check_keys(root, "", {"scenario", "seed", "seeds", "pesin", "spectrum", "pesin_grid", "manifold", "holonomy", "output"});
  if (!root["scenario"]) config_error(root, "scenario", "missing section");

  const YAML::Node sc = root["scenario"];
  check_keys(sc, "scenario", {"name", "params", "dim", "matrix"});
  if (!sc["name"]) config_error(sc, "scenario.name", "missing");
  c.scenario.name = scalar<std::string>(sc["name"], "scenario.name");
  if (sc["params"]) {
    if (!sc["params"].IsMap()) config_error(sc["params"], "scenario.params", "expected a mapping");
    for (const auto& kv : sc["params"]) {
      c.scenario.params[kv.first.as<std::string>()] = scalar<double>(kv.second, "scenario.params");
    }
  }
  if (sc["dim"]) c.scenario.dim = scalar<int>(sc["dim"], "scenario.dim");
  if (sc["matrix"]) {
    const YAML::Node m = sc["matrix"];
    if (!m.IsSequence() || m.size() == 0) config_error(m, "scenario.matrix", "expected a list of rows");
    const auto rows = static_cast<Index>(m.size());
    c.scenario.matrix = Mat(rows, rows);
    for (Index i = 0; i < rows; ++i) {
      const Vec row = vec(m[static_cast<std::size_t>(i)], "scenario.matrix");
      if (row.size() != rows) config_error(m, "scenario.matrix", "matrix must be square");
      c.scenario.matrix.row(i) = row.transpose();
    }
  }
  try {
    make_scenario(c.scenario);
  } catch (const Error& e) {
    config_error(sc, "scenario", e.what());
  }

  if (root["seed"]) c.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["seeds"]) {
    for (const auto& s : root["seeds"]) c.seeds.push_back(scalar<std::uint64_t>(s, "seeds"));
  }
  const int d = c.dim();

  if (const YAML::Node p = root["pesin"]) {
    check_keys(p, "pesin", {"a", "b", "k", "eps", "l_prime", "r_prime", "c_prime"});
    if (p["a"]) c.pesin.a = scalar<double>(p["a"], "pesin.a");
    if (p["b"]) c.pesin.b = scalar<double>(p["b"], "pesin.b");
    if (p["k"]) c.pesin.k = scalar<int>(p["k"], "pesin.k");
    if (p["eps"]) c.pesin.eps = number_or_auto(p["eps"], "pesin.eps");
    if (p["l_prime"]) c.pesin.l_prime = scalar<double>(p["l_prime"], "pesin.l_prime");
    if (p["r_prime"]) c.pesin.r_prime = scalar<double>(p["r_prime"], "pesin.r_prime");
    if (p["c_prime"]) c.pesin.c_prime = scalar<double>(p["c_prime"], "pesin.c_prime");
    try {
      c.pesin_params().validate(d);
    } catch (const Error& e) {
      config_error(p, "pesin", e.what());
    }
  }

  if (const YAML::Node s = root["spectrum"]) {
    check_keys(s, "spectrum", {"horizon", "stride", "record_every", "point"});
    if (s["horizon"]) c.spectrum.horizon = scalar<std::size_t>(s["horizon"], "spectrum.horizon");
    if (s["stride"]) c.spectrum.stride = scalar<std::size_t>(s["stride"], "spectrum.stride");
    if (s["record_every"]) c.spectrum.record_every = scalar<std::size_t>(s["record_every"], "spectrum.record_every");
    if (s["point"]) c.spectrum.point = vec(s["point"], "spectrum.point");
    if (c.spectrum.horizon < 1 || c.spectrum.stride < 1) config_error(s, "spectrum", "horizon and stride must be >= 1");
  }
  if (c.spectrum.point.size() == 0) c.spectrum.point = Vec::Zero(d);
  check_dim(c.spectrum.point, d, "spectrum.point");

  if (const YAML::Node s = root["pesin_grid"]) {
    check_keys(s, "pesin_grid", {"horizon", "r_samples", "grid"});
    if (s["horizon"]) c.pesin_grid.horizon = scalar<std::size_t>(s["horizon"], "pesin_grid.horizon");
    if (s["r_samples"]) c.pesin_grid.r_samples = scalar<int>(s["r_samples"], "pesin_grid.r_samples");
    if (s["grid"]) c.pesin_grid.grid = grid(s["grid"], "pesin_grid.grid");
  }
  if (c.pesin_grid.grid.points.empty() && c.pesin_grid.grid.lo.size() == 0) c.pesin_grid.grid.points = {Vec::Zero(d)};
  for (const Vec& p : c.pesin_grid.grid.expand()) check_dim(p, d, "pesin_grid.grid");

  if (const YAML::Node s = root["manifold"]) {
    check_keys(s, "manifold", {"grid", "radius", "nodes", "degree", "samples", "transform"});
    if (s["grid"]) c.manifold.grid = grid(s["grid"], "manifold.grid");
    if (s["radius"]) c.manifold.radius = scalar<double>(s["radius"], "manifold.radius");
    if (s["nodes"]) c.manifold.nodes = scalar<int>(s["nodes"], "manifold.nodes");
    if (s["degree"]) c.manifold.degree = scalar<int>(s["degree"], "manifold.degree");
    if (s["samples"]) c.manifold.samples = scalar<std::size_t>(s["samples"], "manifold.samples");
    if (const YAML::Node t = s["transform"]) {
      check_keys(t, "manifold.transform", {"enabled", "C", "q", "delta0", "steps", "allow_large_q", "nodes", "degree", "psi"});
      auto& tr = c.manifold.transform;
      if (t["enabled"]) tr.enabled = scalar<bool>(t["enabled"], "manifold.transform.enabled");
      if (t["C"]) tr.C = scalar<double>(t["C"], "manifold.transform.C");
      if (t["q"]) tr.q = number_or_auto(t["q"], "manifold.transform.q");
      if (t["delta0"]) tr.delta0 = number_or_auto(t["delta0"], "manifold.transform.delta0");
      if (t["steps"]) tr.steps = scalar<std::size_t>(t["steps"], "manifold.transform.steps");
      if (t["allow_large_q"]) tr.allow_large_q = scalar<bool>(t["allow_large_q"], "manifold.transform.allow_large_q");
      if (t["nodes"]) tr.nodes = scalar<int>(t["nodes"], "manifold.transform.nodes");
      if (t["degree"]) tr.degree = scalar<int>(t["degree"], "manifold.transform.degree");
      if (const YAML::Node ps = t["psi"]) {
        check_keys(ps, "manifold.transform.psi", {"type", "amplitude", "slope", "value"});
        if (ps["type"]) tr.psi.type = scalar<std::string>(ps["type"], "manifold.transform.psi.type");
        if (ps["amplitude"]) tr.psi.amplitude = scalar<double>(ps["amplitude"], "manifold.transform.psi.amplitude");
        if (ps["slope"]) tr.psi.slope = scalar<double>(ps["slope"], "manifold.transform.psi.slope");
        if (ps["value"]) tr.psi.value = scalar<double>(ps["value"], "manifold.transform.psi.value");
        if (tr.psi.type != "tanh" && tr.psi.type != "linear" && tr.psi.type != "constant") {
          config_error(ps["type"], "manifold.transform.psi.type", "expected tanh, linear or constant");
        }
      }
    }
    if (!(c.manifold.radius > 0)) config_error(s, "manifold.radius", "must be positive");
  }
  if (c.manifold.grid.points.empty() && c.manifold.grid.lo.size() == 0) c.manifold.grid.points = {Vec::Zero(d)};
  for (const Vec& p : c.manifold.grid.expand()) check_dim(p, d, "manifold.grid");

  if (const YAML::Node h = root["holonomy"]) {
    check_keys(h, "holonomy", {"w1", "w2", "lo", "hi", "n", "depth", "radii", "act_c", "eps_c", "tilts"});
    if (h["w1"]) c.holonomy.w1 = transversal(h["w1"], "holonomy.w1");
    if (h["w2"]) c.holonomy.w2 = transversal(h["w2"], "holonomy.w2");
    if (h["lo"]) c.holonomy.lo = scalar<double>(h["lo"], "holonomy.lo");
    if (h["hi"]) c.holonomy.hi = scalar<double>(h["hi"], "holonomy.hi");
    if (h["n"]) c.holonomy.n = scalar<int>(h["n"], "holonomy.n");
    if (h["depth"]) c.holonomy.depth = scalar<std::size_t>(h["depth"], "holonomy.depth");
    if (h["radii"]) {
      c.holonomy.radii.clear();
      for (const auto& r : h["radii"]) c.holonomy.radii.push_back(scalar<double>(r, "holonomy.radii"));
      if (c.holonomy.radii.size() < 2) config_error(h["radii"], "holonomy.radii", "need at least two radii");
    }
    if (h["act_c"]) c.holonomy.act_c = scalar<double>(h["act_c"], "holonomy.act_c");
    if (h["eps_c"]) c.holonomy.eps_c = scalar<double>(h["eps_c"], "holonomy.eps_c");
    if (h["tilts"]) {
      for (const auto& t : h["tilts"]) c.holonomy.tilts.push_back(scalar<double>(t, "holonomy.tilts"));
    }
    if (c.holonomy.n < 1) config_error(h, "holonomy.n", "must be positive");
  }
  fill_transversal_defaults(c.holonomy.w1, d, 0.0);
  fill_transversal_defaults(c.holonomy.w2, d, 0.4);
  for (const auto* t : {&c.holonomy.w1, &c.holonomy.w2}) {
    check_dim(t->base, d, "holonomy transversal base");
    check_dim(t->direction, d, "holonomy transversal direction");
    check_dim(t->tilt_direction, d, "holonomy transversal tilt_direction");
  }

  if (const YAML::Node o = root["output"]) {
    check_keys(o, "output", {"dir"});
    if (o["dir"]) c.output_dir = scalar<std::string>(o["dir"], "output.dir");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "config error: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "auto";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string list(const Vec& v) {
  std::string s = "[";
  for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v(i));
  return s + "]";
}

std::string list(const std::vector<double>& v) {
  return list(Vec(Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()))));
}

void emit_grid(std::ostringstream& os, const GridSpec& g, const std::string& indent) {
  if (!g.points.empty()) {
    os << indent << "points:\n";
    for (const Vec& p : g.points) os << indent << "  - " << list(p) << "\n";
    return;
  }
  os << indent << "lo: " << list(g.lo) << "\n" << indent << "hi: " << list(g.hi) << "\n" << indent << "n: [";
  for (std::size_t i = 0; i < g.n.size(); ++i) os << (i ? ", " : "") << g.n[i];
  os << "]\n";
}

void emit_transversal(std::ostringstream& os, const TransversalSpec& t) {
  os << "    base: " << list(t.base) << "\n    direction: " << list(t.direction) << "\n    tilt: " << num(t.tilt)
     << "\n    tilt_direction: " << list(t.tilt_direction) << "\n    q: " << num(t.q) << "\n";
}

}  // namespace

std::string emit_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "scenario:\n  name: " << c.scenario.name << "\n  dim: " << c.scenario.dim << "\n";
  if (!c.scenario.params.empty()) {
    os << "  params:\n";
    for (const auto& [k, v] : c.scenario.params) os << "    " << k << ": " << num(v) << "\n";
  }
  if (c.scenario.matrix.size() > 0) {
    os << "  matrix:\n";
    for (Index i = 0; i < c.scenario.matrix.rows(); ++i) os << "    - " << list(Vec(c.scenario.matrix.row(i).transpose())) << "\n";
  }
  os << "seed: " << c.seed << "\n";
  if (!c.seeds.empty()) {
    os << "seeds: [";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? ", " : "") << c.seeds[i];
    os << "]\n";
  }
  const auto& p = c.pesin;
  os << "pesin:\n  a: " << num(p.a) << "\n  b: " << num(p.b) << "\n  k: " << p.k << "\n  eps: " << num(p.eps)
     << "\n  l_prime: " << num(p.l_prime) << "\n  r_prime: " << num(p.r_prime) << "\n  c_prime: " << num(p.c_prime)
     << "\n";
  os << "spectrum:\n  horizon: " << c.spectrum.horizon << "\n  stride: " << c.spectrum.stride
     << "\n  record_every: " << c.spectrum.record_every << "\n  point: " << list(c.spectrum.point) << "\n";
  os << "pesin_grid:\n  horizon: " << c.pesin_grid.horizon << "\n  r_samples: " << c.pesin_grid.r_samples
     << "\n  grid:\n";
  emit_grid(os, c.pesin_grid.grid, "    ");
  const auto& m = c.manifold;
  os << "manifold:\n  grid:\n";
  emit_grid(os, m.grid, "    ");
  os << "  radius: " << num(m.radius) << "\n  nodes: " << m.nodes << "\n  degree: " << m.degree
     << "\n  samples: " << m.samples << "\n";
  const auto& t = m.transform;
  os << "  transform:\n    enabled: " << (t.enabled ? "true" : "false") << "\n    C: " << num(t.C)
     << "\n    q: " << num(t.q) << "\n    delta0: " << num(t.delta0) << "\n    steps: " << t.steps
     << "\n    allow_large_q: " << (t.allow_large_q ? "true" : "false") << "\n    nodes: " << t.nodes
     << "\n    degree: " << t.degree << "\n    psi:\n      type: " << t.psi.type
     << "\n      amplitude: " << num(t.psi.amplitude) << "\n      slope: " << num(t.psi.slope)
     << "\n      value: " << num(t.psi.value) << "\n";
  const auto& h = c.holonomy;
  os << "holonomy:\n  w1:\n";
  emit_transversal(os, h.w1);
  os << "  w2:\n";
  emit_transversal(os, h.w2);
  os << "  lo: " << num(h.lo) << "\n  hi: " << num(h.hi) << "\n  n: " << h.n << "\n  depth: " << h.depth
     << "\n  radii: " << list(h.radii) << "\n  act_c: " << num(h.act_c) << "\n  eps_c: " << num(h.eps_c) << "\n";
  if (!h.tilts.empty()) os << "  tilts: " << list(h.tilts) << "\n";
  os << "output:\n  dir: \"" << c.output_dir << "\"\n";
  return os.str();
}

std::string config_hash(const ExperimentConfig& config) {
  // Where results are written is not part of the experiment.
  ExperimentConfig c = config;
  c.output_dir.clear();
  const std::string text = emit_config(c);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace pesin::cli
