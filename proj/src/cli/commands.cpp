#include "pesin/cli/commands.hpp"

#include <tbb/global_control.h>
#include <tbb/parallel_for.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>

#include "pesin/appendix.hpp"
#include "pesin/graph_transform.hpp"
#include "pesin/holonomy.hpp"
#include "pesin/pesin_set.hpp"
#include "pesin/stable_manifold.hpp"

namespace pesin::cli {

namespace fs = std::filesystem;

namespace {

// Entries are generated on demand, so a long nominal length costs nothing.
constexpr std::size_t kWordLength = 10'000'000;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

OmegaWord make_word(const ExperimentConfig& c, std::uint64_t seed) {
  return sample_word(make_scenario(c.scenario), seed, kWordLength);
}

// Results land in index order; the first failure by index is rethrown so
// errors do not depend on scheduling either.
template <typename T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn) {
  std::vector<std::unique_ptr<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const tbb::blocked_range<std::size_t>& r) {
    for (std::size_t i = r.begin(); i != r.end(); ++i) {
      try {
        slots[i] = std::make_unique<T>(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<std::string> indexed(const std::string& stem, int count) {
  std::vector<std::string> names;
  for (int i = 1; i <= count; ++i) names.push_back(stem + std::to_string(i));
  return names;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

const char* color(std::size_t i) { return kColors[i % 8]; }

RunReport start(const std::string& command, const ExperimentConfig& c) {
  RunReport r;
  r.command = command;
  r.config_hash = config_hash(c);
  return r;
}

void save(RunReport& r, const CsvTable& t, const fs::path& out, const std::string& name) {
  t.write(out / name);
  r.files.push_back(name);
}

void save(RunReport& r, const SvgPlot& p, const fs::path& out, const std::string& name) {
  p.write(out / name);
  r.files.push_back(name);
}

Json json_params(const PesinParams& p) {
  return Json{{"a", p.a}, {"b", p.b}, {"k", p.k}, {"eps", p.eps},
              {"l_prime", p.l_prime}, {"r_prime", p.r_prime}, {"c_prime", p.c_prime}};
}

// Points along the curve s -> base + s direction + tilt tanh(s) tilt_direction.
Transversal build_transversal(const OmegaWord& word, const PesinParams& params, const TransversalSpec& t) {
  if (word.dim() - params.k != 1) {
    fail(ErrorKind::Config, "config error, field 'holonomy': transversal specs describe curves, so d - k must be 1");
  }
  const Vec base = t.base, dir = t.direction, td = t.tilt_direction;
  const double tilt = t.tilt;
  return make_transversal(
      word, params, [=](const Vec& s) { return Vec(base + s(0) * dir + tilt * std::tanh(s(0)) * td); },
      [=](const Vec& s) {
        const double c = std::cosh(s(0));
        return Mat(dir + tilt / (c * c) * td);
      },
      t.q);
}

bool vertical(const TransversalSpec& t) {
  return t.direction.size() == 2 && t.direction(0) == 0 && (t.tilt == 0 || t.tilt_direction(0) == 0);
}

std::vector<Vec> parameter_grid(const HolonomySection& h) {
  std::vector<Vec> grid;
  for (int i = 0; i < h.n; ++i) {
    const double s = h.n == 1 ? h.lo : h.lo + (h.hi - h.lo) * i / (h.n - 1);
    grid.push_back(Vec::Constant(1, s));
  }
  return grid;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Domain:
      return kUsage;
    case ErrorKind::Precondition:
    case ErrorKind::Transversality:
    case ErrorKind::NonUniqueness:
      return kVerifyFail;
    default:
      return kNumericFail;
  }
}

std::vector<std::string> command_names() {
  return {"spectrum", "pesin", "manifold", "holonomy", "verify-act", "report"};
}

RunReport cmd_spectrum(const ExperimentConfig& c, const fs::path& out) {
  RunReport r = start("spectrum", c);
  const auto seeds = c.seed_list();
  const int d = c.dim();
  const std::size_t every =
      c.spectrum.record_every ? c.spectrum.record_every : std::max<std::size_t>(1, c.spectrum.horizon / 100);
  const auto est = parallel_map<SpectrumEstimate>(seeds.size(), [&](std::size_t i) {
    return lyapunov_spectrum(make_word(c, seeds[i]), c.spectrum.point, c.spectrum.horizon, c.spectrum.stride, every);
  });

  CsvTable trace(concat({"seed", "n"}, indexed("rho_", d)));
  CsvTable final(concat(concat({"seed", "horizon"}, indexed("lambda_", d)), {"log_det_rate", "volume_residual"}));
  Json per_seed = Json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (const auto& [n, v] : est[i].trace) trace.add(static_cast<long long>(seeds[i])).add(n).add(v).end_row();
    final.add(static_cast<long long>(seeds[i])).add(est[i].horizon).add(est[i].exponents);
    final.add(est[i].log_det_rate).add(est[i].volume_residual).end_row();
    per_seed.push_back(Json{{"seed", seeds[i]}, {"exponents", json_vec(est[i].exponents)}});
  }
  save(r, trace, out, "spectrum.csv");
  save(r, final, out, "spectrum_final.csv");

  Vec mean = Vec::Zero(d), sq = Vec::Zero(d);
  for (const auto& e : est) mean += e.exponents;
  mean /= static_cast<double>(est.size());
  for (const auto& e : est) sq += (e.exponents - mean).cwiseAbs2();
  Json summary{{"horizon", c.spectrum.horizon}, {"point", json_vec(c.spectrum.point)}, {"seeds", per_seed},
               {"mean", json_vec(mean)}};
  if (est.size() > 1) {
    const Vec se = (sq / static_cast<double>(est.size() - 1)).cwiseSqrt() / std::sqrt(double(est.size()));
    summary["standard_error"] = json_vec(se);
  }
  r.summary = summary;

  SvgPlot plot("Running Lyapunov exponents, " + c.scenario.name + " seed " + std::to_string(seeds.front()),
               "n", "(1/n) log growth");
  for (int j = 0; j < d; ++j) {
    SvgSeries s;
    s.label = "rho_" + std::to_string(j + 1);
    s.color = color(static_cast<std::size_t>(j));
    for (const auto& [n, v] : est.front().trace) {
      s.x.push_back(static_cast<double>(n));
      s.y.push_back(v(j));
    }
    plot.add(std::move(s));
  }
  save(r, plot, out, "spectrum.svg");
  return r;
}

RunReport cmd_pesin(const ExperimentConfig& c, const fs::path& out) {
  RunReport r = start("pesin", c);
  const PesinParams params = c.pesin_params();
  const auto seeds = c.seed_list();
  const auto points = c.pesin_grid.grid.expand();
  const std::size_t per_seed = points.size();
  CertificateOptions opts;
  opts.r_samples = c.pesin_grid.r_samples;
  const std::size_t h = c.pesin_grid.horizon;

  struct Row {
    PesinCertificate cert, doubled;
  };
  const auto rows = parallel_map<Row>(seeds.size() * per_seed, [&](std::size_t i) {
    const OmegaWord word = make_word(c, seeds[i / per_seed]);
    const Vec& x = points[i % per_seed];
    auto certify = [&](std::size_t horizon) {
      try {
        return pesin_membership(word, x, params, horizon, opts);
      } catch (const OrbitDivergence& e) {
        // Off the stable set the orbit leaves the overflow guard; the point
        // is reported, not certified.
        PesinCertificate cert;
        cert.seed = word.seed();
        cert.x = x;
        cert.params = params;
        cert.horizon = horizon;
        cert.reason = std::string("diverged: ") + e.what();
        return cert;
      }
    };
    return Row{certify(h), certify(2 * h)};
  });

  const int d = c.dim();
  CsvTable t(concat(concat({"seed"}, indexed("x_", d)),
                    {"a", "b", "k", "eps", "l", "r", "C_delta", "member", "horizon", "member_2h", "reason"}));
  std::size_t members = 0, members2 = 0, diverged = 0;
  for (const Row& row : rows) {
    diverged += row.cert.reason.rfind("diverged", 0) == 0;
    const auto& ce = row.cert;
    t.add(static_cast<long long>(ce.seed)).add(ce.x).add(ce.params.a).add(ce.params.b).add(ce.params.k);
    t.add(ce.params.eps).add(ce.l_value).add(ce.r_value).add(ce.c_delta).add(ce.member).add(ce.horizon);
    t.add(row.doubled.member).add(ce.reason).end_row();
    members += ce.member;
    members2 += row.doubled.member;
  }
  save(r, t, out, "pesin.csv");
  const double n = static_cast<double>(rows.size());
  const double f1 = members / n, f2 = members2 / n;
  r.summary = Json{{"params", json_params(params)},
                   {"horizon", h},
                   {"points", rows.size()},
                   {"diverged", diverged},
                   {"membership_fraction", f1},
                   {"membership_fraction_2h", f2},
                   {"stable_under_doubling", std::abs(f1 - f2) <= 0.02}};
  return r;
}

RunReport cmd_manifold(const ExperimentConfig& c, const fs::path& out) {
  RunReport r = start("manifold", c);
  const PesinParams params = c.pesin_params();
  const OmegaWord word = make_word(c, c.seed);
  const auto points = c.manifold.grid.expand();
  const int d = c.dim();
  const bool oracle = is_skew(word.family()) && d == 2 && params.k == 1;
  StableChartOptions opts;
  opts.nodes_per_dim = c.manifold.nodes;
  opts.degree = c.manifold.degree;

  struct LeafSample {
    Vec xi, x;
    double oracle_y = kNaN, error = kNaN;
  };
  struct ChartRow {
    StableChart chart;
    std::vector<LeafSample> samples;
    double oracle_sup = kNaN;
    double geometric_mean = kNaN;
    bool contraction_holds = true;
    VolumeCheck volume;
  };
  const std::size_t ns = std::max<std::size_t>(2, c.manifold.samples);
  const auto charts = parallel_map<ChartRow>(points.size(), [&](std::size_t i) {
    ChartRow row;
    row.chart = local_stable_chart(word, points[i], c.manifold.radius, params, opts);
    const StableChart& ch = row.chart;
    for (std::size_t j = 0; j < ns; ++j) {
      LeafSample s;
      s.xi = Vec::Zero(ch.k);
      s.xi(0) = ch.radius * (-1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(ns - 1));
      s.x = ch.point(s.xi);
      if (oracle) {
        s.oracle_y = skew_leaf_oracle(word, points[i], s.x(0)).value;
        s.error = std::abs(s.x(1) - s.oracle_y);
        row.oracle_sup = std::isnan(row.oracle_sup) ? s.error : std::max(row.oracle_sup, s.error);
      }
      row.samples.push_back(std::move(s));
    }
    Vec x1 = Vec::Zero(ch.k), x2 = Vec::Zero(ch.k);
    x1(0) = -ch.radius / 2;
    x2(0) = ch.radius / 2;
    const ContractionReport cr = stable_contraction_check(ch, x1, x2, 10);
    row.geometric_mean = cr.geometric_mean;
    row.contraction_holds = cr.holds;
    row.volume = graph_volume_bound_check(ch, ch.measured_lip);
    return row;
  });

  CsvTable leaves(concat(concat({"chart"}, concat(indexed("xi_", params.k), indexed("x_", d))),
                         {"oracle_y", "oracle_error"}));
  CsvTable table(concat(concat({"chart"}, indexed("z_", d)),
                        {"radius", "n_shoot", "measured_lip", "max_leaf_residual", "oracle_sup_error",
                         "contraction_geometric_mean", "contraction_holds", "volume_lower_margin",
                         "volume_upper_margin"}));
  double worst_oracle = 0, worst_volume = std::numeric_limits<double>::infinity();
  bool contraction_ok = true;
  for (std::size_t i = 0; i < charts.size(); ++i) {
    const ChartRow& row = charts[i];
    for (const auto& s : row.samples) leaves.add(i).add(s.xi).add(s.x).add(s.oracle_y).add(s.error).end_row();
    table.add(i).add(points[i]).add(row.chart.radius).add(row.chart.n_shoot).add(row.chart.measured_lip);
    table.add(row.chart.max_leaf_residual).add(row.oracle_sup).add(row.geometric_mean).add(row.contraction_holds);
    table.add(row.volume.lower_margin).add(row.volume.upper_margin).end_row();
    if (oracle) worst_oracle = std::max(worst_oracle, row.oracle_sup);
    worst_volume = std::min({worst_volume, row.volume.lower_margin, row.volume.upper_margin});
    contraction_ok = contraction_ok && row.contraction_holds;
  }
  save(r, leaves, out, "manifold_leaves.csv");
  save(r, table, out, "manifold_charts.csv");

  if (d == 2) {
    SvgPlot plot("Local stable leaves, " + c.scenario.name, "x", "y");
    for (std::size_t i = 0; i < charts.size(); ++i) {
      SvgSeries s, o;
      s.label = i == 0 ? "computed leaf" : "";
      s.color = color(0);
      o.label = i == 0 ? "series oracle" : "";
      o.color = color(1);
      o.dashed = true;
      for (const auto& p : charts[i].samples) {
        s.x.push_back(p.x(0));
        s.y.push_back(p.x(1));
        o.x.push_back(p.x(0));
        o.y.push_back(p.oracle_y);
      }
      plot.add(std::move(s));
      if (oracle) plot.add(std::move(o));
    }
    save(r, plot, out, "manifold_leaves.svg");
  }

  Json summary{{"params", json_params(params)},
               {"charts", charts.size()},
               {"oracle", oracle},
               {"worst_volume_margin", worst_volume},
               {"contraction_holds", contraction_ok}};
  if (oracle) summary["max_oracle_error"] = worst_oracle;
  bool pass = contraction_ok && worst_volume >= -1e-8 && (!oracle || worst_oracle <= 1e-5);

  const auto& tr = c.manifold.transform;
  if (tr.enabled) {
    const Vec z = points.front();
    const OseledetsSplit split = local_splitting(word, z, params);
    const LyapunovMetric metric = build_lyapunov_metric(word, z, split, params, tr.steps + 1);
    const TransformContext ctx(word, metric);
    const QBound qb = q_admissible(params, tr.C, d);
    const double q = std::isnan(tr.q) ? qb.value : tr.q;
    const double delta0 = std::isnan(tr.delta0) ? q / 4 : tr.delta0;
    const int k = params.k;
    const PsiSpec ps = tr.psi;
    GraphFn psi = [=](const Vec& u) {
      Vec v = Vec::Zero(k);
      if (ps.type == "tanh") v(0) = ps.amplitude * q * std::tanh(u(0) / q);
      if (ps.type == "linear") v(0) = ps.slope * u(0);
      if (ps.type == "constant") v(0) = ps.value;
      return v;
    };
    GraphDerivFn dpsi = [=](const Vec& u) {
      Mat m = Mat::Zero(k, u.size());
      const double ch = std::cosh(u(0) / q);
      if (ps.type == "tanh") m(0, 0) = ps.amplitude / (ch * ch);
      if (ps.type == "linear") m(0, 0) = ps.slope;
      return m;
    };
    EvolveOptions eo;
    eo.graph.nodes_per_dim = tr.nodes;
    eo.graph.degree = tr.degree;
    eo.allow_large_q = tr.allow_large_q;
    const Vec eta0 = Vec::Zero(d - k);
    const TransversalEvolution ev = evolve_transversal(ctx, psi, dpsi, psi(eta0), eta0, delta0, tr.C, q, tr.steps, eo);

    CsvTable ledger({"n", "sup_psi", "bound_psi", "sup_dpsi", "bound_dpsi", "invariance_residual", "violation",
                     "volume_lower_margin", "volume_upper_margin"});
    double worst_inv = 0, worst_gvol = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ev.ledger.size(); ++i) {
      const LedgerRow& row = ev.ledger[i];
      const VolumeCheck v = graph_volume_bound_check(ev.charts[i], ev.charts[i].sup_derivative);
      ledger.add(row.n).add(row.sup_psi).add(row.bound_psi).add(row.sup_dpsi).add(row.bound_dpsi);
      ledger.add(row.invariance_residual).add(row.violation).add(v.lower_margin).add(v.upper_margin).end_row();
      worst_inv = std::max(worst_inv, row.invariance_residual);
      worst_gvol = std::min({worst_gvol, v.lower_margin, v.upper_margin});
    }
    save(r, ledger, out, "manifold_ledger.csv");

    SvgPlot plot("Graph transform ledger, " + c.scenario.name, "n", "sup norm (Lyapunov)");
    plot.set_log_y(true);
    SvgSeries a{"sup |psi_n|'", {}, {}, color(0), false, true}, ab{"bound", {}, {}, color(0), true, false};
    SvgSeries b{"sup |D psi_n|'", {}, {}, color(1), false, true}, bb{"bound", {}, {}, color(1), true, false};
    for (const auto& row : ev.ledger) {
      const double n = static_cast<double>(row.n);
      a.x.push_back(n), a.y.push_back(row.sup_psi), ab.x.push_back(n), ab.y.push_back(row.bound_psi);
      b.x.push_back(n), b.y.push_back(row.sup_dpsi), bb.x.push_back(n), bb.y.push_back(row.bound_dpsi);
    }
    plot.add(a), plot.add(ab), plot.add(b), plot.add(bb);
    save(r, plot, out, "manifold_ledger.svg");

    summary["transform"] = Json{{"q", q},
                                {"q_bound", qb.value},
                                {"q_bound_terms", qb.describe()},
                                {"delta0", delta0},
                                {"C", tr.C},
                                {"steps", tr.steps},
                                {"within_bounds", ev.all_within_bounds},
                                {"max_invariance_residual", worst_inv},
                                {"worst_volume_margin", worst_gvol}};
    pass = pass && ev.all_within_bounds && worst_inv < 1e-8 && worst_gvol >= -1e-8;
  }
  r.summary = summary;
  r.pass = pass;
  r.exit_code = pass ? kPass : kVerifyFail;
  return r;
}

namespace {

struct HolonomySetup {
  OmegaWord word;
  PesinParams params;
  std::unique_ptr<PoincareHandle> handle;
  bool oracle = false;
  double oracle_offset = kNaN;
};

HolonomySetup holonomy_setup(const ExperimentConfig& c, const TransversalSpec& w1) {
  HolonomySetup s;
  s.word = make_word(c, c.seed);
  s.params = c.pesin_params();
  const auto& h = c.holonomy;
  HolonomyOptions ho;
  ho.eps_c = h.eps_c;
  s.handle = std::make_unique<PoincareHandle>(s.word, s.params, build_transversal(s.word, s.params, w1),
                                              build_transversal(s.word, s.params, h.w2), ho);
  s.oracle = is_skew(s.word.family()) && vertical(w1) && vertical(h.w2);
  if (s.oracle) s.oracle_offset = skew_holonomy_oracle(s.word, w1.base(0), h.w2.base(0)).value;
  return s;
}

}  // namespace

RunReport cmd_holonomy(const ExperimentConfig& c, const fs::path& out) {
  RunReport r = start("holonomy", c);
  const HolonomySetup hs = holonomy_setup(c, c.holonomy.w1);
  const PoincareHandle& handle = *hs.handle;
  const PoincareHandle back = handle.reversed();
  const auto grid = parameter_grid(c.holonomy);
  const int d = c.dim();

  struct Row {
    Vec y, p;
    PoincareRecord rec;
    double involution = 0, offset = kNaN, error = kNaN;
  };
  const auto rows = parallel_map<Row>(grid.size(), [&](std::size_t i) {
    Row row;
    row.rec = handle.map(grid[i]);
    row.y = handle.source().point(grid[i]);
    row.p = handle.target().point(row.rec.s2);
    row.involution = (back.map(row.rec.s2).s2 - grid[i]).norm();
    if (hs.oracle) {
      row.offset = row.p(1) - row.y(1);
      row.error = std::abs(row.offset - hs.oracle_offset);
    }
    return row;
  });

  CsvTable t(concat(concat(concat({"s1"}, indexed("y_", d)), concat({"s2"}, indexed("p_", d))),
                    {"leaf_residual", "horizon", "involution_error", "offset", "oracle_offset", "oracle_error"}));
  double worst = 0, worst_inv = 0;
  SvgSeries curve{"P(s1)", {}, {}, color(0), false, true};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    t.add(grid[i]).add(row.y).add(row.rec.s2).add(row.p).add(row.rec.leaf_residual).add(row.rec.horizon);
    t.add(row.involution).add(row.offset).add(hs.oracle_offset).add(row.error).end_row();
    if (hs.oracle) worst = std::max(worst, row.error);
    worst_inv = std::max(worst_inv, row.involution);
    curve.x.push_back(grid[i](0));
    curve.y.push_back(row.rec.s2(0));
  }
  save(r, t, out, "holonomy.csv");
  SvgPlot plot("Poincare map along stable leaves, " + c.scenario.name, "s1 on W1", "s2 on W2");
  plot.add(std::move(curve));
  save(r, plot, out, "holonomy.svg");

  Json summary{{"params", json_params(hs.params)},
               {"w1_norm", handle.source().norm},
               {"w2_norm", handle.target().norm},
               {"n_shoot", handle.n_shoot()},
               {"points", rows.size()},
               {"max_involution_error", worst_inv},
               {"oracle", hs.oracle}};
  if (hs.oracle) {
    summary["oracle_offset"] = hs.oracle_offset;
    summary["max_oracle_error"] = worst;
  }
  r.summary = summary;
  r.pass = !hs.oracle || worst <= 1e-6;
  r.exit_code = r.pass ? kPass : kVerifyFail;
  return r;
}

namespace {

ActReport act_rows(const ExperimentConfig& c, const PoincareHandle& handle, const std::vector<Vec>& grid) {
  auto rows = parallel_map<JacobianEstimate>(grid.size(), [&](std::size_t i) {
    return estimate_jacobian(handle, grid[i], c.holonomy.depth, c.holonomy.radii);
  });
  return summarize_act(std::move(rows), c.holonomy.act_c);
}

}  // namespace

RunReport cmd_verify_act(const ExperimentConfig& c, const fs::path& out) {
  RunReport r = start("verify-act", c);
  const HolonomySetup hs = holonomy_setup(c, c.holonomy.w1);
  const auto grid = parameter_grid(c.holonomy);
  const int d = c.dim();
  const ActReport rep = act_rows(c, *hs.handle, grid);

  CsvTable t(concat(concat({"s"}, indexed("y_", d)),
                    {"J_det", "J_ratio", "discrepancy", "quadrature_error", "h_min", "det_converged", "skipped",
                     "pass", "reason"}));
  SvgSeries jd{"J (determinant product)", {}, {}, color(0), false, true};
  SvgSeries jr{"J (measure ratio)", {}, {}, color(1), true, true};
  double worst_disc = 0;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const JacobianEstimate& row = rep.rows[i];
    const bool ok = !row.skipped && std::abs(row.value_det - 1) <= rep.act_c && std::abs(row.value_ratio - 1) <= rep.act_c;
    const Vec y = row.point.size() ? row.point : hs.handle->source().point(grid[i]);
    t.add(grid[i]).add(y).add(row.value_det).add(row.value_ratio).add(row.discrepancy).add(row.quadrature_error);
    t.add(row.h_min).add(row.det_converged).add(row.skipped).add(ok).add(row.reason).end_row();
    if (!row.skipped) {
      worst_disc = std::max(worst_disc, row.discrepancy);
      jd.x.push_back(grid[i](0)), jd.y.push_back(row.value_det);
      jr.x.push_back(grid[i](0)), jr.y.push_back(row.value_ratio);
    }
  }
  save(r, t, out, "verify_act.csv");

  SvgPlot plot("Holonomy Jacobian, " + c.scenario.name, "s on W1", "J");
  plot.add(std::move(jd));
  plot.add(std::move(jr));
  plot.hline(1 + rep.act_c, "#888888", "1 +/- act_C");
  plot.hline(1 - rep.act_c, "#888888", "");
  save(r, plot, out, "verify_act.svg");

  Json summary{{"params", json_params(hs.params)},
               {"act_c", rep.act_c},
               {"max_deviation", rep.max_deviation},
               {"max_discrepancy", worst_disc},
               {"skipped", rep.skipped},
               {"points", rep.rows.size()},
               {"pass", rep.pass}};

  if (!c.holonomy.tilts.empty()) {
    CsvTable sweep({"tilt", "max_deviation", "max_discrepancy", "skipped", "pass"});
    std::vector<std::pair<double, double>> dev;
    SvgSeries s{"max |J - 1|", {}, {}, color(0), false, true};
    for (double tilt : c.holonomy.tilts) {
      TransversalSpec w1 = c.holonomy.w1;
      w1.tilt = tilt;
      const HolonomySetup ts = holonomy_setup(c, w1);
      const ActReport tr = act_rows(c, *ts.handle, grid);
      double disc = 0;
      for (const auto& row : tr.rows) {
        if (!row.skipped) disc = std::max(disc, row.discrepancy);
      }
      sweep.add(tilt).add(tr.max_deviation).add(disc).add(tr.skipped).add(tr.pass).end_row();
      dev.push_back({std::abs(tilt), tr.max_deviation});
      s.x.push_back(tilt);
      s.y.push_back(tr.max_deviation);
    }
    save(r, sweep, out, "verify_act_tilts.csv");
    std::stable_sort(dev.begin(), dev.end());
    bool monotone = true;
    for (std::size_t i = 1; i < dev.size(); ++i) monotone = monotone && dev[i].second >= dev[i - 1].second;
    summary["tilt_sweep_monotone"] = monotone;
    SvgPlot sp("Jacobian deviation against tilt, " + c.scenario.name, "tilt", "max |J - 1|");
    sp.add(std::move(s));
    save(r, sp, out, "verify_act_tilts.svg");
  }
  r.summary = summary;
  r.pass = rep.pass;
  r.exit_code = rep.pass ? kPass : kVerifyFail;
  return r;
}

RunReport cmd_report(const ExperimentConfig& c, const fs::path& out) {
  RunReport r = start("report", c);
  std::vector<fs::path> found;
  if (fs::is_directory(out)) {
    for (const auto& e : fs::directory_iterator(out)) {
      const std::string name = e.path().filename().string();
      if (e.path().extension() == ".json" && name.find(".timing") == std::string::npos && name != "report.json") {
        found.push_back(e.path());
      }
    }
  }
  std::sort(found.begin(), found.end());
  if (found.empty()) fail(ErrorKind::Config, "report: no run summaries in " + out.string());
  Json runs = Json::array();
  std::ostringstream md;
  md << "| command | config hash | pass | exit code |\n|---|---|---|---|\n";
  bool all = true;
  for (const auto& p : found) {
    std::ifstream f(p);
    Json j;
    try {
      j = Json::parse(f);
    } catch (const std::exception& e) {
      fail(ErrorKind::Config, "report: cannot parse " + p.string() + ": " + e.what());
    }
    const bool pass = j.value("pass", false);
    all = all && pass;
    runs.push_back(Json{{"file", p.filename().string()},
                        {"command", j.value("command", "")},
                        {"config_hash", j.value("config_hash", "")},
                        {"pass", pass},
                        {"exit_code", j.value("exit_code", -1)}});
    md << "| " << j.value("command", "") << " | " << j.value("config_hash", "").substr(0, 12) << " | "
       << (pass ? "yes" : "no") << " | " << j.value("exit_code", -1) << " |\n";
  }
  std::ofstream(out / "report.md", std::ios::binary) << md.str();
  r.files.push_back("report.md");
  r.summary = Json{{"runs", runs}, {"all_pass", all}};
  r.pass = all;
  r.exit_code = all ? kPass : kVerifyFail;
  return r;
}

int run_command(const std::string& command, const RunOptions& options, std::ostream& log, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ExperimentConfig c;
    if (!options.config_path.empty()) {
      c = load_config(options.config_path);
    } else if (command != "report") {
      fail(ErrorKind::Config, "missing --config");
    }
    if (options.seed) {
      c.seed = *options.seed;
      c.seeds.clear();
    }
    if (options.out) c.output_dir = *options.out;
    const fs::path out = c.output_dir;
    fs::create_directories(out);

    std::unique_ptr<tbb::global_control> gc;
    if (options.threads > 0) {
      gc = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                 static_cast<std::size_t>(options.threads));
    }

    RunReport r;
    if (command == "spectrum") {
      r = cmd_spectrum(c, out);
    } else if (command == "pesin") {
      r = cmd_pesin(c, out);
    } else if (command == "manifold") {
      r = cmd_manifold(c, out);
    } else if (command == "holonomy") {
      r = cmd_holonomy(c, out);
    } else if (command == "verify-act") {
      r = cmd_verify_act(c, out);
    } else if (command == "report") {
      r = cmd_report(c, out);
    } else {
      fail(ErrorKind::Config, "unknown command '" + command + "'");
    }
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string stem = command == "verify-act" ? "verify_act" : command;
    if (command != "report") {
      std::ofstream(out / (stem + ".config.yaml"), std::ios::binary) << emit_config(c);
      r.files.push_back(stem + ".config.yaml");
    }
    Json top{{"command", r.command},
             {"config_hash", r.config_hash},
             {"scenario", c.scenario.name},
             {"seed", c.seed},
             {"pass", r.pass},
             {"exit_code", r.exit_code},
             {"files", r.files},
             {"results", r.summary}};
    write_json(out / (stem + ".json"), top);
    write_json(out / (stem + ".timing.json"), Json{{"command", r.command}, {"wall_time_s", r.wall_time}});

    log << r.command << ": " << (r.pass ? "pass" : "fail") << " (exit " << r.exit_code << ", config "
        << r.config_hash.substr(0, 12) << ", wall time " << r.wall_time << " s)\n";
    for (const auto& f : r.files) log << "  wrote " << (out / f).string() << "\n";
    return r.exit_code;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericFail;
  }
}

}  // namespace pesin::cli
