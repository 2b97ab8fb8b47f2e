#include "pesin/rds.hpp"

#include <boost/random/sobol.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pesin/linalg.hpp"

namespace pesin {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::OrbitDivergence: return "orbit-divergence";
    case ErrorKind::SingularCocycle: return "singular-cocycle";
    case ErrorKind::GapViolation: return "gap-violation";
    case ErrorKind::ChartDomain: return "chart-domain";
    case ErrorKind::StepFailure: return "step-failure";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Transversality: return "transversality";
    case ErrorKind::NonUniqueness: return "non-uniqueness";
  }
  return "unknown";
}

Mat finite_difference_jacobian(const DiffeoMap::VecFn& f, const Vec& x) {
  const Index d = x.size();
  const double h = 1e-6 * std::max(1.0, x.norm());
  Mat jac(d, d);
  Vec xp = x, xm = x;
  for (Index j = 0; j < d; ++j) {
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    jac.col(j) = (f(xp) - f(xm)) / (2 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return jac;
}

Mat DiffeoMap::jacobian_at(const Vec& x) const {
  if (jacobian) return jacobian(x);
  return finite_difference_jacobian(forward, x);
}

Mat DiffeoMap::inverse_jacobian_at(const Vec& y) const {
  if (inverse_jacobian) return inverse_jacobian(y);
  if (jacobian) {
    const Mat j = jacobian(inverse(y));
    Eigen::FullPivLU<Mat> lu(j);
    if (!lu.isInvertible()) fail(ErrorKind::SingularCocycle, "inverse_jacobian_at: singular Jacobian");
    return lu.inverse();
  }
  return finite_difference_jacobian(inverse, y);
}

MapFamily::MapFamily(std::string name, int dim, std::string description,
                     std::vector<ParameterBound> bounds, Sampler sampler, Builder builder)
    : name_(std::move(name)),
      dim_(dim),
      description_(std::move(description)),
      bounds_(std::move(bounds)),
      sampler_(std::move(sampler)),
      builder_(std::move(builder)) {
  if (dim_ < 1) fail(ErrorKind::Config, "map family '" + name_ + "': dimension must be >= 1");
}

Vec MapFamily::sample_params(std::uint64_t seed, std::uint64_t index) const {
  Vec p = sampler_(seed, index);
  if (static_cast<std::size_t>(p.size()) != bounds_.size()) {
    fail(ErrorKind::Config, "map family '" + name_ + "': sampler returned " + std::to_string(p.size()) +
                                " parameters, " + std::to_string(bounds_.size()) + " declared");
  }
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const auto& b = bounds_[i];
    if (!(p(i) >= b.lo && p(i) <= b.hi)) {
      std::ostringstream os;
      os.precision(17);
      os << "map family '" << name_ << "': parameter " << b.name << " = " << p(i) << " outside [" << b.lo
         << ", " << b.hi << "]";
      fail(ErrorKind::Config, os.str());
    }
  }
  return p;
}

DiffeoMap MapFamily::sample(std::uint64_t seed, std::uint64_t index) const {
  DiffeoMap m = builder_(sample_params(seed, index));
  return m;
}

OmegaWord::OmegaWord(FamilyPtr family, std::uint64_t seed, std::size_t length, std::size_t offset)
    : family_(std::move(family)), seed_(seed), length_(length), offset_(offset) {
  if (!family_) fail(ErrorKind::Config, "OmegaWord: null family");
}

DiffeoMap OmegaWord::map(std::size_t i) const { return family_->sample(seed_, offset_ + i); }

Vec OmegaWord::params(std::size_t i) const { return family_->sample_params(seed_, offset_ + i); }

std::vector<DiffeoMap> OmegaWord::realized() const {
  std::vector<DiffeoMap> maps;
  maps.reserve(length_);
  for (std::size_t i = 0; i < length_; ++i) maps.push_back(map(i));
  return maps;
}

OmegaWord OmegaWord::shift(std::size_t k) const {
  return OmegaWord(family_, seed_, length_ > k ? length_ - k : 0, offset_ + k);
}

OmegaWord OmegaWord::extended(std::size_t new_length) const {
  return OmegaWord(family_, seed_, std::max(length_, new_length), offset_);
}

OmegaWord sample_word(FamilyPtr family, std::uint64_t seed, std::size_t n) {
  OmegaWord w(std::move(family), seed, n);
  // Realize the parameters once so out-of-range draws surface as config errors here.
  for (std::size_t i = 0; i < n; ++i) w.params(i);
  return w;
}

namespace {

bool escaped(const Vec& x) {
  if (!x.allFinite()) return true;
  return x.cwiseAbs().maxCoeff() > kOverflowGuard;
}

}  // namespace

Orbit iterate(const OmegaWord& word, const Vec& x, std::size_t n) {
  if (x.size() != word.dim()) fail(ErrorKind::Domain, "iterate: point dimension does not match family");
  if (n > word.length()) fail(ErrorKind::Domain, "iterate: word shorter than requested horizon");
  Orbit orbit;
  orbit.reserve(n + 1);
  orbit.push_back(x);
  if (escaped(x)) throw OrbitDivergence(0, "iterate: initial point is not finite");
  for (std::size_t j = 0; j < n; ++j) {
    Vec next = word.map(j).apply(orbit.back());
    if (escaped(next)) {
      throw OrbitDivergence(j, "iterate: orbit left the finite range after step " + std::to_string(j));
    }
    orbit.push_back(std::move(next));
  }
  return orbit;
}

CocycleBlock cocycle_block(const OmegaWord& word, const Vec& x, std::size_t n, std::size_t l) {
  if (n + l > word.length()) fail(ErrorKind::Domain, "cocycle_block: word shorter than n + l");
  const Orbit orbit = iterate(word, x, n + l);
  CocycleBlock block;
  block.base_point = x;
  block.start = n;
  block.length = l;
  block.matrix = Mat::Identity(x.size(), x.size());
  for (std::size_t j = n; j < n + l; ++j) block.matrix = word.map(j).jacobian_at(orbit[j]) * block.matrix;
  return block;
}

CenteredFrame::CenteredFrame(OmegaWord word, Vec base, std::size_t index, double domain_radius)
    : word_(word.extended(index + 1)),
      base_(std::move(base)),
      index_(index),
      domain_radius_(domain_radius),
      orbit_(iterate(word_, base_, index + 1)),
      map_(word_.map(index)) {}

namespace {

void check_radius(const CenteredFrame& frame, const Vec& v, const char* who) {
  if (v.norm() > frame.domain_radius()) {
    fail(ErrorKind::Domain, std::string(who) + ": vector outside the frame's domain radius");
  }
}

}  // namespace

Vec centered_map(const CenteredFrame& frame, const Vec& v) {
  check_radius(frame, v, "centered_map");
  return frame.step_map().apply_difference(frame.point(), v);
}

Mat centered_jacobian(const CenteredFrame& frame, const Vec& v) {
  check_radius(frame, v, "centered_jacobian");
  return frame.step_map().jacobian_at(frame.point() + v);
}

Vec centered_inverse(const CenteredFrame& frame, const Vec& w) {
  return frame.step_map().apply_inverse(frame.next_point() + w) - frame.point();
}

Mat second_derivative_probe(const CenteredFrame& frame, const Vec& v, const Vec& u, double h) {
  const auto& f = frame.step_map();
  const Vec x = frame.point() + v;
  return (f.jacobian_at(x + h * u) - f.jacobian_at(x - h * u)) / (2 * h);
}

std::vector<Vec> unit_ball_points(int dim, int count) {
  std::vector<Vec> pts;
  pts.push_back(Vec::Zero(dim));
  boost::random::sobol gen(dim);
  boost::random::uniform_01<double> u01;
  while (static_cast<int>(pts.size()) < count) {
    Vec p(dim);
    for (int i = 0; i < dim; ++i) p(i) = 2 * u01(gen) - 1;
    if (p.norm() <= 1.0) pts.push_back(p);
  }
  return pts;
}

std::vector<Vec> unit_directions(int dim, int count) {
  std::vector<Vec> dirs;
  for (int i = 0; i < dim && static_cast<int>(dirs.size()) < count; ++i) dirs.push_back(Vec::Unit(dim, i));
  boost::random::sobol gen(dim);
  boost::random::uniform_01<double> u01;
  while (static_cast<int>(dirs.size()) < count) {
    Vec p(dim);
    for (int i = 0; i < dim; ++i) p(i) = 2 * u01(gen) - 1;
    const double n = p.norm();
    if (n > 1e-3 && n <= 1.0) dirs.push_back(p / n);
  }
  return dirs;
}

namespace {

// sup over sampled directions of |(Dg(x + h u) - Dg(x - h u)) / 2h|.
double probe_sup(const std::function<Mat(const Vec&)>& dg, const Vec& x, const std::vector<Vec>& dirs) {
  const double h = 1e-4 * std::max(1.0, x.norm());
  double best = 0;
  for (const Vec& u : dirs) {
    const Mat q = (dg(x + h * u) - dg(x - h * u)) / (2 * h);
    const double v = q.allFinite() ? op_norm(q) : std::numeric_limits<double>::infinity();
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

SecondDerivativeSup sample_second_derivative_sup(const DiffeoMap& map, const Vec& x, double radius,
                                                 int points_per_dim) {
  const int d = static_cast<int>(x.size());
  const auto ball = unit_ball_points(d, std::max(2, points_per_dim) * d + 1);
  const auto dirs = unit_directions(d, 2 * d * d);
  const auto fwd = [&](const Vec& p) { return map.jacobian_at(p); };
  const auto inv = [&](const Vec& p) { return map.inverse_jacobian_at(p); };
  SecondDerivativeSup out;
  for (const Vec& b : ball) {
    const Vec p = x + radius * b;
    out.forward = std::max(out.forward, probe_sup(fwd, p, dirs));
    out.inverse = std::max(out.inverse, probe_sup(inv, map.apply(p), dirs));
  }
  if (map.second_derivative_bound) out.forward = map.second_derivative_bound(x, radius);
  return out;
}

AssumptionReport validate_assumptions(const MapFamily& family,
                                      const std::function<Vec(std::uint64_t)>& mu_sampler,
                                      std::size_t sample_budget, std::uint64_t seed, int points_per_dim) {
  if (sample_budget < 1) fail(ErrorKind::Domain, "validate_assumptions: sample_budget must be >= 1");
  AssumptionReport rep;
  double s_df = 0, ss_df = 0, s_inv = 0, ss_inv = 0, s_d2 = 0, s_d2i = 0;
  const auto clamp_log = [&](double v) {
    if (!(v > 0)) {
      rep.log_floor_engaged = true;
      return kLogFloor;
    }
    return std::max(kLogFloor, std::log(v));
  };
  for (std::size_t i = 0; i < sample_budget; ++i) {
    const DiffeoMap f = family.sample(seed, i);
    const Vec x = mu_sampler(i);
    const Mat jac = f.jacobian_at(x);
    const Mat jinv = f.inverse_jacobian_at(f.apply(x));
    if (!jac.allFinite() || !jinv.allFinite()) {
      rep.violation = true;
      continue;
    }
    const auto d2 = sample_second_derivative_sup(f, x, 1.0, points_per_dim);
    if (!std::isfinite(d2.forward) || !std::isfinite(d2.inverse)) {
      rep.violation = true;
      continue;
    }
    const double nj = op_norm(jac), ni = op_norm(jinv);
    if (nj > kOverflowGuard || ni > kOverflowGuard || d2.forward > kOverflowGuard || d2.inverse > kOverflowGuard)
      rep.overflow = true;
    const double l_df = std::max(0.0, std::log(nj));
    const double l_inv = std::log(ni);
    s_df += l_df;
    ss_df += l_df * l_df;
    s_inv += l_inv;
    ss_inv += l_inv * l_inv;
    s_d2 += clamp_log(d2.forward);
    s_d2i += clamp_log(d2.inverse);
    ++rep.samples;
  }
  if (rep.samples == 0) return rep;
  const double n = static_cast<double>(rep.samples);
  rep.mean_log_plus_df = s_df / n;
  rep.mean_log_df_inverse = s_inv / n;
  rep.mean_log_sup_d2f = s_d2 / n;
  rep.mean_log_sup_d2f_inverse = s_d2i / n;
  if (rep.samples > 1) {
    const auto se = [n](double s, double ss) {
      const double var = std::max(0.0, (ss - s * s / n) / (n - 1));
      return std::sqrt(var / n);
    };
    rep.stderr_log_plus_df = se(s_df, ss_df);
    rep.stderr_log_df_inverse = se(s_inv, ss_inv);
  }
  return rep;
}

}  // namespace pesin
