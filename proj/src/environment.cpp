#include "polylab/environment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "polylab/logsum.hpp"
#include "polylab/rng.hpp"

namespace polylab {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "inf" || s == "+inf") return kInf;
  if (s == "-inf") return kNegInf;
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

namespace {

double truncate1(double v) { return std::min(v, 1.0); }

// Integral of t e^{-delta t} over [0, a].
double first_moment_exp(double a, double delta) {
  const double x = delta * a;
  if (std::abs(x) < 1e-4) return a * a * (0.5 - x / 3.0 + x * x / 8.0);
  return (1.0 - std::exp(-x) * (1.0 + x)) / (delta * delta);
}

// Integral of e^{-delta t} over [0, a].
double mass_exp(double a, double delta) {
  const double x = delta * a;
  if (x == 0.0) return a;
  return -std::expm1(-x) / delta;
}

}  // namespace

PotentialDistribution PotentialDistribution::bernoulli(double p, double v1, Flags flags) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli: p must lie in [0,1]");
  if (!(v1 >= 0.0)) throw std::invalid_argument("bernoulli: v1 must be >= 0");
  PotentialDistribution d;
  d.kind_ = Kind::Bernoulli;
  d.bern_p_ = p;
  d.bern_v_ = v1;
  d.flags_ = flags;
  if (1.0 - p > 0.0) d.atoms_.push_back({0.0, 1.0 - p});
  if (p > 0.0) {
    if (v1 == 0.0 && !d.atoms_.empty())
      d.atoms_[0].prob = 1.0;
    else
      d.atoms_.push_back({v1, p});
  }
  d.validate();
  return d;
}

PotentialDistribution PotentialDistribution::discrete(std::vector<Atom> atoms, Flags flags) {
  PotentialDistribution d;
  d.kind_ = Kind::Discrete;
  d.flags_ = flags;
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
  for (const auto& a : atoms) {
    if (!(a.value >= 0.0)) throw std::invalid_argument("discrete: atom values must be >= 0");
    if (!(a.prob >= 0.0)) throw std::invalid_argument("discrete: probabilities must be >= 0");
    if (!d.atoms_.empty() && d.atoms_.back().value == a.value)
      throw std::invalid_argument("discrete: duplicate atom value");
    if (a.prob > 0.0) d.atoms_.push_back(a);
  }
  d.validate();
  return d;
}

PotentialDistribution PotentialDistribution::uniform(double b, Flags flags) {
  if (!(b > 0.0) || std::isinf(b)) throw std::invalid_argument("uniform: b must be finite and > 0");
  PotentialDistribution d;
  d.kind_ = Kind::Uniform;
  d.b_ = b;
  d.flags_ = flags;
  d.validate();
  return d;
}

void PotentialDistribution::validate() const {
  if (kind_ == Kind::Uniform) return;
  if (atoms_.empty()) throw std::invalid_argument("distribution has no mass");
  double total = 0;
  for (const auto& a : atoms_) total += a.prob;
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("probabilities must sum to 1");
  if (!flags_.unnormalized_ok && atoms_.front().value != 0.0)
    throw std::invalid_argument("0 must lie in the support of V");
  if (!flags_.degenerate_ok && atoms_.size() < 2)
    throw std::invalid_argument("degenerate distribution (point mass) requires degenerate-ok");
  if (!flags_.traps_ok && std::isinf(atoms_.back().value))
    throw std::invalid_argument("trap atoms (V = inf) require traps-ok");
}

double PotentialDistribution::mgf_neg(double s) const {
  if (!(s >= 0.0)) throw std::invalid_argument("mgf_neg: s must be >= 0");
  if (s == 0.0) return 1.0;
  if (kind_ == Kind::Uniform) return mass_exp(b_, s) / b_;
  double m = 0;
  for (const auto& a : atoms_)
    if (!std::isinf(a.value)) m += a.prob * std::exp(-s * a.value);
  return m;
}

double PotentialDistribution::phi(double beta, int ell) const {
  if (!(beta >= 0.0) || ell < 0) throw std::invalid_argument("phi: beta and ell must be >= 0");
  const double s = beta * ell;
  if (s == 0.0) return 0.0;
  if (kind_ == Kind::Uniform) return -std::log(mass_exp(b_, s) / b_);
  // log1p form keeps precision when E e^{-sV} is close to 1.
  double dm = 0, m = 0;
  for (const auto& a : atoms_) {
    if (std::isinf(a.value)) {
      dm -= a.prob;
      continue;
    }
    dm += a.prob * std::expm1(-s * a.value);
    m += a.prob * std::exp(-s * a.value);
  }
  if (m <= 0.0) return kInf;
  return m > 0.5 ? -std::log1p(dm) : -std::log(m);
}

double PotentialDistribution::tilt_g(double delta) const {
  if (!std::isfinite(delta)) throw std::invalid_argument("tilt_g: delta must be finite");
  if (delta == 0.0) return 0.0;
  if (kind_ == Kind::Uniform) {
    const double a = std::min(b_, 1.0);
    const double e = (mass_exp(a, delta) + (b_ - a) * std::exp(-delta)) / b_;
    return -std::log(e);
  }
  double dm = 0, m = 0;
  for (const auto& at : atoms_) {
    dm += at.prob * std::expm1(-delta * truncate1(at.value));
    m += at.prob * std::exp(-delta * truncate1(at.value));
  }
  return std::abs(dm) < 0.5 ? -std::log1p(dm) : -std::log(m);
}

double PotentialDistribution::tilted_mean_truncated(double delta) const {
  if (kind_ == Kind::Uniform) {
    const double a = std::min(b_, 1.0);
    const double num = first_moment_exp(a, delta) + (b_ - a) * std::exp(-delta);
    const double den = mass_exp(a, delta) + (b_ - a) * std::exp(-delta);
    return num / den;
  }
  double num = 0, den = 0;
  for (const auto& at : atoms_) {
    const double m = truncate1(at.value);
    const double w = at.prob * std::exp(-delta * m);
    num += w * m;
    den += w;
  }
  return num / den;
}

double PotentialDistribution::quantile(double u) const {
  if (kind_ == Kind::Uniform) return u * b_;
  double cum = 0;
  for (const auto& a : atoms_) {
    cum += a.prob;
    if (u < cum) return a.value;
  }
  return atoms_.back().value;
}

double PotentialDistribution::tilted_quantile(double u, double delta) const {
  if (delta == 0.0) return quantile(u);
  if (kind_ == Kind::Uniform) {
    const double a = std::min(b_, 1.0);
    const double m1 = mass_exp(a, delta);
    const double m2 = (b_ - a) * std::exp(-delta);
    const double target = u * (m1 + m2);
    if (target <= m1) return std::min(a, -std::log1p(-delta * target) / delta);
    return std::min(b_, a + (target - m1) / std::exp(-delta));
  }
  double z = 0;
  for (const auto& at : atoms_) z += at.prob * std::exp(-delta * truncate1(at.value));
  double cum = 0;
  for (const auto& at : atoms_) {
    cum += at.prob * std::exp(-delta * truncate1(at.value)) / z;
    if (u < cum) return at.value;
  }
  return atoms_.back().value;
}

bool PotentialDistribution::in_support(double v) const {
  if (kind_ == Kind::Uniform) return v >= 0.0 && v <= b_;
  return std::any_of(atoms_.begin(), atoms_.end(), [v](const Atom& a) { return a.value == v; });
}

double PotentialDistribution::prob_zero() const {
  if (kind_ == Kind::Uniform) return 0.0;
  return atoms_.front().value == 0.0 ? atoms_.front().prob : 0.0;
}

std::string PotentialDistribution::spec() const {
  std::string s;
  switch (kind_) {
    case Kind::Bernoulli:
      s = "bernoulli(" + format_double(bern_p_) + "," + format_double(bern_v_) + ")";
      break;
    case Kind::Uniform:
      s = "uniform(" + format_double(b_) + ")";
      break;
    case Kind::Discrete:
      s = "discrete(";
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (i) s += ",";
        s += format_double(atoms_[i].value) + ":" + format_double(atoms_[i].prob);
      }
      s += ")";
      break;
  }
  if (flags_.degenerate_ok) s += "+degenerate-ok";
  if (flags_.traps_ok) s += "+traps-ok";
  if (flags_.unnormalized_ok) s += "+unnormalized-ok";
  return s;
}

PotentialDistribution PotentialDistribution::parse(const std::string& text) {
  std::string body = text;
  Flags flags;
  for (;;) {
    const auto plus = body.rfind('+');
    if (plus == std::string::npos || plus < body.rfind(')')) break;
    const std::string flag = body.substr(plus + 1);
    if (flag == "degenerate-ok") flags.degenerate_ok = true;
    else if (flag == "traps-ok") flags.traps_ok = true;
    else if (flag == "unnormalized-ok") flags.unnormalized_ok = true;
    else throw std::invalid_argument("unknown distribution flag: " + flag);
    body = body.substr(0, plus);
  }
  const auto open = body.find('(');
  if (open == std::string::npos || body.back() != ')')
    throw std::invalid_argument("malformed distribution spec: " + text);
  const std::string name = body.substr(0, open);
  const std::string args = body.substr(open + 1, body.size() - open - 2);
  std::vector<std::string> parts;
  std::stringstream ss(args);
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
  if (name == "bernoulli") {
    if (parts.size() != 2) throw std::invalid_argument("bernoulli takes (p,v1)");
    return bernoulli(parse_double(parts[0]), parse_double(parts[1]), flags);
  }
  if (name == "uniform") {
    if (parts.size() != 1) throw std::invalid_argument("uniform takes (b)");
    return uniform(parse_double(parts[0]), flags);
  }
  if (name == "discrete") {
    std::vector<Atom> atoms;
    for (const auto& p : parts) {
      const auto colon = p.find(':');
      if (colon == std::string::npos) throw std::invalid_argument("discrete atoms are value:prob");
      atoms.push_back({parse_double(p.substr(0, colon)), parse_double(p.substr(colon + 1))});
    }
    return discrete(std::move(atoms), flags);
  }
  throw std::invalid_argument("unknown distribution family: " + name);
}

bool operator==(const PotentialDistribution& a, const PotentialDistribution& b) {
  return a.spec() == b.spec();
}

Environment Environment::sample(const PotentialDistribution& dist, const Box& box, std::uint64_t seed) {
  Environment env(dist, box, seed);
  env.values_.resize(box.size());
  for (std::size_t i = 0; i < box.size(); ++i)
    env.values_[i] = dist.quantile(site_uniform(seed, box.point(i)));
  return env;
}

Environment Environment::sample_tilted(const PotentialDistribution& dist, const TiltSpec& tilt,
                                       const Box& box, std::uint64_t seed) {
  if (!std::isfinite(tilt.delta)) throw std::invalid_argument("tilt delta must be finite");
  if (!box.contains(tilt.region)) throw std::invalid_argument("tilt region must lie inside the box");
  if (!std::isfinite(dist.tilt_g(tilt.delta))) throw std::invalid_argument("tilt g(delta) not finite");
  Environment env(dist, box, seed);
  env.tilt_ = tilt;
  env.values_.resize(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Point p = box.point(i);
    const double u = site_uniform(seed, p);
    env.values_[i] = tilt.region.contains(p) ? dist.tilted_quantile(u, tilt.delta) : dist.quantile(u);
  }
  return env;
}

Environment Environment::from_values(const PotentialDistribution& dist, const Box& box,
                                     std::uint64_t seed, std::vector<double> values) {
  if (values.size() != box.size()) throw std::invalid_argument("value count does not match box");
  for (double v : values)
    if (!dist.in_support(v)) throw std::invalid_argument("value " + format_double(v) + " outside support");
  Environment env(dist, box, seed);
  env.values_ = std::move(values);
  return env;
}

double Environment::at(const Point& p) const {
  if (!box_.contains(p)) throw std::out_of_range("site " + to_string(p, box_.dim()) + " outside environment box");
  return values_[box_.index(p)];
}

void Environment::write(std::ostream& os) const {
  os << "dim=" << box_.dim() << "\n";
  os << "box=" << box_.str() << "\n";
  os << "dist=" << dist_.spec() << "\n";
  os << "seed=" << seed_ << "\n";
  if (tilt_) os << "tilt=" << format_double(tilt_->delta) << "@" << tilt_->region.str() << "\n";
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const Point p = box_.point(i);
    for (int k = 0; k < box_.dim(); ++k) os << p[k] << " ";
    os << format_double(values_[i]) << "\n";
  }
}

Environment Environment::read(std::istream& is) {
  std::string line;
  int dim = 0;
  std::optional<Box> box;
  std::optional<PotentialDistribution> dist;
  std::optional<std::uint64_t> seed;
  std::optional<TiltSpec> tilt;
  std::streampos body_start = is.tellg();
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) break;
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "dim") dim = std::stoi(val);
    else if (key == "box") box = Box::parse(val);
    else if (key == "dist") dist = PotentialDistribution::parse(val);
    else if (key == "seed") seed = std::stoull(val);
    else if (key == "tilt") {
      const auto at = val.find('@');
      if (at == std::string::npos) throw std::invalid_argument("malformed tilt line");
      tilt = TiltSpec{parse_double(val.substr(0, at)), Box::parse(val.substr(at + 1))};
    } else
      throw std::invalid_argument("unknown environment header key: " + key);
    body_start = is.tellg();
  }
  if (!box || !dist || !seed || dim != box->dim()) throw std::invalid_argument("incomplete environment header");
  is.clear();
  is.seekg(body_start);
  Environment env(*dist, *box, *seed);
  env.tilt_ = tilt;
  env.values_.assign(box->size(), 0.0);
  std::vector<bool> seen(box->size(), false);
  std::size_t count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Point p;
    for (int k = 0; k < dim; ++k)
      if (!(ls >> p[k])) throw std::invalid_argument("malformed site line: " + line);
    std::string v;
    if (!(ls >> v)) throw std::invalid_argument("malformed site line: " + line);
    if (!box->contains(p)) throw std::invalid_argument("site outside box: " + line);
    const auto idx = box->index(p);
    if (seen[idx]) throw std::invalid_argument("duplicate site: " + line);
    const double value = parse_double(v);
    if (!dist->in_support(value)) throw std::invalid_argument("value outside support: " + line);
    seen[idx] = true;
    env.values_[idx] = value;
    ++count;
  }
  if (count != box->size()) throw std::invalid_argument("environment file is missing sites");
  return env;
}

bool operator==(const Environment& a, const Environment& b) {
  const bool tilt_eq = a.tilt_.has_value() == b.tilt_.has_value() &&
                       (!a.tilt_ || (a.tilt_->delta == b.tilt_->delta && a.tilt_->region == b.tilt_->region));
  return a.box_ == b.box_ && a.dist_ == b.dist_ && a.seed_ == b.seed_ && tilt_eq && a.values_ == b.values_;
}

}  // namespace polylab
