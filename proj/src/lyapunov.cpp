#include "polylab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polylab/roots.hpp"
#include "polylab/rng.hpp"
#include "polylab/stats.hpp"

namespace polylab {

namespace {

double dir_length(const Point& d) { return euclid(to_vec(d)); }

Box conjugate_box(int dim, const std::vector<Point>& targets, int margin) {
  Point lo{}, hi{};
  for (const auto& x : targets)
    for (int i = 0; i < dim; ++i) {
      lo[i] = std::min(lo[i], x[i]);
      hi[i] = std::max(hi[i], x[i]);
    }
  for (int i = 0; i < dim; ++i) {
    lo[i] -= margin;
    hi[i] += margin;
  }
  return Box(dim, lo, hi);
}

ConjugateResult solve_replica(const PotentialDistribution& dist, const std::optional<std::uint64_t>& env_seed, int dim,
                              const WeightParams& p, const std::vector<Point>& targets, double rel_tol) {
  int span = 0;
  for (const auto& x : targets) span = std::max(span, l1(x));
  int margin = std::max(10, span / 2 + 4);
  ConjugateOptions opt;
  opt.rel_tol = rel_tol;
  opt.mode = KernelMode::Serial;
  ConjugateResult r;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const Box box = conjugate_box(dim, targets, margin);
    if (env_seed) {
      const auto env = Environment::sample(dist, box, *env_seed);
      r = conjugate_partition(&env, box, p, targets, opt);
    } else {
      r = conjugate_partition(nullptr, box, p, targets, opt);
    }
    if (r.converged) break;
    margin = margin * 3 / 2 + 2;
  }
  return r;
}

}  // namespace

ConjugateSamples conjugate_samples(const LyapunovConfig& cfg, std::uint64_t stream_tag) {
  if (!(cfg.lambda > 0.0)) throw std::invalid_argument("Lyapunov exponents need lambda > 0");
  if (cfg.Ns.empty()) throw std::invalid_argument("empty distance grid");
  if (l1(cfg.direction) == 0) throw std::invalid_argument("zero direction");
  for (std::size_t i = 0; i < cfg.Ns.size(); ++i)
    if (cfg.Ns[i] <= 0 || (i > 0 && cfg.Ns[i] <= cfg.Ns[i - 1])) throw std::invalid_argument("Ns must increase");
  std::vector<Point> targets;
  for (int N : cfg.Ns) targets.push_back(N * cfg.direction);
  const WeightParams p{cfg.beta, cfg.lambda, {}};
  ConjugateSamples out;
  if (cfg.beta == 0.0) {
    const auto r = solve_replica(cfg.dist, std::nullopt, cfg.dim, p, targets, cfg.rel_tol);
    out.log_z.push_back(r.log_value);
    out.converged = r.converged;
    return out;
  }
  if (cfg.replicas < 1) throw std::invalid_argument("need at least one replica");
  const auto R = static_cast<std::size_t>(cfg.replicas);
  out.log_z.resize(R);
  std::vector<char> ok(R, 0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t r = 0; r < R; ++r) {
    const auto res = solve_replica(cfg.dist, derive_seed(cfg.seed, stream_tag, r), cfg.dim, p, targets, cfg.rel_tol);
    out.log_z[r] = res.log_value;
    ok[r] = res.converged;
  }
  out.converged = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
  return out;
}

LyapunovEstimate estimate_lyapunov(const LyapunovConfig& cfg) {
  const bool annealed = cfg.kind == Ensemble::Annealed;
  const auto samples = conjugate_samples(cfg, annealed ? stream::kAnnealedReplica : stream::kReplica);
  const double len = dir_length(cfg.direction);
  const std::size_t nn = cfg.Ns.size();
  const std::size_t R = samples.log_z.size();

  LyapunovEstimate e;
  e.direction = cfg.direction;
  e.lambda = cfg.lambda;
  e.kind = cfg.kind;
  e.Ns = cfg.Ns;
  e.exact = cfg.beta == 0.0;
  e.converged = samples.converged;
  e.replicas = static_cast<int>(R);

  for (const auto& row : samples.log_z)
    for (double v : row)
      if (v == kNegInf) {
        e.value = kInf;
        e.per_n.assign(nn, kInf);
        e.per_n_se.assign(nn, 0.0);
        return e;
      }

  const auto per_n = [&](std::span<const std::size_t> idx) {
    std::vector<double> y(nn);
    for (std::size_t j = 0; j < nn; ++j) {
      const double scale = cfg.Ns[j] * len;
      if (annealed) {
        LogSum s;
        for (std::size_t r : idx) s.add(samples.log_z[r][j]);
        y[j] = -(s.value() - std::log(static_cast<double>(idx.size()))) / scale;
      } else {
        double acc = 0.0;
        for (std::size_t r : idx) acc += samples.log_z[r][j];
        y[j] = -acc / static_cast<double>(idx.size()) / scale;
      }
    }
    return y;
  };
  std::vector<double> inv(nn);
  for (std::size_t j = 0; j < nn; ++j) inv[j] = 1.0 / cfg.Ns[j];
  // Off-axis Green functions carry an N^{-(d-1)/2} prefactor; remove its log before the 1/N fit.
  const double prefactor = 0.5 * (cfg.dim - 1);
  const auto extrapolate = [&](std::vector<double> y) {
    for (std::size_t j = 0; j < nn; ++j) y[j] -= prefactor * std::log(cfg.Ns[j]) / (cfg.Ns[j] * len);
    if (nn < 2) return LineFit{y[0], 0.0, 0.0, 1.0};
    return fit_line(inv, y);
  };

  std::vector<std::size_t> all(R);
  for (std::size_t r = 0; r < R; ++r) all[r] = r;
  e.per_n = per_n(all);
  const auto fit = extrapolate(e.per_n);
  e.intercept = fit.intercept;
  e.slope = fit.slope;
  e.value = fit.intercept;

  e.per_n_se.assign(nn, 0.0);
  if (R >= 2) {
    for (std::size_t j = 0; j < nn; ++j) {
      Welford w;
      double mx = kNegInf;
      for (std::size_t r = 0; r < R; ++r) mx = std::max(mx, samples.log_z[r][j]);
      for (std::size_t r = 0; r < R; ++r)
        w.add(annealed ? std::exp(samples.log_z[r][j] - mx) : samples.log_z[r][j]);
      const double scale = cfg.Ns[j] * len;
      e.per_n_se[j] = annealed ? w.stderr_of_mean() / w.mean() / scale : w.stderr_of_mean() / scale;
    }
    const auto bs = bootstrap(R, cfg.bootstrap, cfg.seed, [&](std::span<const std::size_t> idx) {
      return extrapolate(per_n(idx)).intercept;
    });
    e.stderr = bs.stderr;
  }
  return e;
}

PolygonNorm FanEstimate::norm() const {
  std::vector<Vec> dirs;
  std::vector<double> vals;
  for (std::size_t k = 0; k < fan.size(); ++k) {
    dirs.push_back(to_vec(fan[k]));
    vals.push_back(estimates[k].value * dir_length(fan[k]));
  }
  return PolygonNorm(dim, dirs, vals, "fan-estimate");
}

FanEstimate estimate_fan(const LyapunovConfig& base, const std::vector<Point>& fan) {
  FanEstimate f;
  f.dim = base.dim;
  f.fan = fan;
  for (const auto& d : fan) {
    auto cfg = base;
    cfg.direction = d;
    f.estimates.push_back(estimate_lyapunov(cfg));
  }
  return f;
}

NormCheckReport norm_checks(const FanEstimate& annealed, const FanEstimate& quenched) {
  if (annealed.fan != quenched.fan) throw std::invalid_argument("fans differ");
  NormCheckReport r;
  r.min_value = kInf;
  r.max_value = 0.0;
  r.ordered = true;
  for (std::size_t k = 0; k < annealed.fan.size(); ++k) {
    const auto& a = annealed.estimates[k];
    const auto& q = quenched.estimates[k];
    for (const auto* e : {&a, &q}) {
      r.min_value = std::min(r.min_value, e->value);
      r.max_value = std::max(r.max_value, e->value);
    }
    const double slack = 2.0 * std::hypot(a.stderr, q.stderr);
    if (a.value > q.value + slack) {
      r.ordered = false;
      r.findings.push_back("annealed exceeds quenched in direction " + to_string(a.direction, annealed.dim));
    }
  }
  r.equivalent = r.min_value > 0.0 && std::isfinite(r.max_value);
  if (!r.equivalent) r.findings.push_back("norm values not bounded away from 0 and infinity");
  return r;
}

std::vector<SubadditivityCheck> subadditivity_check(const PotentialDistribution& dist, int dim, double beta,
                                                    double lambda, const std::vector<std::pair<Point, Point>>& pairs,
                                                    int cap) {
  const WeightParams p{beta, lambda, {}};
  std::vector<SubadditivityCheck> out;
  for (const auto& [x, y] : pairs) {
    SubadditivityCheck c;
    c.x = x;
    c.y = y;
    const auto first = conjugate_enumerate(dist, dim, p, x, cap, true);
    const auto ax = conjugate_enumerate(dist, dim, p, x, cap);
    const auto ay = conjugate_enumerate(dist, dim, p, y, cap);
    const auto axy = conjugate_enumerate(dist, dim, p, x + y, cap);
    c.log_lhs = axy.log_value;
    c.log_tail = axy.log_tail_bound;
    c.log_rhs = first.log_value + ay.log_value;
    c.log_plain_product = ax.log_value + ay.log_value;
    c.holds = log_add(c.log_lhs, c.log_tail) >= c.log_rhs;
    out.push_back(c);
  }
  return out;
}

LambdaOfH lambda_of_h(const std::function<double(double)>& polar_at, double lambda_floor, double lambda_hi,
                      double tol) {
  LambdaOfH r;
  r.polar_at_floor = polar_at(lambda_floor);
  if (r.polar_at_floor <= 1.0) return r;
  double hi = lambda_hi;
  while (polar_at(hi) >= 1.0) {
    hi *= 2.0;
    if (hi > 1e4) {
      r.bracketed = false;
      return r;
    }
  }
  const int bits = std::clamp(static_cast<int>(-std::log2(tol / hi)), 8, 52);
  r.value = bracketed_root([&](double l) { return polar_at(l) - 1.0; }, lambda_floor, hi, bits);
  return r;
}

double srw_lambda_of_h(int dim, const Vec& h) { return std::max(0.0, WeightParams{0.0, 0.0, h}.log_mean_cosh(dim)); }

std::string to_string(DriftPhase p) {
  switch (p) {
    case DriftPhase::SubCritical: return "sub-critical";
    case DriftPhase::NearCritical: return "near-critical";
    case DriftPhase::Ballistic: return "ballistic";
  }
  return "?";
}

DriftClassification classify_drift(const Vec& h, const LambdaOfH& l, double tol, double band) {
  DriftClassification c;
  c.h = h;
  c.lambda_of_h = l.value;
  c.margin = l.polar_at_floor - 1.0;
  if (std::abs(c.margin) < band)
    c.phase = DriftPhase::NearCritical;
  else
    c.phase = l.value > tol ? DriftPhase::Ballistic : DriftPhase::SubCritical;
  return c;
}

RateValue rate_function(const std::function<double(double, const Vec&)>& norm_at, double lambda_of_h, const Vec& h,
                        const Vec& v, const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) throw std::invalid_argument("empty lambda grid");
  RateValue r;
  double best = -kInf;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    const double val = norm_at(lambda_grid[i], v) - lambda_grid[i];
    if (val > best) {
      best = val;
      arg = i;
    }
  }
  r.argmax_lambda = lambda_grid[arg];
  r.at_upper_edge = lambda_grid.size() > 1 && arg + 1 == lambda_grid.size();
  r.value = best + lambda_of_h - dot(h, v);
  return r;
}

ConjugateField annealed_conjugate_field(const PotentialDistribution& dist, int dim, double beta, double lambda,
                                        int radius, int replicas, std::uint64_t seed) {
  const Box outer = Box::centered(dim, 2 * radius + 6);
  std::vector<Point> targets;
  const Box inner = Box::centered(dim, radius);
  for (std::size_t k = 0; k < inner.size(); ++k)
    if (l1(inner.point(k)) == radius) targets.push_back(inner.point(k));
  ConjugateOptions opt;
  opt.keep_all = true;
  opt.mode = KernelMode::Serial;
  const WeightParams p{beta, lambda, {}};

  ConjugateField f;
  f.box = inner;
  f.exact = beta == 0.0;
  const auto restrict = [&](const std::vector<double>& all) {
    std::vector<double> v(inner.size());
    for (std::size_t k = 0; k < inner.size(); ++k) v[k] = all[outer.index(inner.point(k))];
    return v;
  };
  if (f.exact) {
    f.log_value = restrict(conjugate_partition(nullptr, outer, p, targets, opt).log_all);
    return f;
  }
  if (replicas < 1) throw std::invalid_argument("need at least one replica");
  std::vector<std::vector<double>> per(static_cast<std::size_t>(replicas));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < replicas; ++r) {
    const auto env = Environment::sample(dist, outer, derive_seed(seed, stream::kAnnealedReplica, static_cast<std::uint64_t>(r)));
    per[static_cast<std::size_t>(r)] = restrict(conjugate_partition(&env, outer, p, targets, opt).log_all);
  }
  f.log_value.assign(inner.size(), kNegInf);
  for (std::size_t k = 0; k < inner.size(); ++k) {
    LogSum s;
    for (const auto& row : per) s.add(row[k]);
    f.log_value[k] = s.value() - std::log(static_cast<double>(replicas));
  }
  return f;
}

SeriesDiagnostic series_diagnostic(const ConjugateField& field, const Vec& h, int max_radius) {
  if (!field.box.contains(Point{{max_radius, 0, 0}})) throw std::invalid_argument("field too small for the radius");
  std::vector<LogSum> shells(static_cast<std::size_t>(max_radius) + 1);
  for (std::size_t k = 0; k < field.box.size(); ++k) {
    const Point x = field.box.point(k);
    const int r = l1(x);
    if (r <= max_radius) shells[static_cast<std::size_t>(r)].add(dot(h, x) + field.log_value[k]);
  }
  SeriesDiagnostic d;
  double sum = 0.0;
  for (const auto& s : shells) {
    d.log_increment.push_back(s.value());
    sum += std::exp(s.value());
    d.partial_sum.push_back(sum);
  }
  const int lo = std::max(1, max_radius / 2);
  double acc = 0.0;
  bool all_down = true, all_up = true;
  for (int r = lo + 1; r <= max_radius; ++r) {
    const double step = d.log_increment[static_cast<std::size_t>(r)] - d.log_increment[static_cast<std::size_t>(r) - 1];
    acc += step;
    all_down = all_down && step < 0;
    all_up = all_up && step > 0;
  }
  d.tail_ratio = std::exp(acc / std::max(1, max_radius - lo));
  d.cauchy = all_down && d.tail_ratio < 1.0;
  d.growing = all_up && d.tail_ratio > 1.0;
  return d;
}

}  // namespace polylab
