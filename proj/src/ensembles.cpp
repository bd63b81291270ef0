#include "polylab/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "polylab/enumerate.hpp"
#include "polylab/rng.hpp"

namespace polylab {

std::string to_string(Ensemble e) { return e == Ensemble::Quenched ? "quenched" : "annealed"; }

bool EndpointConstraint::admits(const Point& end) const {
  switch (type) {
    case Type::Free: return true;
    case Type::Endpoint: return end == x;
    case Type::Slab: return end[axis] == level;
  }
  return false;
}

bool EndpointConstraint::reachable(const Point& pos, int remaining) const {
  switch (type) {
    case Type::Free: return true;
    case Type::Endpoint: return l1(x - pos) <= remaining;
    case Type::Slab: return std::abs(level - pos[axis]) <= remaining;
  }
  return false;
}

int enumeration_cap(int dim) {
  switch (dim) {
    case 1: return 26;
    case 2: return 14;
    default: return 12;
  }
}

namespace {

void check_enumeration(int dim, int n) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension must be 1..3");
  if (n < 0) throw std::invalid_argument("negative length");
  if (n > enumeration_cap(dim))
    throw std::invalid_argument("length " + std::to_string(n) + " exceeds the enumeration cap " +
                                std::to_string(enumeration_cap(dim)));
}

EnumeratedPartition enumerate_impl(const PathEnumerator::Config& cfg, int n, const EndpointConstraint& c) {
  const bool quenched = cfg.env != nullptr;
  PathEnumerator en(cfg);
  using Acc = std::map<Point, LogSum>;
  auto shards = en.run<Acc>([] { return Acc{}; }, [&](Acc& acc, const WalkView& v) {
    if (v.depth == n) {
      if (c.admits(v.end())) acc[v.end()].add(quenched ? v.log_q : v.log_a);
      return false;
    }
    return c.reachable(v.end(), n - v.depth);
  });
  Acc merged;
  for (const auto& s : shards)
    for (const auto& [x, ls] : s) merged[x].merge(ls);
  EnumeratedPartition out;
  LogSum total;
  for (const auto& [x, ls] : merged) {
    if (ls.empty()) continue;
    out.log_by_endpoint[x] = ls.value();
    total.add(ls.value());
  }
  out.log_total = total.value();
  return out;
}

}  // namespace

EnumeratedPartition enumerate_partition(const Environment& env, const WeightParams& p, int n,
                                        const EndpointConstraint& c, bool parallel) {
  const int dim = env.box().dim();
  check_enumeration(dim, n);
  return enumerate_impl({dim, n, p, &env, nullptr, parallel}, n, c);
}

EnumeratedPartition enumerate_partition(const PotentialDistribution& dist, int dim, const WeightParams& p, int n,
                                        const EndpointConstraint& c, bool parallel) {
  check_enumeration(dim, n);
  return enumerate_impl({dim, n, p, nullptr, &dist, parallel}, n, c);
}

// ---------------------------------------------------------------------------
// DP tables

Box default_dp_box(int dim, int nmax) { return Box::centered(dim, nmax + 2); }

double PartitionTable::log_at(int n, const Point& x) const {
  if (n < 0 || n > nmax_) throw std::out_of_range("length outside the table");
  if (!box_.contains(x)) return kNegInf;
  return log_[static_cast<std::size_t>(n) * box_.size() + box_.index(x)];
}

double PartitionTable::log_total(int n) const {
  if (n < 0 || n > nmax_) throw std::out_of_range("length outside the table");
  LogSum s;
  const std::size_t base = static_cast<std::size_t>(n) * box_.size();
  for (std::size_t k = 0; k < box_.size(); ++k) s.add(log_[base + k]);
  return s.value();
}

void PartitionTable::write_csv(std::ostream& os) const {
  const int d = box_.dim();
  os << "n";
  for (int i = 0; i < d; ++i) os << ",x" << (i + 1);
  os << ",log_value,kind,truncated_flag\n";
  for (int n = 0; n <= nmax_; ++n)
    for (std::size_t k = 0; k < box_.size(); ++k) {
      const double v = log_[static_cast<std::size_t>(n) * box_.size() + k];
      if (v == kNegInf) continue;
      const Point x = box_.point(k);
      os << n;
      for (int i = 0; i < d; ++i) os << ',' << x[i];
      os << ',' << format_double(v) << ',' << to_string(kind_) << ',' << (box_.on_boundary(x) ? 1 : 0) << '\n';
    }
}

PartitionTable build_table(Ensemble kind, const Environment* env, int dim, const WeightParams& p, int nmax,
                           const std::optional<Box>& box_opt, KernelMode mode) {
  if (nmax < 0) throw std::invalid_argument("negative nmax");
  const Box box = box_opt ? *box_opt : default_dp_box(dim, nmax);
  if (box.dim() != dim) throw std::invalid_argument("box dimension mismatch");
  if (!box.contains(Point{}) || (nmax > 0 && box.on_boundary(Point{})))
    throw std::invalid_argument("origin must be an interior site of the DP box");
  TransferOperator op(box, env, p);

  PartitionTable t;
  t.kind_ = kind;
  t.params_ = p;
  t.box_ = box;
  t.nmax_ = nmax;
  t.log_.assign(static_cast<std::size_t>(nmax + 1) * box.size(), kNegInf);
  t.log_absorbed_.assign(static_cast<std::size_t>(nmax) + 1, kNegInf);
  t.log_[box.index(Point{})] = 0.0;

  std::vector<double> a(op.cells(), 0.0), b(op.cells(), 0.0), rec(op.cells(), 0.0);
  a[op.cell(Point{})] = 1.0;
  double prev_max = 1.0, log_scale = 0.0;
  for (int n = 1; n <= nmax; ++n) {
    const Box sw = op.sweep(Point{}, n);
    const double scale = prev_max > 0.0 ? 1.0 / prev_max : 1.0;
    if (prev_max > 0.0) log_scale += std::log(prev_max);
    const auto layer = op.apply(a.data(), b.data(), rec.data(), sw, scale, mode);
    std::swap(a, b);
    prev_max = layer.max;
    const std::size_t base = static_cast<std::size_t>(n) * box.size();
    for (std::size_t k = 0; k < sw.size(); ++k) {
      const Point x = sw.point(k);
      const double z = rec[op.cell(x)];
      if (z > 0.0) t.log_[base + box.index(x)] = std::log(z) + log_scale;
    }
    const double prev = t.log_absorbed_[static_cast<std::size_t>(n) - 1];
    t.log_absorbed_[static_cast<std::size_t>(n)] =
        layer.absorbed > 0.0 ? log_add(prev, std::log(layer.absorbed) + log_scale) : prev;
  }
  return t;
}

PartitionTable quenched_dp(const Environment& env, const WeightParams& p, int nmax, const std::optional<Box>& box,
                           KernelMode mode) {
  return build_table(Ensemble::Quenched, &env, env.box().dim(), p, nmax, box, mode);
}

PartitionTable annealed_dp(const PotentialDistribution&, int dim, const WeightParams& p, int nmax,
                           const std::optional<Box>& box, KernelMode mode) {
  if (p.beta != 0.0)
    throw std::invalid_argument("annealed weights are not Markovian for beta > 0; use enumeration");
  return build_table(Ensemble::Annealed, nullptr, dim, p, nmax, box, mode);
}

double step_mass_factor(int dim, const WeightParams& p) { return std::exp(p.log_mean_cosh(dim) - p.lambda); }

// ---------------------------------------------------------------------------
// Conjugate sums

ConjugateResult conjugate_partition(const Environment* env, const Box& box, const WeightParams& p,
                                    std::span<const Point> targets, const ConjugateOptions& opt) {
  const int dim = box.dim();
  if (p.lambda <= 0.0) throw std::invalid_argument("conjugate sums need lambda > 0");
  const double rho = step_mass_factor(dim, p);
  if (!(rho < 1.0))
    throw std::invalid_argument("conjugate sum diverges: lambda must exceed log mean cosh(h)");
  if (box.on_boundary(Point{}) || !box.contains(Point{}))
    throw std::invalid_argument("origin must be an interior site of the box");
  int reach = 0;
  for (const auto& x : targets) {
    if (!box.contains(x)) throw std::invalid_argument("target outside the box");
    reach = std::max(reach, l1(x));
  }
  TransferOperator op(box, env, p);

  ConjugateResult r;
  r.targets.assign(targets.begin(), targets.end());
  r.log_value.assign(targets.size(), kNegInf);
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i] == Point{}) r.log_value[i] = 0.0;
  std::vector<double> all;
  if (opt.keep_all) {
    all.assign(box.size(), 0.0);
    all[box.index(Point{})] = 1.0;
  }

  const double log_geom = std::log(rho / (1.0 - rho));
  const double log_tol = std::log(opt.rel_tol);
  std::vector<double> a(op.cells(), 0.0), b(op.cells(), 0.0), rec(op.cells(), 0.0);
  a[op.cell(Point{})] = 1.0;
  double prev_max = 1.0, log_scale = 0.0, log_absorbed = kNegInf;
  double log_mass = 0.0;
  int n = 0;
  while (n < opt.max_layers) {
    ++n;
    const Box sw = op.sweep(Point{}, n);
    const double scale = prev_max > 0.0 ? 1.0 / prev_max : 1.0;
    if (prev_max > 0.0) log_scale += std::log(prev_max);
    const auto layer = op.apply(a.data(), b.data(), rec.data(), sw, scale, opt.mode);
    std::swap(a, b);
    prev_max = layer.max;
    for (std::size_t i = 0; i < targets.size(); ++i)
      if (sw.contains(targets[i])) {
        const double z = rec[op.cell(targets[i])];
        if (z > 0.0) r.log_value[i] = log_add(r.log_value[i], std::log(z) + log_scale);
      }
    if (opt.keep_all) {
      const double f = std::exp(log_scale);
      for (std::size_t k = 0; k < sw.size(); ++k) {
        const Point x = sw.point(k);
        all[box.index(x)] += rec[op.cell(x)] * f;
      }
    }
    if (layer.absorbed > 0.0) log_absorbed = log_add(log_absorbed, std::log(layer.absorbed) + log_scale);
    log_mass = layer.mass > 0.0 ? std::log(layer.mass) + log_scale : kNegInf;
    if (log_mass == kNegInf) break;
    if (n < reach) continue;
    double floor = kInf;
    for (double v : r.log_value) floor = std::min(floor, v);
    if (floor > kNegInf && log_mass + log_geom <= log_tol + floor) break;
  }
  r.layers = n + 1;
  r.log_tail_bound = log_mass == kNegInf ? kNegInf : log_mass + log_geom;
  r.log_boundary_loss = log_absorbed == kNegInf ? kNegInf : log_absorbed - std::log1p(-rho);
  r.converged = true;
  for (double v : r.log_value)
    r.converged = r.converged && v > kNegInf && r.log_tail_bound <= log_tol + v && r.log_boundary_loss <= log_tol + v;
  if (opt.keep_all) {
    r.log_all.resize(box.size());
    for (std::size_t k = 0; k < box.size(); ++k) r.log_all[k] = all[k] > 0.0 ? std::log(all[k]) : kNegInf;
  }
  return r;
}

namespace {

ConjugateEnumeration conjugate_enum_impl(const PathEnumerator::Config& cfg, const Point& x, bool first_hit) {
  const bool quenched = cfg.env != nullptr;
  PathEnumerator en(cfg);
  struct Acc {
    LogSum w, wsq;
  };
  auto shards = visit_paths_to<Acc>(en, x, [] { return Acc{}; }, [&](Acc& acc, const WalkView& v) {
    const double lw = quenched ? v.log_q : v.log_a;
    acc.w.add(lw);
    if (v.sq_local > 0) acc.wsq.add(lw + std::log(static_cast<double>(v.sq_local)));
  }, first_hit);
  LogSum w, wsq;
  for (const auto& s : shards) {
    w.merge(s.w);
    wsq.merge(s.wsq);
  }
  ConjugateEnumeration out;
  out.cap = cfg.max_len;
  out.log_value = w.value();
  out.loop_moment = wsq.empty() ? 0.0 : std::exp(wsq.value() - out.log_value);
  const double rho = step_mass_factor(cfg.dim, cfg.params);
  out.log_tail_bound = rho < 1.0 ? (cfg.max_len + 1) * std::log(rho) - std::log1p(-rho) : kInf;
  return out;
}

}  // namespace

ConjugateEnumeration conjugate_enumerate(const PotentialDistribution& dist, int dim, const WeightParams& p,
                                         const Point& x, int cap, bool first_hit, bool parallel) {
  check_enumeration(dim, cap);
  return conjugate_enum_impl({dim, cap, p, nullptr, &dist, parallel}, x, first_hit);
}

ConjugateEnumeration conjugate_enumerate(const Environment& env, const WeightParams& p, const Point& x, int cap,
                                         bool first_hit, bool parallel) {
  const int dim = env.box().dim();
  check_enumeration(dim, cap);
  return conjugate_enum_impl({dim, cap, p, &env, nullptr, parallel}, x, first_hit);
}

double srw_conjugate_loop_moment(int dim, double lambda, const Point& x) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  // Green function G(y) <= e^{-lambda |y|_1} / (1 - e^{-lambda}); pad until negligible.
  const int pad = static_cast<int>(std::ceil((36.0 - std::log1p(-std::exp(-lambda))) / lambda));
  const int inner = l1(x) + pad;
  const Box outer = Box::centered(dim, inner + l1(x) + 1);
  const Point origin{};
  ConjugateOptions opt;
  opt.keep_all = true;
  opt.rel_tol = 1e-14;
  const auto g = conjugate_partition(nullptr, outer, WeightParams{0.0, lambda, {}}, std::span(&origin, 1), opt);
  const auto G = [&](const Point& y) {
    const double v = g.log_all[outer.index(y)];
    return v == kNegInf ? 0.0 : std::exp(v);
  };
  const double loops = G(origin) - 1.0;
  const Box ib = Box::centered(dim, inner);
  double acc = 0.0;
  for (std::size_t k = 0; k < ib.size(); ++k) {
    const Point z = ib.point(k);
    const double gp = G(z) - (z == origin ? 1.0 : 0.0);
    acc += gp * G(x - z);
  }
  return acc * (1.0 + 2.0 * loops) / G(x);
}

// ---------------------------------------------------------------------------
// Ensemble statistics

namespace {

struct MomentAcc {
  double w = 0.0;
  Vec m{};
  std::array<Vec, kMaxDim> mm{};
  std::vector<std::complex<double>> cf;
  double sq = 0.0;

  void add(double wt, const Point& x, std::span<const Vec> alphas, double sq_local) {
    w += wt;
    for (int i = 0; i < kMaxDim; ++i) {
      m[static_cast<std::size_t>(i)] += wt * x[i];
      for (int j = 0; j < kMaxDim; ++j) mm[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += wt * x[i] * x[j];
    }
    for (std::size_t a = 0; a < alphas.size(); ++a) cf[a] += wt * std::polar(1.0, dot(alphas[a], x));
    sq += wt * sq_local;
  }
  void merge(const MomentAcc& o) {
    w += o.w;
    for (std::size_t i = 0; i < kMaxDim; ++i) {
      m[i] += o.m[i];
      for (std::size_t j = 0; j < kMaxDim; ++j) mm[i][j] += o.mm[i][j];
    }
    for (std::size_t a = 0; a < cf.size(); ++a) cf[a] += o.cf[a];
    sq += o.sq;
  }
  EnsembleStats finish(int n, int dim, std::span<const Vec> alphas, bool with_loops) const {
    EnsembleStats s;
    s.n = n;
    s.dim = dim;
    s.alphas.assign(alphas.begin(), alphas.end());
    for (std::size_t i = 0; i < kMaxDim; ++i) s.mean[i] = m[i] / w;
    for (std::size_t i = 0; i < kMaxDim; ++i)
      for (std::size_t j = 0; j < kMaxDim; ++j) s.cov[i][j] = mm[i][j] / w - s.mean[i] * s.mean[j];
    for (const auto& c : cf) s.char_fn.push_back(c / w);
    if (with_loops) s.loop_moment = sq / w;
    return s;
  }
};

EnsembleStats stats_enum(const PathEnumerator::Config& cfg, int n, std::span<const Vec> alphas) {
  const bool quenched = cfg.env != nullptr;
  const double log_z = enumerate_impl(cfg, n, {}).log_total;
  if (log_z == kNegInf) throw std::domain_error("all paths have zero weight");
  PathEnumerator en(cfg);
  auto shards = en.run<MomentAcc>(
      [&] {
        MomentAcc a;
        a.cf.assign(alphas.size(), 0.0);
        return a;
      },
      [&](MomentAcc& acc, const WalkView& v) {
        if (v.depth < n) return true;
        const double lw = quenched ? v.log_q : v.log_a;
        if (lw > kNegInf) acc.add(std::exp(lw - log_z), v.end(), alphas, static_cast<double>(v.sq_local));
        return false;
      });
  MomentAcc total;
  total.cf.assign(alphas.size(), 0.0);
  for (const auto& s : shards) total.merge(s);
  return total.finish(n, cfg.dim, alphas, true);
}

}  // namespace

EnsembleStats ensemble_stats(const Environment& env, const WeightParams& p, int n, std::span<const Vec> alphas,
                             bool parallel) {
  const int dim = env.box().dim();
  check_enumeration(dim, n);
  return stats_enum({dim, n, p, &env, nullptr, parallel}, n, alphas);
}

EnsembleStats ensemble_stats(const PotentialDistribution& dist, int dim, const WeightParams& p, int n,
                             std::span<const Vec> alphas, bool parallel) {
  check_enumeration(dim, n);
  return stats_enum({dim, n, p, nullptr, &dist, parallel}, n, alphas);
}

EnsembleStats ensemble_stats(const PartitionTable& table, int n, std::span<const Vec> alphas) {
  const double log_z = table.log_total(n);
  if (log_z == kNegInf) throw std::domain_error("all paths have zero weight");
  const Box& box = table.box();
  MomentAcc acc;
  acc.cf.assign(alphas.size(), 0.0);
  for (std::size_t k = 0; k < box.size(); ++k) {
    const Point x = box.point(k);
    const double v = table.log_at(n, x);
    if (v > kNegInf) acc.add(std::exp(v - log_z), x, alphas, 0.0);
  }
  return acc.finish(n, box.dim(), alphas, false);
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

std::size_t pick(const std::vector<double>& cum, double u) {
  const double target = u * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), target);
  return std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

}  // namespace

std::vector<LatticePath> sample_paths(const PartitionTable& table, const Environment* env, int n, int count,
                                      std::uint64_t seed) {
  if (n < 0 || n > table.nmax()) throw std::invalid_argument("sample length exceeds the DP table");
  if (count < 0) throw std::invalid_argument("negative sample count");
  if (table.kind() == Ensemble::Quenched && !env) throw std::invalid_argument("quenched sampling needs the environment");
  const Box& box = table.box();
  const int dim = box.dim();
  const auto steps = unit_steps(dim);
  std::vector<double> coef(steps.size());
  for (std::size_t s = 0; s < steps.size(); ++s) coef[s] = std::exp(dot(table.params().h, steps[s]));

  const double log_z = table.log_total(n);
  if (log_z == kNegInf) throw std::domain_error("all paths have zero weight");
  std::vector<Point> ends;
  std::vector<double> cum;
  double run = 0.0;
  for (std::size_t k = 0; k < box.size(); ++k) {
    const Point x = box.point(k);
    const double v = table.log_at(n, x);
    if (v == kNegInf) continue;
    run += std::exp(v - log_z);
    ends.push_back(x);
    cum.push_back(run);
  }

  Rng rng(derive_seed(seed, stream::kPathSample));
  std::vector<LatticePath> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<Point> sites(static_cast<std::size_t>(n) + 1);
  std::vector<double> w(steps.size());
  // The site weight at x is common to all predecessors and cancels.
  for (int c = 0; c < count; ++c) {
    Point x = ends[pick(cum, rng.uniform())];
    sites[static_cast<std::size_t>(n)] = x;
    for (int m = n; m >= 1; --m) {
      double lmax = kNegInf;
      std::vector<double> lv(steps.size(), kNegInf);
      for (std::size_t s = 0; s < steps.size(); ++s) {
        const Point y = x - steps[s];
        if (m - 1 > 0 && table.truncated(y)) continue;
        lv[s] = table.log_at(m - 1, y);
        lmax = std::max(lmax, lv[s]);
      }
      double total = 0.0;
      for (std::size_t s = 0; s < steps.size(); ++s) {
        w[s] = lv[s] == kNegInf ? 0.0 : coef[s] * std::exp(lv[s] - lmax);
        total += w[s];
      }
      double u = rng.uniform() * total, acc = 0.0;
      std::size_t chosen = steps.size() - 1;
      for (std::size_t s = 0; s < steps.size(); ++s) {
        acc += w[s];
        if (w[s] > 0.0 && u < acc) {
          chosen = s;
          break;
        }
      }
      while (w[chosen] == 0.0) --chosen;
      x = x - steps[chosen];
      sites[static_cast<std::size_t>(m) - 1] = x;
    }
    out.push_back(LatticePath::from_sites(dim, sites));
  }
  return out;
}

std::vector<LatticePath> sample_paths(const PotentialDistribution& dist, int dim, const WeightParams& p, int n,
                                      int count, std::uint64_t seed) {
  if (n < 0 || n > 10) throw std::invalid_argument("annealed sampling by enumeration supports n <= 10");
  if (count < 0) throw std::invalid_argument("negative sample count");
  check_enumeration(dim, n);
  const double log_z = enumerate_partition(dist, dim, p, n).log_total;
  PathEnumerator en({dim, n, p, nullptr, &dist, true});
  struct Acc {
    std::vector<std::uint32_t> code;
    std::vector<double> w;
  };
  auto shards = en.run<Acc>([] { return Acc{}; }, [&](Acc& acc, const WalkView& v) {
    if (v.depth < n) return true;
    std::uint32_t c = 0;
    for (int i = n - 1; i >= 0; --i) c = c * 8u + v.steps[i];
    acc.code.push_back(c);
    acc.w.push_back(std::exp(v.log_a - log_z));
    return false;
  });
  std::vector<std::uint32_t> codes;
  std::vector<double> cum;
  double run = 0.0;
  for (const auto& s : shards)
    for (std::size_t i = 0; i < s.code.size(); ++i) {
      run += s.w[i];
      codes.push_back(s.code[i]);
      cum.push_back(run);
    }
  if (codes.empty()) {
    codes.push_back(0);
    cum.push_back(1.0);
  }
  const auto steps = unit_steps(dim);
  Rng rng(derive_seed(seed, stream::kPathSample));
  std::vector<LatticePath> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    std::uint32_t code = codes[pick(cum, rng.uniform())];
    std::vector<Point> sites{Point{}};
    for (int i = 0; i < n; ++i) {
      sites.push_back(sites.back() + steps[code % 8u]);
      code /= 8u;
    }
    out.push_back(LatticePath::from_sites(dim, sites));
  }
  return out;
}

}  // namespace polylab
