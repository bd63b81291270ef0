#include "polylab/coarse_grain.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "polylab/ensembles.hpp"
#include "polylab/enumerate.hpp"

namespace polylab {

LatticeNorm::LatticeNorm(std::shared_ptr<const NormEvaluator> norm, int radius)
    : norm_(std::move(norm)), box_(Box::centered(norm_->dim(), radius)), cache_(box_.size()) {
  for (std::size_t i = 0; i < box_.size(); ++i) cache_[i] = (*norm_)(to_vec(box_.point(i)));
}

double LatticeNorm::operator()(const Point& y) const {
  return box_.contains(y) ? cache_[box_.index(y)] : (*norm_)(to_vec(y));
}

ConeSpec::ConeSpec(std::shared_ptr<const NormEvaluator> norm, const Vec& h, double delta, int radius)
    : norm_(std::move(norm), radius), h_(h), delta_(delta), box_(Box::centered(norm_.dim(), radius)) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("cone aperture delta must lie in (0,1)");
  for (int i = norm_.dim(); i < kMaxDim; ++i)
    if (h[static_cast<std::size_t>(i)] != 0.0) throw std::invalid_argument("drift has components beyond the dimension");
  table_.resize(box_.size());
  for (std::size_t i = 0; i < box_.size(); ++i) table_[i] = compute(box_.point(i)) ? 1 : 0;
}

bool ConeSpec::compute(const Point& y) const {
  const double a = norm_(y);
  return a > 0.0 && a - dot(h_, to_vec(y)) < delta_ * a;
}

bool ConeSpec::forward(const Point& y) const { return box_.contains(y) ? table_[box_.index(y)] != 0 : compute(y); }

std::string ConeSpec::describe() const {
  std::ostringstream os;
  os << "cone(delta=" << format_double(delta_) << ",h=(";
  for (int i = 0; i < dim(); ++i) os << (i ? "," : "") << format_double(h_[static_cast<std::size_t>(i)]);
  os << "),norm=" << norm_.evaluator().describe() << ")";
  return os.str();
}

std::vector<int> cone_points(std::span<const Point> sites, const ConeSpec& cone) {
  std::vector<int> out;
  const int n = static_cast<int>(sites.size());
  for (int k = 0; k < n; ++k) {
    const Point& apex = sites[static_cast<std::size_t>(k)];
    bool ok = true;
    for (int j = 0; j < k && ok; ++j) ok = cone.backward(sites[static_cast<std::size_t>(j)] - apex);
    for (int j = k + 1; j < n && ok; ++j) ok = cone.forward(sites[static_cast<std::size_t>(j)] - apex);
    if (ok) out.push_back(k);
  }
  return out;
}

bool cone_confined(std::span<const Point> sites, const ConeSpec& cone) {
  const std::size_t n = sites.size();
  for (std::size_t j = 1; j < n; ++j)
    if (!cone.forward(sites[j] - sites[0]) || !cone.backward(sites[j - 1] - sites[n - 1])) return false;
  return true;
}

Surcharge::Surcharge(std::shared_ptr<const NormEvaluator> norm, const Vec& h) : norm_(std::move(norm)), h_(h) {
  const double p = norm_->polar(h);
  if (std::abs(p - 1.0) > 1e-6) throw std::invalid_argument("drift is not on the unit sphere of the polar norm");
}

Vec dual_unit(const NormEvaluator& norm, const Vec& h) {
  const double p = norm.polar(h);
  if (!(p > 0.0)) throw std::invalid_argument("zero drift has no direction");
  Vec out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = h[i] / p;
  return out;
}

std::vector<LatticePath> SkeletonDecomposition::pieces() const {
  std::vector<LatticePath> out;
  for (int i = 0; i < m(); ++i)
    out.push_back(path.slice(u[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(i)]));
  out.push_back(path.slice(u.back(), path.length()));
  return out;
}

std::vector<LatticePath> SkeletonDecomposition::hairs() const {
  std::vector<LatticePath> out;
  for (int i = 0; i < m(); ++i)
    out.push_back(path.slice(v[static_cast<std::size_t>(i)], u[static_cast<std::size_t>(i) + 1]));
  return out;
}

std::vector<Point> SkeletonDecomposition::vertices() const {
  std::vector<Point> out;
  for (int t : u) out.push_back(path[t]);
  out.push_back(path.back());
  return out;
}

LatticePath SkeletonDecomposition::reassemble() const {
  const auto ps = pieces();
  const auto hs = hairs();
  LatticePath out = LatticePath::shifted(path.dim(), {path.front()});
  for (int i = 0; i < m(); ++i) out = out.then(ps[static_cast<std::size_t>(i)]).then(hs[static_cast<std::size_t>(i)]);
  return out.then(ps.back());
}

SkeletonDecomposition build_skeleton(const LatticePath& path, double K, const LatticeNorm& norm) {
  if (!(K > 0.0)) throw std::invalid_argument("skeleton scale must be positive");
  SkeletonDecomposition s;
  s.K = K;
  s.path = path;
  s.u.push_back(0);
  const int n = path.length();
  std::vector<Point> centers;  // u_0..u_{i-1}
  std::set<Point> exits;       // v_1..v_i
  const auto covered = [&](const Point& p) {
    if (exits.contains(p)) return true;
    return std::any_of(centers.begin(), centers.end(), [&](const Point& c) { return norm(p - c) <= K; });
  };
  int start = 0;
  while (start < n) {
    int exit = -1;
    for (int j = start + 1; j <= n; ++j)
      if (norm(path[j] - path[start]) > K) {
        exit = j;
        break;
      }
    if (exit < 0) break;
    centers.push_back(path[start]);
    exits.insert(path[exit]);
    int last = exit;
    for (int t = n; t > exit; --t)
      if (covered(path[t])) {
        last = t;
        break;
      }
    s.v.push_back(exit);
    start = std::min(last + 1, n);
    s.u.push_back(start);
  }
  return s;
}

double skeleton_surcharge(const SkeletonDecomposition& s, const Surcharge& sur) {
  const auto vs = s.vertices();
  double total = 0.0;
  for (std::size_t i = 1; i < vs.size(); ++i) total += sur(vs[i] - vs[i - 1]);
  return total;
}

LatticePath IrreducibleSplit::reassemble() const {
  LatticePath out = prefix;
  for (const auto& p : pieces) out = out.then(p);
  return flagged ? out : out.then(suffix);
}

IrreducibleSplit irreducible_decompose(const LatticePath& path, const ConeSpec& cone) {
  IrreducibleSplit s;
  s.cone = cone_points(path, cone);
  if (s.cone.size() < 2) {
    s.flagged = true;
    s.prefix = path;
    s.suffix = LatticePath::shifted(path.dim(), {path.back()});
    return s;
  }
  s.prefix = path.slice(0, s.cone.front());
  for (std::size_t k = 0; k + 1 < s.cone.size(); ++k) {
    LatticePath piece = path.slice(s.cone[k], s.cone[k + 1]);
    s.confined = s.confined && cone_confined(std::span<const Point>(piece.sites()), cone);
    s.pieces.push_back(std::move(piece));
  }
  s.suffix = path.slice(s.cone.back(), path.length());
  return s;
}

std::vector<SurchargeTailRow> surcharge_tail_test(const SurchargeTailConfig& cfg, const LatticeNorm& norm,
                                                  const Surcharge& sur) {
  if (cfg.dim != norm.dim()) throw std::invalid_argument("norm dimension mismatch");
  if (!(cfg.lambda > 0.0)) throw std::invalid_argument("the conjugate ensemble needs lambda > 0");
  const WeightParams p{cfg.beta, cfg.lambda, {}};
  std::vector<SurchargeTailRow> rows;
  for (const auto& x : cfg.targets) {
    SurchargeTailRow r;
    r.x = x;
    r.cap = cfg.cap;
    const double len = l1(x);
    r.threshold = 2.0 * cfg.eps * len;
    r.bound = std::exp(-cfg.eps * len);

    struct Acc {
      LogSum all, over;
    };
    const PathEnumerator en({cfg.dim, cfg.cap, p, nullptr, &cfg.dist, true});
    const auto accs = visit_paths_to<Acc>(
        en, x, [] { return Acc{}; },
        [&](Acc& acc, const WalkView& v) {
          acc.all.add(v.log_a);
          const auto skel = build_skeleton(v.path(cfg.dim), cfg.K, norm);
          if (skeleton_surcharge(skel, sur) > r.threshold) acc.over.add(v.log_a);
        });
    LogSum all, over;
    for (const auto& a : accs) {
      all.merge(a.all);
      over.merge(a.over);
    }
    // Weight of the paths beyond the cap.
    double log_full = 0.0, log_rest = kNegInf;
    if (cfg.beta == 0.0) {
      const int radius = l1(x) + 40 + static_cast<int>(std::ceil(40.0 / cfg.lambda));
      const Point targets[] = {x};
      const auto cr = conjugate_partition(nullptr, Box::centered(cfg.dim, radius), p, targets, {1e-13});
      log_full = std::max(cr.log_value[0], all.value());
      const double gap = std::exp(log_full - all.value()) - 1.0;
      log_rest = gap > 0 ? all.value() + std::log(gap) : kNegInf;
      if (!cr.converged) log_rest = log_add(log_rest, log_add(cr.log_tail_bound, cr.log_boundary_loss));
    } else {
      log_rest = conjugate_enumerate(cfg.dist, cfg.dim, p, x, cfg.cap).log_tail_bound;
      log_full = all.value();
    }
    r.exceed_lo = std::exp(over.value() - log_add(all.value(), log_rest));
    r.exceed_hi = std::min(1.0, std::exp(log_add(over.value(), log_rest) - log_full));
    r.holds = r.exceed_hi <= r.bound;
    r.inconclusive = !r.holds && r.exceed_lo <= r.bound;
    rows.push_back(r);
  }
  return rows;
}

double ConeDensityReport::prob_below(double c) const {
  double p = 0.0;
  for (std::size_t k = 0; k < count_law.size(); ++k)
    if (static_cast<double>(k) < c * n) p += count_law[k];
  return p;
}

ConeDensityReport cone_density_test(const PotentialDistribution& dist, int dim, double beta, const Vec& h, int n,
                                    const ConeSpec& cone, double critical_mass) {
  if (!(critical_mass > 0.0)) throw std::invalid_argument("cone-point density needs a ballistic drift");
  if (n < 1) throw std::invalid_argument("path length must be positive");
  if (cone.dim() != dim) throw std::invalid_argument("cone dimension mismatch");
  const WeightParams p{beta, 0.0, h};
  const PathEnumerator en({dim, n, p, nullptr, &dist, true});
  struct Acc {
    LogSum all;
    std::vector<LogSum> by_count;
  };
  const auto accs = en.run<Acc>([&] { return Acc{{}, std::vector<LogSum>(static_cast<std::size_t>(n) + 2)}; },
                                [&](Acc& acc, const WalkView& v) {
                                  if (v.depth < n) return true;
                                  const auto c = cone_points(std::span<const Point>(v.sites, v.sites + n + 1), cone);
                                  acc.all.add(v.log_a);
                                  acc.by_count[c.size()].add(v.log_a);
                                  return false;
                                });
  LogSum all;
  std::vector<LogSum> by(static_cast<std::size_t>(n) + 2);
  for (const auto& a : accs) {
    all.merge(a.all);
    for (std::size_t k = 0; k < by.size(); ++k) by[k].merge(a.by_count[k]);
  }
  ConeDensityReport r;
  r.n = n;
  r.beta = beta;
  r.count_law.resize(by.size());
  for (std::size_t k = 0; k < by.size(); ++k) {
    r.count_law[k] = by[k].empty() ? 0.0 : std::exp(by[k].value() - all.value());
    r.mean_density += r.count_law[k] * static_cast<double>(k) / n;
  }
  return r;
}

}  // namespace polylab
