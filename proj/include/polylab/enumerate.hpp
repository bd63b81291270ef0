#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "polylab/environment.hpp"
#include "polylab/lattice.hpp"
#include "polylab/logsum.hpp"
#include "polylab/path.hpp"

namespace polylab {

/// Read-only view of the current prefix during enumeration.
struct WalkView {
  int depth = 0;
  const Point* sites = nullptr;        // sites[0..depth]
  const std::uint8_t* steps = nullptr;  // step codes [0, depth), indices into unit_steps(dim)
  double log_q = 0.0;                   // quenched log-weight of the prefix (when an environment is set)
  double log_a = 0.0;                   // annealed log-weight of the prefix (when a distribution is set)
  long sq_local = 0;                    // sum_x ell(x)^2 over sites visited at times >= 1

  const Point& end() const { return sites[depth]; }
  LatticePath path(int dim) const {
    return LatticePath::shifted(dim, std::vector<Point>(sites, sites + depth + 1));
  }
};

/// Exhaustive depth-first enumeration of nearest-neighbour paths from the origin.
/// Weights are maintained incrementally; the visitor sees every prefix of length
/// 0..max_len and may prune a subtree by returning false. Work is sharded by the
/// first step and each shard owns its accumulator, so the caller can merge in a
/// fixed order.
class PathEnumerator {
 public:
  struct Config {
    int dim = 2;
    int max_len = 0;
    WeightParams params;
    const Environment* env = nullptr;
    const PotentialDistribution* dist = nullptr;
    bool parallel = true;
  };

  explicit PathEnumerator(const Config& cfg) : cfg_(cfg), steps_(unit_steps(cfg.dim)) {
    if (cfg.max_len < 0) throw std::invalid_argument("negative enumeration length");
    cfg.params.validate(cfg.dim);
    radius_ = cfg.max_len + 1;
    side_ = 2 * radius_ + 1;
    cells_ = 1;
    for (int i = 0; i < cfg.dim; ++i) cells_ *= static_cast<std::size_t>(side_);
    for (std::size_t s = 0; s < steps_.size(); ++s) {
      const Point& e = steps_[s];
      step_log_[s] = dot(cfg.params.h, e) - cfg.params.lambda - std::log(2.0 * cfg.dim);
      std::ptrdiff_t off = 0, stride = 1;
      for (int i = cfg.dim - 1; i >= 0; --i) {
        off += e[i] * stride;
        stride *= side_;
      }
      step_off_[s] = off;
    }
    if (cfg.env) {
      const Box& eb = cfg.env->box();
      if (eb.dim() != cfg.dim) throw std::invalid_argument("environment dimension mismatch");
      Point lo, hi;
      for (int i = 0; i < cfg.dim; ++i) {
        lo[i] = -cfg.max_len;
        hi[i] = cfg.max_len;
      }
      if (!eb.contains(Box(cfg.dim, lo, hi)))
        throw std::invalid_argument("environment box does not cover all paths of the enumeration length");
      pot_.assign(cells_, 0.0);
      for (std::size_t c = 0; c < cells_; ++c) {
        const Point p = point_of(c);
        if (!eb.contains(p)) continue;
        const double v = cfg.env->at(p);
        pot_[c] = cfg.params.beta == 0.0 ? 0.0 : (std::isinf(v) ? kInf : cfg.params.beta * v);
      }
    }
    if (cfg.dist) {
      dphi_.resize(static_cast<std::size_t>(cfg.max_len) + 1);
      for (int c = 0; c <= cfg.max_len; ++c)
        dphi_[static_cast<std::size_t>(c)] = cfg.dist->phi(cfg.params.beta, c + 1) - cfg.dist->phi(cfg.params.beta, c);
    }
  }

  int dim() const { return cfg_.dim; }
  int max_len() const { return cfg_.max_len; }
  int shards() const { return static_cast<int>(steps_.size()); }

  /// make() -> Acc; visit(Acc&, const WalkView&) -> bool (descend?).
  /// Returns one accumulator per first step; the root is visited in shard 0.
  template <class Acc, class Make, class Visit>
  std::vector<Acc> run(Make make, Visit visit) const {
    const int ns = shards();
    std::vector<Acc> accs;
    accs.reserve(static_cast<std::size_t>(ns));
    for (int s = 0; s < ns; ++s) accs.push_back(make());
    bool root_descend = true;
    {
      Point root{};
      WalkView v;
      v.sites = &root;
      root_descend = visit(accs[0], v);
    }
    if (!root_descend || cfg_.max_len == 0) return accs;
#pragma omp parallel for schedule(dynamic, 1) if (cfg_.parallel)
    for (int s = 0; s < ns; ++s) shard(s, accs[static_cast<std::size_t>(s)], visit);
    return accs;
  }

 private:
  Point point_of(std::size_t c) const {
    Point p;
    for (int i = cfg_.dim - 1; i >= 0; --i) {
      p[i] = static_cast<int>(c % static_cast<std::size_t>(side_)) - radius_;
      c /= static_cast<std::size_t>(side_);
    }
    return p;
  }
  std::size_t origin_cell() const {
    std::size_t c = 0;
    for (int i = 0; i < cfg_.dim; ++i) c = c * static_cast<std::size_t>(side_) + static_cast<std::size_t>(radius_);
    return c;
  }

  template <class Acc, class Visit>
  void shard(int first, Acc& acc, Visit& visit) const {
    const int n = cfg_.max_len;
    std::vector<Point> sites(static_cast<std::size_t>(n) + 1);
    std::vector<std::uint8_t> codes(static_cast<std::size_t>(n) + 1);
    std::vector<std::size_t> cell(static_cast<std::size_t>(n) + 1);
    std::vector<double> lq(static_cast<std::size_t>(n) + 1, 0.0), la(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<long> sq(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> count(cells_, 0);
    std::vector<int> next(static_cast<std::size_t>(n) + 1, 0);
    cell[0] = origin_cell();
    const int ns = shards();

    // Iterative DFS; next[d] is the next step code to try at depth d.
    int d = 0;
    next[0] = first;
    for (;;) {
      if (next[static_cast<std::size_t>(d)] >= ns) {
        if (d == 0) break;
        --count[cell[static_cast<std::size_t>(d)]];
        --d;
        continue;
      }
      const int s = next[static_cast<std::size_t>(d)]++;
      if (d == 0) next[0] = ns + 1;  // only the assigned first step
      const auto du = static_cast<std::size_t>(d);
      const std::size_t c = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(cell[du]) + step_off_[static_cast<std::size_t>(s)]);
      sites[du + 1] = sites[du] + steps_[static_cast<std::size_t>(s)];
      codes[du] = static_cast<std::uint8_t>(s);
      cell[du + 1] = c;
      const double step = step_log_[static_cast<std::size_t>(s)];
      if (cfg_.env) lq[du + 1] = lq[du] + step - pot_[c];
      if (cfg_.dist) la[du + 1] = la[du] + step - dphi_[static_cast<std::size_t>(count[c])];
      sq[du + 1] = sq[du] + 2 * count[c] + 1;
      ++count[c];
      WalkView v{d + 1, sites.data(), codes.data(), lq[du + 1], la[du + 1], sq[du + 1]};
      const bool descend = visit(acc, v);
      if (descend && d + 1 < n) {
        ++d;
        next[static_cast<std::size_t>(d)] = 0;
      } else {
        --count[c];
      }
    }
  }

  Config cfg_;
  std::vector<Point> steps_;
  int radius_ = 0, side_ = 0;
  std::size_t cells_ = 0;
  double step_log_[2 * kMaxDim]{};
  std::ptrdiff_t step_off_[2 * kMaxDim]{};
  std::vector<double> pot_;
  std::vector<double> dphi_;
};

/// Visits every path from the origin to `target` of length <= the enumerator's
/// max_len; on_path(Acc&, const WalkView&) is called once per such path. With
/// first_hit, only paths that reach the target at their last step are visited.
template <class Acc, class Make, class OnPath>
std::vector<Acc> visit_paths_to(const PathEnumerator& en, const Point& target, Make make, OnPath on_path,
                                bool first_hit = false) {
  const int cap = en.max_len();
  return en.template run<Acc>(make, [&](Acc& acc, const WalkView& v) {
    const int gap = l1(target - v.end());
    if (gap > cap - v.depth) return false;
    if (gap == 0) {
      on_path(acc, v);
      return !first_hit;
    }
    return true;
  });
}

}  // namespace polylab
