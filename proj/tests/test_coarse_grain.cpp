#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "polylab/coarse_grain.hpp"
#include "polylab/rng.hpp"
#include "polylab/stats.hpp"

using namespace polylab;

namespace {
const PotentialDistribution kHalf = PotentialDistribution::bernoulli(0.5, 1.0);

// Drift (1.2, 0) sits on the boundary of the dual ball at this mass.
const double kMass = std::log((std::cosh(1.2) + 1.0) / 2.0);
const Vec kDrift{1.2, 0, 0};

std::shared_ptr<const NormEvaluator> srw(double lambda) { return std::make_shared<SrwNorm>(2, lambda); }

// Steps right with probability 0.6, otherwise up, down or left.
LatticePath biased_path(int n, Rng& rng) {
  std::vector<Point> steps;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    steps.push_back(u < 0.6 ? Point{{1, 0, 0}} : u < 0.8 ? Point{{0, 1, 0}} : u < 0.95 ? Point{{0, -1, 0}} : Point{{-1, 0, 0}});
  }
  return LatticePath::from_steps(2, steps);
}

LatticePath straight(int n) {
  std::vector<Point> steps(static_cast<std::size_t>(n), Point{{1, 0, 0}});
  return LatticePath::from_steps(2, steps);
}

// Direct containment check with the untabulated norm.
std::vector<int> brute_cone_points(const LatticePath& p, const NormEvaluator& norm, const Vec& h, double delta) {
  const auto in_cone = [&](const Point& y) {
    const double a = norm(to_vec(y));
    return a > 0 && a - dot(h, to_vec(y)) < delta * a;
  };
  std::vector<int> out;
  for (int k = 0; k <= p.length(); ++k) {
    bool ok = true;
    for (int j = 0; j <= p.length(); ++j) {
      if (j == k) continue;
      const Point y = p[j] - p[k];
      if (!(j > k ? in_cone(y) : in_cone(Point{} - y))) ok = false;
    }
    if (ok) out.push_back(k);
  }
  return out;
}

std::set<Point> visited_after_start(const LatticePath& p) {
  std::set<Point> s;
  for (int i = 1; i <= p.length(); ++i) s.insert(p[i]);
  return s;
}
}  // namespace

TEST_CASE("cone membership") {
  const ConeSpec cone(srw(kMass), kDrift, 0.25);
  CHECK(cone.forward(Point{{1, 0, 0}}));
  CHECK(cone.forward(Point{{5, 0, 0}}));
  CHECK_FALSE(cone.forward(Point{}));
  CHECK_FALSE(cone.forward(Point{{0, 1, 0}}));
  CHECK_FALSE(cone.forward(Point{{-1, 0, 0}}));
  CHECK(cone.backward(Point{{-3, 0, 0}}));
  // Table lookups agree with direct evaluation beyond the table.
  CHECK(cone.forward(Point{{40, 3, 0}}) == ConeSpec(srw(kMass), kDrift, 0.25, 50).forward(Point{{40, 3, 0}}));
  CHECK_THROWS(ConeSpec(srw(kMass), kDrift, 1.0));
  CHECK_THROWS(ConeSpec(srw(kMass), Vec{1, 0, 1}, 0.25));
}

TEST_CASE("cone points") {
  const auto norm = srw(kMass);
  const ConeSpec cone(norm, kDrift, 0.25, 32);
  const auto s = cone_points(straight(9), cone);
  CHECK(s.size() == 10);
  CHECK(cone_points(LatticePath(2), cone) == std::vector<int>{0});
  Rng rng(3);
  int nontrivial = 0;
  for (int k = 0; k < 500; ++k) {
    const auto p = biased_path(static_cast<int>(rng.below(31)), rng);
    const auto c = cone_points(p, cone);
    CHECK(c == brute_cone_points(p, *norm, kDrift, 0.25));
    if (c.size() >= 3) ++nontrivial;
  }
  CHECK(nontrivial > 50);
}

TEST_CASE("surcharge") {
  const auto norm = srw(0.5);
  const Vec h = std::static_pointer_cast<const SrwNorm>(norm)->dual(Vec{2, 1, 0});
  const Surcharge sur(norm, h);
  CHECK(std::abs(sur(Vec{2, 1, 0})) < 1e-12);
  CHECK(std::abs(sur(Vec{4, 2, 0})) < 1e-12);
  for (const auto& d : direction_fan(2)) CHECK(sur(d) >= -1e-12);
  CHECK(sur(Vec{-2, -1, 0}) >= (*norm)(Vec{2, 1, 0}));
  CHECK(sur(Vec{-2, -1, 0}) == doctest::Approx(2 * (*norm)(Vec{2, 1, 0})));
  CHECK_THROWS(Surcharge(norm, Vec{2 * h[0], 2 * h[1], 0}));
  const Vec unit = dual_unit(*norm, Vec{3, 1, 0});
  CHECK(norm->polar(unit) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_NOTHROW(Surcharge(norm, unit));
}

TEST_CASE("skeletons") {
  const LatticeNorm norm(srw(0.5), 40);
  const auto small = LatticePath::from_steps(2, std::vector<Point>{Point{{1, 0, 0}}, Point{{0, 1, 0}}});
  const auto s0 = build_skeleton(small, 10.0, norm);
  CHECK(s0.m() == 0);
  CHECK(s0.vertices() == std::vector<Point>{Point{}, Point{{1, 1, 0}}});
  CHECK(s0.hairs().empty());

  Rng rng(5);
  int with_hairs = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto p = k % 2 ? biased_path(static_cast<int>(rng.below(40)), rng) : random_path(2, static_cast<int>(rng.below(40)), rng);
    const double K = 2.0 + 3.0 * rng.uniform();
    const auto s = build_skeleton(p, K, norm);
    CHECK(s.reassemble() == p);
    CHECK(s.vertices().back() == p.back());
    const auto pieces = s.pieces();
    // Confined pieces: inside the K-ball except at the exit point, and pairwise disjoint.
    std::map<Point, int> merged;
    double separate = 0.0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const auto& q = pieces[i];
      for (int t = 0; t < q.length(); ++t) CHECK(norm(q[t] - q.front()) <= K);
      if (i + 1 < pieces.size()) CHECK(norm(q.back() - q.front()) > K);
      for (std::size_t j = 0; j < i; ++j)
        for (const auto& x : visited_after_start(q)) CHECK_FALSE(visited_after_start(pieces[j]).contains(x));
      for (const auto& [x, l] : local_times(q)) merged[x] += l;
      separate += annealed_potential(q, kHalf, 1.0);
    }
    double joint = 0.0;
    for (const auto& [x, l] : merged) joint += kHalf.phi(1.0, l);
    CHECK(joint == doctest::Approx(separate).epsilon(1e-13));
    // Attraction: the whole path is heavier than its parts.
    double parts = separate;
    for (const auto& hp : s.hairs()) parts += annealed_potential(hp, kHalf, 1.0);
    CHECK(annealed_potential(p, kHalf, 1.0) <= parts + 1e-12);
    if (s.m() > 0) ++with_hairs;
  }
  CHECK(with_hairs > 100);
}

TEST_CASE("quenched factors of disjoint pieces are uncorrelated") {
  const LatticeNorm norm(srw(0.5), 40);
  Rng rng(11);
  LatticePath p = biased_path(30, rng);
  auto s = build_skeleton(p, 3.0, norm);
  while (s.m() < 2) {
    p = biased_path(30, rng);
    s = build_skeleton(p, 3.0, norm);
  }
  const auto pieces = s.pieces();
  const Box box = Box::centered(2, 32);
  const WeightParams w{1.0, 0.0, {}};
  std::vector<double> a, b;
  for (int r = 0; r < 500; ++r) {
    const auto env = Environment::sample(kHalf, box, derive_seed(17, stream::kReplica, static_cast<std::uint64_t>(r)));
    a.push_back(log_quenched_weight(pieces[0], env, w));
    b.push_back(log_quenched_weight(pieces[1], env, w));
    // Quenched weights are additive over any split.
    double total = 0.0;
    for (const auto& q : pieces) total += log_quenched_weight(q, env, w);
    for (const auto& q : s.hairs()) total += log_quenched_weight(q, env, w);
    CHECK(total == doctest::Approx(log_quenched_weight(p, env, w)).epsilon(1e-12));
  }
  const double ma = mean(a), mb = mean(b);
  std::vector<double> prod;
  for (std::size_t i = 0; i < a.size(); ++i) prod.push_back((a[i] - ma) * (b[i] - mb));
  const double cov = mean(prod);
  const double se = std::sqrt(variance(prod) / static_cast<double>(prod.size()));
  CHECK(std::abs(cov) <= 4 * se);
}

TEST_CASE("irreducible decomposition") {
  const ConeSpec cone(srw(kMass), kDrift, 0.25, 32);
  const auto st = irreducible_decompose(straight(8), cone);
  CHECK_FALSE(st.flagged);
  CHECK(st.pieces.size() == 8);
  CHECK(st.pieces.size() == st.cone.size() - 1);
  CHECK(st.prefix.length() == 0);
  CHECK(st.suffix.length() == 0);

  const auto bad = LatticePath::from_steps(2, std::vector<Point>{Point{{0, 1, 0}}, Point{{0, -1, 0}}, Point{{0, 1, 0}}});
  const auto fl = irreducible_decompose(bad, cone);
  CHECK(fl.flagged);
  CHECK(fl.reassemble() == bad);

  Rng rng(9);
  const WeightParams w{1.0, 0.3, kDrift};
  int split = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto p = biased_path(1 + static_cast<int>(rng.below(25)), rng);
    const auto s = irreducible_decompose(p, cone);
    CHECK(s.reassemble() == p);
    if (s.flagged) continue;
    ++split;
    CHECK(s.confined);
    double sum = log_annealed_weight(s.prefix, kHalf, w) + log_annealed_weight(s.suffix, kHalf, w);
    for (const auto& q : s.pieces) {
      sum += log_annealed_weight(q, kHalf, w);
      const auto c = cone_points(q, cone);
      CHECK(c == std::vector<int>{0, q.length()});
    }
    CHECK(sum == doctest::Approx(log_annealed_weight(p, kHalf, w)).epsilon(1e-12));
  }
  CHECK(split > 300);
}

TEST_CASE("surcharge tail at beta = 0") {
  const double lambda = 2.0;
  const auto norm = srw(lambda);
  const LatticeNorm lnorm(norm, 20);
  const Surcharge sur(norm, std::static_pointer_cast<const SrwNorm>(norm)->dual(Vec{1, 0, 0}));
  SurchargeTailConfig cfg;
  cfg.lambda = lambda;
  cfg.K = 2 * lnorm(Point{{1, 0, 0}});
  cfg.targets = {Point{{6, 0, 0}}, Point{{8, 0, 0}}, Point{{10, 0, 0}}};
  const auto rows = surcharge_tail_test(cfg, lnorm, sur);
  for (const auto& r : rows) {
    INFO(to_string(r.x, 2), " lo=", r.exceed_lo, " hi=", r.exceed_hi, " bound=", r.bound);
    CHECK(r.holds);
    CHECK(r.exceed_lo <= r.exceed_hi);
    CHECK(r.exceed_hi - r.exceed_lo < 1e-3);
  }
  // Threshold zero: some paths have positive surcharge, but not all.
  cfg.eps = 0.0;
  cfg.targets = {Point{{4, 0, 0}}};
  cfg.cap = 10;
  const auto z = surcharge_tail_test(cfg, lnorm, sur)[0];
  CHECK(z.exceed_lo > 0.0);
  CHECK(z.exceed_hi < 1.0);
}

TEST_CASE("cone-point density") {
  // Strong drift: 1.2 times the dual unit vector of e1.
  const auto norm = std::make_shared<SrwNorm>(2, 0.5);
  const Vec unit = norm->dual(Vec{1, 0, 0});
  const Vec h{1.2 * unit[0], 0, 0};
  const ConeSpec cone(norm, h, 0.25, 16);
  const double critical = std::log((std::cosh(h[0]) + 1) / 2);
  const auto r = cone_density_test(kHalf, 2, 0.0, h, 12, cone, critical);
  double total = 0.0;
  for (double p : r.count_law) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  MESSAGE("cone density at beta 0: ", r.mean_density);
  CHECK(r.mean_density > 0.2);
  CHECK(r.prob_below(0.0) == 0.0);
  CHECK(r.prob_below(2.0) == doctest::Approx(1.0));
  CHECK_THROWS(cone_density_test(kHalf, 2, 0.0, Vec{}, 12, cone, 0.0));
  // Observed trend: more attraction, fewer cone points.
  const auto r3 = cone_density_test(kHalf, 2, 0.3, h, 12, cone, critical);
  const auto r6 = cone_density_test(kHalf, 2, 0.6, h, 12, cone, critical);
  MESSAGE("cone density at beta 0.3, 0.6: ", r3.mean_density, " ", r6.mean_density);
  CHECK(r3.mean_density <= r.mean_density);
  CHECK(r6.mean_density <= r3.mean_density);
}
