#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "polylab/path.hpp"
#include "polylab/rng.hpp"

using namespace polylab;

namespace {
const PotentialDistribution kHalf = PotentialDistribution::bernoulli(0.5, 1.0);

LatticePath d1(std::initializer_list<int> xs) {
  std::vector<Point> s;
  for (int x : xs) s.push_back(Point{{x, 0, 0}});
  return LatticePath::from_sites(1, s);
}
}  // namespace

TEST_CASE("construction and extension") {
  CHECK(LatticePath(2).extension() == Point{});
  const auto p = LatticePath::from_sites(2, {Point{}, Point{{1, 0, 0}}, Point{{1, 1, 0}}});
  CHECK(p.extension() == Point{{1, 1, 0}});
  CHECK(p.reversed().extension() == -p.extension());
  CHECK_THROWS(LatticePath::from_sites(2, {Point{}, Point{{1, 1, 0}}}));
  CHECK_THROWS(LatticePath::from_sites(2, {Point{{1, 0, 0}}}));
  CHECK_NOTHROW(LatticePath::shifted(2, {Point{{1, 0, 0}}}));
}

TEST_CASE("local times") {
  CHECK(local_times(LatticePath(1)).empty());
  const auto lt = local_times(d1({0, 1, 0, 1}));
  CHECK(lt.size() == 2);
  CHECK(lt.at(Point{{1, 0, 0}}) == 2);
  CHECK(lt.at(Point{}) == 1);
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const auto path = random_path(2, static_cast<int>(rng.below(30)), rng);
    int total = 0;
    for (const auto& [x, c] : local_times(path)) total += c;
    REQUIRE(total == path.length());
  }
}

TEST_CASE("slicing, concatenation and serialization") {
  Rng rng(2);
  const auto path = random_path(2, 20, rng);
  const auto head = path.slice(0, 8), tail = path.slice(8, 20);
  CHECK(head.then(tail) == path);
  CHECK(head.then(tail.translated(Point{{5, 5, 0}})) == path);
  std::stringstream ss;
  path.write(ss);
  CHECK(LatticePath::read(ss, 2) == path);
}

TEST_CASE("quenched weight closed forms") {
  const Box box = Box::centered(1, 5);
  const auto env = Environment::sample(kHalf, box, 3);
  WeightParams p{0.0, 0.0, {}};
  Rng rng(4);
  const auto path = random_path(1, 5, rng);
  CHECK(log_quenched_weight(path, env, p) == doctest::Approx(-5 * std::log(2.0)));
  p = {0.7, 0.3, {1.1, 0, 0}};
  CHECK(log_quenched_weight(d1({0, 1}), env, p) ==
        doctest::Approx(1.1 - 0.3 - 0.7 * env.at(Point{{1, 0, 0}}) - std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("quenched weight decreases in visited potentials") {
  const Box box = Box::centered(2, 6);
  const auto uni = PotentialDistribution::uniform(1.0);
  auto env = Environment::sample(uni, box, 5);
  const WeightParams p{0.8, 0.1, {0.3, -0.2, 0}};
  Rng rng(6);
  const auto path = random_path(2, 6, rng);
  const double base = log_quenched_weight(path, env, p);
  std::vector<double> v(env.values().begin(), env.values().end());
  v[box.index(path[3])] = std::min(1.0, v[box.index(path[3])] + 0.25);
  if (v[box.index(path[3])] == env.at(path[3])) v[box.index(path[3])] -= 0.25;
  const auto env2 = Environment::from_values(uni, box, 5, v);
  const bool raised = env2.at(path[3]) > env.at(path[3]);
  CHECK((log_quenched_weight(path, env2, p) < base) == raised);
}

TEST_CASE("traps give -inf quenched weight only when visited after time 0") {
  const auto traps = PotentialDistribution::parse("discrete(0:0.5,inf:0.5)+traps-ok");
  const Box box = Box::centered(1, 2);
  std::vector<double> v(box.size(), 0.0);
  v[box.index(Point{})] = kInf;
  const auto env = Environment::from_values(traps, box, 0, v);
  const WeightParams p{1.0, 0.0, {}};
  CHECK(std::isfinite(log_quenched_weight(d1({0, 1}), env, p)));
  CHECK(log_quenched_weight(d1({0, 1, 0}), env, p) == kNegInf);
  CHECK(std::isfinite(log_annealed_weight(d1({0, 1, 0}), traps, p)));
}

TEST_CASE("annealed weight equals the site-factorized expectation") {
  Rng rng(7);
  const PotentialDistribution dists[] = {kHalf, PotentialDistribution::uniform(2.0),
                                         PotentialDistribution::parse("discrete(0:0.4,0.5:0.3,inf:0.3)+traps-ok")};
  for (const auto& dist : dists)
    for (double beta : {0.0, 0.3, 1.0})
      for (int k = 0; k < 100; ++k) {
        const int dim = 1 + static_cast<int>(rng.below(3));
        const auto path = random_path(dim, static_cast<int>(rng.below(25)), rng);
        const WeightParams p{beta, 0.2, {0.4, dim > 1 ? -0.3 : 0.0, 0}};
        double log_expect = dot(p.h, path.extension()) - p.lambda * path.length() - path.length() * std::log(2.0 * dim);
        double prod = 1;
        for (const auto& [x, ell] : local_times(path)) prod *= dist.mgf_neg(beta * ell);
        log_expect += std::log(prod);
        const double got = log_annealed_weight(path, dist, p);
        REQUIRE(std::abs(std::exp(got - log_expect) - 1) <= 1e-12);
        if (beta == 0.0) {
          const auto env = Environment::sample(dist, Box::centered(dim, 25), k);
          REQUIRE(got == doctest::Approx(log_quenched_weight(path, env, p)).epsilon(1e-14));
        }
        REQUIRE(annealed_potential(path, dist, beta) <= path.length() * dist.phi(beta, 1) + 1e-12);
      }
}

TEST_CASE("weights factorize over concatenation") {
  Rng rng(8);
  const Box box = Box::centered(2, 40);
  const auto env = Environment::sample(kHalf, box, 9);
  const WeightParams p{0.9, 0.2, {0.5, 0.1, 0}};
  for (int k = 0; k < 200; ++k) {
    const auto a = random_path(2, 10, rng), b = random_path(2, 10, rng);
    const auto ab = a.then(b);
    const double split = log_quenched_weight(a, env, p) + log_quenched_weight(b.translated(a.back()), env, p);
    REQUIRE(log_quenched_weight(ab, env, p) == doctest::Approx(split).epsilon(1e-13));
    // Disjoint visited sets (times >= 1) make the annealed potential additive.
    bool disjoint = true;
    const auto la = local_times(a);
    for (const auto& [x, c] : local_times(b.translated(a.back()))) disjoint &= !la.count(x);
    if (disjoint)
      REQUIRE(annealed_potential(ab, kHalf, 1.0) ==
              doctest::Approx(annealed_potential(a, kHalf, 1.0) + annealed_potential(b, kHalf, 1.0)).epsilon(1e-13));
  }
}
