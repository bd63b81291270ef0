#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "polylab/ensembles.hpp"
#include "polylab/rng.hpp"
#include "polylab/stats.hpp"

using namespace polylab;

namespace {
const PotentialDistribution kHalf = PotentialDistribution::bernoulli(0.5, 1.0);

double rel_err(double log_a, double log_b) { return std::abs(std::expm1(log_a - log_b)); }

double mean_cosh(const Vec& h, int dim) {
  double s = 0;
  for (int i = 0; i < dim; ++i) s += std::cosh(h[static_cast<std::size_t>(i)]);
  return s / dim;
}
}  // namespace

TEST_CASE("enumeration: reference measure and free-drift closed forms") {
  for (int dim = 1; dim <= 3; ++dim) {
    const auto env = Environment::sample(kHalf, Box::centered(dim, 12), 1);
    for (int n = 0; n <= (dim == 3 ? 7 : 10); ++n) {
      CHECK(std::abs(enumerate_partition(env, WeightParams{}, n).log_total) < 1e-12);
      CHECK(std::abs(enumerate_partition(kHalf, dim, WeightParams{}, n).log_total) < 1e-12);
      Vec h{0.4, -0.7, 0.2};
      for (int i = dim; i < kMaxDim; ++i) h[static_cast<std::size_t>(i)] = 0.0;
      const double expect = n * std::log(mean_cosh(h, dim));
      CHECK(enumerate_partition(env, WeightParams{0.0, 0.0, h}, n).log_total == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK_THROWS(enumerate_partition(kHalf, 2, WeightParams{}, 15));
}

TEST_CASE("enumeration constraints") {
  const auto env = Environment::sample(kHalf, Box::centered(2, 10), 2);
  const WeightParams p{0.8, 0.1, {0.3, 0.0, 0}};
  const auto free = enumerate_partition(env, p, 8);
  const auto slab = enumerate_partition(env, p, 8, EndpointConstraint::slab(0, 2));
  LogSum expect;
  for (const auto& [x, v] : free.log_by_endpoint)
    if (x[0] == 2) expect.add(v);
  CHECK(slab.log_total == doctest::Approx(expect.value()).epsilon(1e-13));
  const Point x{{2, -2, 0}};
  CHECK(enumerate_partition(env, p, 8, EndpointConstraint::endpoint(x)).log_total ==
        doctest::Approx(free.log_by_endpoint.at(x)).epsilon(1e-13));
}

TEST_CASE("quenched DP agrees with brute-force enumeration") {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto env = Environment::sample(kHalf, Box::centered(2, 12), 100 + k);
    const WeightParams p{0.2 + rng.uniform(), 0.3 * rng.uniform(), {rng.uniform() - 0.5, rng.uniform() - 0.5, 0}};
    const auto table = quenched_dp(env, p, 10);
    for (int n : {0, 1, 3, 6, 10}) {
      const auto e = enumerate_partition(env, p, n);
      REQUIRE(rel_err(table.log_total(n), e.log_total) <= 1e-10);
      for (const auto& [x, v] : e.log_by_endpoint) REQUIRE(rel_err(table.log_at(n, x), v) <= 1e-10);
    }
  }
}

TEST_CASE("DP table invariants") {
  const auto env = Environment::sample(kHalf, Box::centered(2, 30), 4);
  const WeightParams p{1.0, 0.2, {0.5, -0.1, 0}};
  const auto t = quenched_dp(env, p, 20);
  // Step recursion at interior sites.
  const auto steps = unit_steps(2);
  for (int n = 1; n <= 20; n += 3)
    for (const Point x : {Point{{1, 0, 0}}, Point{{3, -2, 0}}, Point{{-5, 4, 0}}}) {
      double s = 0;
      for (const auto& e : steps) s += std::exp(t.log_at(n - 1, x - e) + dot(p.h, e)) / 4.0;
      const double expect = std::log(s) - p.lambda - p.beta * env.at(x);
      if (std::isfinite(expect)) CHECK(rel_err(t.log_at(n, x), expect) <= 1e-12);
    }
  CHECK(t.log_absorbed(20) == kNegInf);

  const WeightParams free{0.0, 0.2, {0.5, -0.1, 0}};
  const auto t1 = quenched_dp(env, free, 15), t2 = quenched_dp(Environment::sample(kHalf, env.box(), 77), free, 15);
  const auto zero = Environment::sample(PotentialDistribution::bernoulli(0.0, 1.0, {.degenerate_ok = true}), env.box(), 5);
  const auto t3 = quenched_dp(zero, WeightParams{1.3, 0.2, {0.5, -0.1, 0}}, 15);
  for (int n = 0; n <= 15; ++n) {
    CHECK(t1.log_total(n) == t2.log_total(n));
    CHECK(rel_err(t1.log_total(n), t3.log_total(n)) < 1e-13);
  }
  const auto ann = annealed_dp(kHalf, 2, free, 15);
  CHECK(ann.log_total(15) == t1.log_total(15));
  CHECK_THROWS(annealed_dp(kHalf, 2, p, 5));
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  const auto env = Environment::sample(kHalf, Box::centered(2, 60), 5);
  const WeightParams p{0.7, 0.05, {0.2, 0.1, 0}};
  const auto a = quenched_dp(env, p, 50, std::nullopt, KernelMode::Serial);
  const auto b = quenched_dp(env, p, 50, std::nullopt, KernelMode::Parallel);
  std::ostringstream sa, sb;
  a.write_csv(sa);
  b.write_csv(sb);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("reference measure is normalized up to n = 20") {
  const auto t = annealed_dp(kHalf, 2, WeightParams{}, 20);
  for (int n = 0; n <= 20; ++n) CHECK(std::abs(t.log_total(n)) < 1e-12);
  const Vec h{0.3, 0.9, 0};
  const auto th = annealed_dp(kHalf, 2, WeightParams{0, 0, h}, 20);
  CHECK(th.log_total(20) == doctest::Approx(20 * std::log(mean_cosh(h, 2))).epsilon(1e-12));
}

TEST_CASE("CSV layout") {
  const auto t = annealed_dp(kHalf, 1, WeightParams{}, 2, Box::centered(1, 2));
  std::ostringstream os;
  t.write_csv(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "n,x1,log_value,kind,truncated_flag");
  int rows = 0, truncated = 0;
  while (std::getline(is, line)) {
    ++rows;
    truncated += line.back() == '1';
  }
  CHECK(rows == 1 + 2 + 3);
  CHECK(truncated == 2);
}

TEST_CASE("conjugate sum in d = 1 matches the first-passage generating function") {
  for (double lambda : {0.1, 0.5, 1.5}) {
    const double u = std::exp(-lambda);
    const double F = (1 - std::sqrt(1 - u * u)) / u;
    std::vector<Point> targets;
    for (int N : {0, 1, 5, 40, 200}) targets.push_back(Point{{N, 0, 0}});
    const auto r = conjugate_partition(nullptr, Box::centered(1, 600), WeightParams{0, lambda, {}}, targets);
    CHECK(r.converged);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const int N = targets[i][0];
      const double exact = N * std::log(F) - 0.5 * std::log1p(-u * u);
      CHECK(rel_err(r.log_value[i], exact) < 1e-8);
    }
    // Lyapunov-type rate at N = 200.
    CHECK(std::abs(-r.log_value.back() / 200 - (-std::log(F))) <= 0.01 * (-std::log(F)));
  }
  CHECK_THROWS(conjugate_partition(nullptr, Box::centered(1, 5), WeightParams{0, 0, {}}, std::vector<Point>{}));
}

TEST_CASE("conjugate sums: positivity, tails and monotonicity in beta") {
  const auto env = Environment::sample(kHalf, Box::centered(2, 40), 6);
  const Point origin{}, x{{5, 1, 0}};
  const std::vector<Point> targets{origin, x};
  const auto r = conjugate_partition(&env, env.box(), WeightParams{1.0, 0.3, {0.4, 0, 0}}, targets);
  CHECK(r.converged);
  CHECK(r.log_value[0] >= 0.0);
  CHECK(r.log_tail_bound <= std::log(1e-10) + r.log_value[1]);

  double prev = kInf;
  for (double beta : {0.0, 0.5, 1.0, 2.0}) {
    const auto a = conjugate_enumerate(kHalf, 2, WeightParams{beta, 1.0, {}}, Point{{2, 1, 0}}, 13);
    CHECK(a.log_value < prev);
    prev = a.log_value;
  }
  // Enumeration and DP agree at beta = 0 up to the reported tail.
  const WeightParams p{0.0, 1.0, {0.2, 0, 0}};
  const auto e = conjugate_enumerate(kHalf, 2, p, Point{{2, 1, 0}}, 14);
  const Point t{{2, 1, 0}};
  const auto d = conjugate_partition(nullptr, Box::centered(2, 60), p, std::span(&t, 1));
  CHECK(std::exp(d.log_value[0]) - std::exp(e.log_value) >= -1e-15);
  CHECK(std::exp(d.log_value[0]) - std::exp(e.log_value) <= std::exp(e.log_tail_bound));
}

TEST_CASE("annealed partition is the exact average of quenched ones") {
  // Average over every Bernoulli environment on the sites a path can reach.
  const auto check = [](int dim, int n, const PotentialDistribution& dist, double p1) {
    const Box box = Box::centered(dim, n);
    const WeightParams p{0.9, 0.1, {0.3, dim > 1 ? -0.2 : 0.0, 0}};
    std::vector<std::size_t> sites;
    for (std::size_t k = 0; k < box.size(); ++k)
      if (l1(box.point(k)) <= n) sites.push_back(k);
    double avg = 0;
    for (std::uint64_t mask = 0; mask < (1ull << sites.size()); ++mask) {
      std::vector<double> v(box.size(), 0.0);
      double prob = 1;
      for (std::size_t i = 0; i < sites.size(); ++i) {
        const bool one = (mask >> i) & 1u;
        v[sites[i]] = one ? 1.0 : 0.0;
        prob *= one ? p1 : 1 - p1;
      }
      const auto env = Environment::from_values(dist, box, 0, v);
      avg += prob * std::exp(enumerate_partition(env, p, n, {}, false).log_total);
    }
    const double ann = enumerate_partition(dist, dim, p, n).log_total;
    CHECK(rel_err(ann, std::log(avg)) < 1e-12);
  };
  check(1, 5, kHalf, 0.5);
  const auto skew = PotentialDistribution::bernoulli(0.3, 1.0);
  check(1, 6, skew, 0.3);
  check(2, 2, skew, 0.3);
}

TEST_CASE("Jensen ordering of quenched and annealed free energies") {
  for (const auto& [beta, h, n] : {std::tuple{0.5, 0.0, 8}, std::tuple{1.0, 0.5, 10}, std::tuple{2.0, 1.0, 10}}) {
    const WeightParams p{beta, 0.0, {h, 0, 0}};
    Welford w;
    for (int r = 0; r < 200; ++r) {
      const auto env = Environment::sample(kHalf, default_dp_box(2, n), derive_seed(9, stream::kReplica, static_cast<std::uint64_t>(r)));
      w.add(quenched_dp(env, p, n, std::nullopt, KernelMode::Serial).log_total(n));
    }
    const double log_a = enumerate_partition(kHalf, 2, p, n).log_total;
    CHECK(w.mean() <= log_a + 4 * w.stderr_of_mean());
    CHECK(w.mean() < log_a);
  }
}

TEST_CASE("ensemble statistics") {
  const std::vector<Vec> alphas{{0, 0, 0}, {0.3, 0, 0}, {0.2, -0.5, 0}};
  const auto s0 = ensemble_stats(kHalf, 2, WeightParams{}, 8, alphas);
  CHECK(std::abs(s0.mean[0]) < 1e-14);
  CHECK(std::abs(s0.mean[1]) < 1e-14);
  CHECK(s0.cov[0][0] == doctest::Approx(4.0));  // n/d per axis for the simple walk
  CHECK(std::abs(s0.char_fn[0] - std::complex<double>(1, 0)) < 1e-14);

  const auto env = Environment::sample(kHalf, Box::centered(2, 12), 7);
  const WeightParams p{1.0, 0.0, {0.6, 0.2, 0}};
  const auto se = ensemble_stats(env, p, 10, alphas);
  const auto sd = ensemble_stats(quenched_dp(env, p, 10), 10, alphas);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(se.mean[i] == doctest::Approx(sd.mean[i]).epsilon(1e-10));
    for (std::size_t j = 0; j < 2; ++j) CHECK(se.cov[i][j] == doctest::Approx(sd.cov[i][j]).epsilon(1e-10));
  }
  for (std::size_t a = 0; a < alphas.size(); ++a) CHECK(std::abs(se.char_fn[a] - sd.char_fn[a]) < 1e-10);
  // Covariance symmetric and positive semi-definite.
  CHECK(se.cov[0][1] == doctest::Approx(se.cov[1][0]));
  CHECK(se.cov[0][0] * se.cov[1][1] - se.cov[0][1] * se.cov[1][0] >= -1e-12);
  CHECK(se.loop_moment.has_value());
  CHECK(!sd.loop_moment.has_value());
  CHECK(*se.loop_moment >= 10.0);  // sum of ell^2 >= sum of ell = n
}

TEST_CASE("exact loop moment of the killed walk") {
  // Green-function formula against truncated enumeration (tail < e^{-30}).
  const WeightParams p{0.0, 2.0, {}};
  for (const Point x : {Point{{2, 0, 0}}, Point{{1, 1, 0}}, Point{{3, 1, 0}}}) {
    const auto e = conjugate_enumerate(kHalf, 2, p, x, 14);
    CHECK(srw_conjugate_loop_moment(2, 2.0, x) == doctest::Approx(e.loop_moment).epsilon(1e-8));
  }
  const auto e1 = conjugate_enumerate(kHalf, 1, WeightParams{0.0, 1.5, {}}, Point{{3, 0, 0}}, 26);
  CHECK(srw_conjugate_loop_moment(1, 1.5, Point{{3, 0, 0}}) == doctest::Approx(e1.loop_moment).epsilon(1e-6));
  // Linear growth in the distance at lambda = 0.5.
  std::vector<double> ratio;
  for (int k = 4; k <= 10; ++k) ratio.push_back(srw_conjugate_loop_moment(2, 0.5, Point{{k, 0, 0}}) / k);
  for (std::size_t i = 1; i < ratio.size(); ++i) CHECK(std::abs(ratio[i] / ratio[0] - 1) < 0.5);
}

TEST_CASE("exact sampling") {
  const auto t = annealed_dp(kHalf, 2, WeightParams{}, 12);
  const auto paths = sample_paths(t, nullptr, 1, 100000, 11);
  std::array<int, 4> counts{};
  const auto steps = unit_steps(2);
  for (const auto& path : paths)
    for (std::size_t s = 0; s < 4; ++s) counts[s] += path.back() == steps[s];
  for (int c : counts) CHECK(std::abs(c - 25000) / std::sqrt(100000 * 0.25 * 0.75) < 4);

  const auto env = Environment::sample(kHalf, Box::centered(2, 14), 12);
  const WeightParams p{1.0, 0.1, {0.7, -0.3, 0}};
  const auto table = quenched_dp(env, p, 12);
  const auto stats = ensemble_stats(table, 12);
  const int count = 20000;
  const auto qs = sample_paths(table, &env, 12, count, 13);
  CHECK(qs == sample_paths(table, &env, 12, count, 13));
  for (int axis = 0; axis < 2; ++axis) {
    Welford w;
    for (const auto& path : qs) w.add(path.back()[axis]);
    const double sd = std::sqrt(stats.cov[static_cast<std::size_t>(axis)][static_cast<std::size_t>(axis)]);
    CHECK(std::abs(w.mean() - stats.mean[static_cast<std::size_t>(axis)]) <= 4 * sd / std::sqrt(count));
  }
  for (const auto& path : qs) REQUIRE(std::isfinite(log_quenched_weight(path, env, p)));

  const WeightParams pa{1.0, 0.0, {0.5, 0, 0}};
  const auto as = sample_paths(kHalf, 2, pa, 8, count, 14);
  const auto astats = ensemble_stats(kHalf, 2, pa, 8);
  Welford w;
  for (const auto& path : as) w.add(path.back()[0]);
  CHECK(std::abs(w.mean() - astats.mean[0]) <= 4 * std::sqrt(astats.cov[0][0] / count));
  CHECK(as == sample_paths(kHalf, 2, pa, 8, count, 14));
  CHECK_THROWS(sample_paths(kHalf, 2, pa, 11, 1, 0));
}
