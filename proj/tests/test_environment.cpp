#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "polylab/environment.hpp"
#include "polylab/rng.hpp"

using namespace polylab;

namespace {
const PotentialDistribution kHalf = PotentialDistribution::bernoulli(0.5, 1.0);
}

TEST_CASE("distribution validation") {
  CHECK_THROWS(PotentialDistribution::discrete({{0.5, 0.5}, {1.0, 0.5}}));  // 0 not in support
  CHECK_THROWS(PotentialDistribution::discrete({{0.0, 1.0}}));              // point mass
  CHECK_NOTHROW(PotentialDistribution::discrete({{0.0, 1.0}}, {.degenerate_ok = true}));
  CHECK_THROWS(PotentialDistribution::discrete({{0.0, 0.5}, {kInf, 0.5}}));
  CHECK_NOTHROW(PotentialDistribution::discrete({{0.0, 0.5}, {kInf, 0.5}}, {.traps_ok = true}));
  CHECK_THROWS(PotentialDistribution::discrete({{0.0, 0.5}, {1.0, 0.4}}));  // mass 0.9
  CHECK_THROWS(PotentialDistribution::bernoulli(0.0, 1.0));                  // degenerate
  CHECK_THROWS(PotentialDistribution::bernoulli(1.0, 1.0));                  // 0 not in support
  CHECK_NOTHROW(PotentialDistribution::bernoulli(1.0, 1.0, {.degenerate_ok = true, .unnormalized_ok = true}));
  CHECK_THROWS(PotentialDistribution::uniform(0.0));
}

TEST_CASE("spec strings round trip") {
  for (const char* s : {"bernoulli(0.5,1)", "discrete(0:0.5,inf:0.5)+traps-ok", "uniform(2)",
                        "discrete(0:0.25,0.5:0.25,3:0.5)", "bernoulli(0,1)+degenerate-ok"}) {
    const auto d = PotentialDistribution::parse(s);
    CHECK(d.spec() == s);
    CHECK(PotentialDistribution::parse(d.spec()) == d);
  }
  CHECK_THROWS(PotentialDistribution::parse("gamma(1)"));
  CHECK_THROWS(PotentialDistribution::parse("bernoulli(0.5,1)+fast"));
}

TEST_CASE("sampling trivial fields") {
  const Box box = Box::centered(2, 3);
  const auto zero1 = Environment::sample(PotentialDistribution::bernoulli(0.0, 1.0, {.degenerate_ok = true}), box, 7);
  const auto zero2 = Environment::sample(PotentialDistribution::discrete({{0.0, 1.0}}, {.degenerate_ok = true}), box, 9);
  for (std::size_t i = 0; i < box.size(); ++i) {
    CHECK(zero1.at_index(i) == 0.0);
    CHECK(zero2.at_index(i) == 0.0);
  }
  const auto a = Environment::sample(kHalf, box, 42);
  const auto b = Environment::sample(kHalf, box, 42);
  const auto c = Environment::sample(kHalf, box, 43);
  CHECK(a == b);
  CHECK_FALSE(a.values().size() == 0);
  bool differs = false;
  for (std::size_t i = 0; i < box.size(); ++i) differs |= a.at_index(i) != c.at_index(i);
  CHECK(differs);
  CHECK_THROWS(a.at(Point{{4, 0, 0}}));
}

TEST_CASE("sub-box regeneration is stable") {
  const auto big = Environment::sample(kHalf, Box::centered(2, 6), 5);
  const auto small = Environment::sample(kHalf, Box(2, Point{{-1, 2, 0}}, Point{{3, 4, 0}}), 5);
  for (std::size_t i = 0; i < small.box().size(); ++i) {
    const Point p = small.box().point(i);
    CHECK(small.at(p) == big.at(p));
  }
}

TEST_CASE("mgf closed forms") {
  for (double p : {0.2, 0.5, 0.9}) {
    const auto d = PotentialDistribution::bernoulli(p, 1.0);
    for (double s : {0.0, 0.1, 1.0, 3.0}) CHECK(d.mgf_neg(s) == doctest::Approx(1 - p + p * std::exp(-s)).epsilon(1e-15));
  }
  const auto traps = PotentialDistribution::parse("discrete(0:0.5,inf:0.5)+traps-ok");
  CHECK(traps.mgf_neg(1.0) == 0.5);
  CHECK(traps.mgf_neg(0.0) == 1.0);
  CHECK_THROWS(kHalf.mgf_neg(-0.1));
  const auto u = PotentialDistribution::uniform(2.0);
  CHECK(u.mgf_neg(1.5) == doctest::Approx((1 - std::exp(-3.0)) / 3.0).epsilon(1e-14));
}

TEST_CASE("phi closed forms and attractivity") {
  const auto point1 = PotentialDistribution::bernoulli(1.0, 1.0, {.degenerate_ok = true, .unnormalized_ok = true});
  for (int ell : {0, 1, 5, 20}) CHECK(point1.phi(0.7, ell) == doctest::Approx(0.7 * ell).epsilon(1e-14));
  CHECK(kHalf.phi(1.0, 2) <= 2 * kHalf.phi(1.0, 1));
  const PotentialDistribution dists[] = {kHalf, PotentialDistribution::uniform(2.0),
                                         PotentialDistribution::parse("discrete(0:0.3,0.5:0.3,inf:0.4)+traps-ok")};
  for (const auto& d : dists)
    for (double beta : {0.1, 0.5, 1.0, 2.0})
      for (int l = 0; l <= 50; ++l)
        for (int m = 0; m <= 50; ++m) {
          CHECK(d.phi(beta, 0) == 0.0);
          REQUIRE(d.phi(beta, l + m) <= d.phi(beta, l) + d.phi(beta, m) + 1e-12);
        }
}

TEST_CASE("phi grows sublinearly with an atom at zero") {
  for (double beta : {0.5, 1.0}) {
    double prev = kHalf.phi(beta, 1);
    for (int ell : {10, 100, 1000}) {
      const double r = kHalf.phi(beta, ell) / ell;
      CHECK(r <= kHalf.phi(beta, 1));
      CHECK(r < prev);
      prev = r;
    }
    CHECK(prev <= -std::log(kHalf.prob_zero()) / 1000 + 1e-12);
  }
}

TEST_CASE("tilt function") {
  CHECK(kHalf.tilt_g(0.0) == 0.0);
  for (double p : {0.3, 0.5}) {
    const auto b1 = PotentialDistribution::bernoulli(p, 1.0);
    const auto b3 = PotentialDistribution::bernoulli(p, 3.0);
    for (double delta : {-0.7, -0.1, 0.05, 0.2, 2.0}) {
      const double want = -std::log(1 - p + p * std::exp(-delta));
      CHECK(b1.tilt_g(delta) == doctest::Approx(want).epsilon(1e-14));
      CHECK(b3.tilt_g(delta) == doctest::Approx(want).epsilon(1e-14));
    }
  }
}

TEST_CASE("first-order cancellation of the tilt cost") {
  const PotentialDistribution dists[] = {kHalf, PotentialDistribution::uniform(0.5), PotentialDistribution::uniform(3.0)};
  for (const auto& d : dists)
    for (double alpha : {0.25, 0.5, 0.75}) {
      const double a = alpha / (1 - alpha);
      const auto cost = [&](double delta) { return -d.tilt_g(-a * delta) - a * d.tilt_g(delta); };
      CHECK(cost(0.0) == 0.0);
      const double step = 1e-4;
      CHECK(std::abs((cost(step) - cost(-step)) / (2 * step)) < 1e-6);
    }
}

TEST_CASE("tilted sampling") {
  const Box box = Box::centered(2, 8);
  const TiltSpec none{0.0, Box(2, Point{{0, -2, 0}}, Point{{6, 2, 0}})};
  CHECK(Environment::sample_tilted(kHalf, none, box, 11).values().size() == box.size());
  const auto base = Environment::sample(kHalf, box, 11);
  const auto same = Environment::sample_tilted(kHalf, none, box, 11);
  for (std::size_t i = 0; i < box.size(); ++i) CHECK(base.at_index(i) == same.at_index(i));

  CHECK_THROWS(Environment::sample_tilted(kHalf, TiltSpec{0.1, Box::centered(2, 9)}, box, 1));

  // Empirical tilted atom probability over 1e5 sites.
  const double p = 0.5, delta = 0.8;
  const Box wide(1, Point{{0, 0, 0}}, Point{{99999, 0, 0}});
  const auto env = Environment::sample_tilted(PotentialDistribution::bernoulli(p, 1.0), TiltSpec{delta, wide}, wide, 3);
  double ones = 0;
  for (double v : env.values()) ones += v;
  const double n = static_cast<double>(wide.size());
  const double want = p * std::exp(-delta) / (1 - p + p * std::exp(-delta));
  CHECK(std::abs(ones / n - want) / std::sqrt(want * (1 - want) / n) < 4.0);

  // A negative tilt pushes mass toward the obstacle.
  const auto up = Environment::sample_tilted(PotentialDistribution::bernoulli(p, 1.0), TiltSpec{-delta, wide}, wide, 3);
  double ups = 0;
  for (double v : up.values()) ups += v;
  const double want_up = p * std::exp(delta) / (1 - p + p * std::exp(delta));
  CHECK(std::abs(ups / n - want_up) / std::sqrt(want_up * (1 - want_up) / n) < 4.0);
  CHECK(kHalf.tilted_mean_truncated(-delta) > kHalf.mean_truncated());

  for (const auto& d : {kHalf, PotentialDistribution::uniform(2.0), PotentialDistribution::uniform(0.7)})
    for (double dl : {0.1, 1.0, 5.0}) CHECK(d.tilted_mean_truncated(dl) <= d.mean_truncated());
}

TEST_CASE("tilted uniform inverse CDF") {
  for (double b : {0.6, 2.5}) {
    const auto d = PotentialDistribution::uniform(b);
    const double delta = 1.3;
    // Monte Carlo mean of V^1 under the tilted law against the closed form.
    Rng rng(17);
    double s = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) s += std::min(d.tilted_quantile(rng.uniform(), delta), 1.0);
    CHECK(s / n == doctest::Approx(d.tilted_mean_truncated(delta)).epsilon(5e-3));
  }
}

TEST_CASE("environment file round trip") {
  const auto traps = PotentialDistribution::parse("discrete(0:0.5,2.5:0.25,inf:0.25)+traps-ok");
  const auto env = Environment::sample_tilted(traps, TiltSpec{0.3, Box(2, Point{{0, 0, 0}}, Point{{2, 1, 0}})},
                                              Box::centered(2, 3), 99);
  std::stringstream ss;
  env.write(ss);
  const std::string text = ss.str();
  CHECK(text.find("inf") != std::string::npos);
  const auto back = Environment::read(ss);
  CHECK(back == env);
  std::stringstream again;
  back.write(again);
  CHECK(again.str() == text);

  std::stringstream bad("dim=1\nbox=0:1\ndist=bernoulli(0.5,1)\nseed=1\n0 0\n1 0.5\n");
  CHECK_THROWS(Environment::read(bad));
}

TEST_CASE("number formatting") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, 0.0})
    CHECK(parse_double(format_double(v)) == v);
  CHECK(format_double(kInf) == "inf");
  CHECK(std::isinf(parse_double("inf")));
  CHECK_THROWS(parse_double("1.0x"));
}
