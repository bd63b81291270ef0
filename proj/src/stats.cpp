#include "polylab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "polylab/rng.hpp"

namespace polylab {

double Welford::stderr_of_mean() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  Welford w;
  for (double x : xs) w.add(x);
  return w.variance();
}

LineFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || (!w.empty() && w.size() != n))
    throw std::invalid_argument("fit_line needs >= 2 matching points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
    syy += wi * (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += wi * r * r;
  }
  f.r2 = syy > 0 ? 1.0 - rss / syy : 1.0;
  if (n > 2) {
    const double s2 = rss / static_cast<double>(n - 2) / (sw / static_cast<double>(n));
    f.slope_se = std::sqrt(std::max(0.0, s2 / (sxx / (sw / static_cast<double>(n)))));
  }
  return f;
}

BootstrapResult bootstrap(std::size_t n, int resamples, std::uint64_t seed,
                          const std::function<double(std::span<const std::size_t>)>& stat) {
  if (n == 0 || resamples < 2) throw std::invalid_argument("bootstrap needs data and >= 2 resamples");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  BootstrapResult r;
  r.estimate = stat(idx);
  Rng rng(derive_seed(seed, stream::kBootstrap));
  std::vector<double> reps;
  reps.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
    reps.push_back(stat(idx));
  }
  Welford w;
  for (double v : reps) w.add(v);
  r.stderr = std::sqrt(w.variance());
  std::sort(reps.begin(), reps.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(reps.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, reps.size() - 1);
    return reps[lo] + (pos - static_cast<double>(lo)) * (reps[hi] - reps[lo]);
  };
  r.ci95 = {at(0.025), at(0.975)};
  return r;
}

double ordered_sum(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b) || (std::abs(a) == std::abs(b) && a < b);
  });
  double s = 0;
  for (double x : xs) s += x;
  return s;
}

}  // namespace polylab
