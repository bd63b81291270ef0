#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace polylab {

/// Streaming mean/variance (Welford).
class Welford {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_of_mean() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
};

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;  // from residuals, 0 when the fit is exact or has 2 points
  double r2 = 1.0;
};

/// Weighted least squares y = a + b x. Empty weights mean unit weights.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> w = {});

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool strictly_below(double v) const { return hi < v; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  double width() const { return hi - lo; }
};

/// Percentile bootstrap over `n` units: `stat` receives resampled unit indices.
/// Resampling uses its own stream so results are reproducible given `seed`.
struct BootstrapResult {
  double estimate = 0.0;
  double stderr = 0.0;
  Interval ci95;
};
BootstrapResult bootstrap(std::size_t n, int resamples, std::uint64_t seed,
                          const std::function<double(std::span<const std::size_t>)>& stat);

/// Sorted-order summation; result does not depend on how the inputs were produced.
double ordered_sum(std::vector<double> xs);

}  // namespace polylab
