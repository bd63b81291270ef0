#include "polylab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "polylab/roots.hpp"

namespace polylab {

double euclid(const Vec& x) { return std::sqrt(dot(x, x)); }

SrwNorm::SrwNorm(int dim, double lambda) : dim_(dim), lambda_(lambda) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension must be 1..3");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
}

double SrwNorm::scale(const Vec& x) const {
  double m = 0.0;
  for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(x[static_cast<std::size_t>(i)]));
  const double target = dim_ * std::exp(lambda_);
  const auto g = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += std::hypot(1.0, x[static_cast<std::size_t>(i)] * t);
    return s - target;
  };
  const double hi = 1.01 * std::sqrt(target * target - 1.0) / m;
  return bracketed_root(g, 0.0, hi);
}

double SrwNorm::operator()(const Vec& x) const {
  if (euclid(x) == 0.0) return 0.0;
  const double t = scale(x);
  double a = 0.0;
  for (int i = 0; i < dim_; ++i) a += x[static_cast<std::size_t>(i)] * std::asinh(x[static_cast<std::size_t>(i)] * t);
  return a;
}

Vec SrwNorm::dual(const Vec& x) const {
  Vec h{};
  if (euclid(x) == 0.0) return h;
  const double t = scale(x);
  for (int i = 0; i < dim_; ++i) h[static_cast<std::size_t>(i)] = std::asinh(x[static_cast<std::size_t>(i)] * t);
  return h;
}

double SrwNorm::polar(const Vec& h) const {
  double m = 0.0;
  for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(h[static_cast<std::size_t>(i)]));
  if (m == 0.0) return 0.0;
  const double e = std::exp(lambda_);
  const auto f = [&](double s) {
    double c = 0.0;
    for (int i = 0; i < dim_; ++i) c += std::cosh(h[static_cast<std::size_t>(i)] / s);
    return c / dim_ - e;
  };
  return bracketed_root(f, 0.99 * m / std::acosh(dim_ * e), 1.01 * m / std::acosh(e));
}

std::string SrwNorm::describe() const {
  std::ostringstream os;
  os << "srw(d=" << dim_ << ",lambda=" << lambda_ << ")";
  return os.str();
}

PolygonNorm::PolygonNorm(int dim, std::vector<Vec> directions, std::vector<double> values, std::string origin)
    : dim_(dim), origin_(std::move(origin)) {
  if (dim < 1 || dim > 2) throw std::invalid_argument("polygon norms are implemented for d <= 2");
  if (directions.size() != values.size() || directions.empty()) throw std::invalid_argument("empty or mismatched fan");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("fan values must be positive and finite");
  std::vector<std::size_t> order(directions.size());
  std::iota(order.begin(), order.end(), 0);
  const auto ang = [&](std::size_t k) { return std::atan2(directions[k][1], directions[k][0]); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ang(a) < ang(b); });
  for (std::size_t k : order) {
    dirs_.push_back(directions[k]);
    vals_.push_back(values[k]);
    angle_.push_back(ang(k));
  }
  if (dim == 1) {
    const bool pos = std::any_of(dirs_.begin(), dirs_.end(), [](const Vec& d) { return d[0] > 0; });
    const bool neg = std::any_of(dirs_.begin(), dirs_.end(), [](const Vec& d) { return d[0] < 0; });
    if (!pos || !neg) throw std::invalid_argument("fan must contain both orientations");
  } else {
    for (std::size_t k = 0; k < angle_.size(); ++k) {
      const double next = k + 1 < angle_.size() ? angle_[k + 1] : angle_[0] + 2 * std::numbers::pi;
      if (next - angle_[k] >= std::numbers::pi) throw std::invalid_argument("fan does not surround the origin");
    }
  }
}

double PolygonNorm::operator()(const Vec& x) const {
  if (euclid(x) == 0.0) return 0.0;
  if (dim_ == 1) {
    for (std::size_t k = 0; k < dirs_.size(); ++k)
      if ((dirs_[k][0] > 0) == (x[0] > 0)) return x[0] / dirs_[k][0] * vals_[k];
  }
  const double th = std::atan2(x[1], x[0]);
  const std::size_t n = dirs_.size();
  std::size_t k = n - 1;  // wrap-around sector by default
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (angle_[i] <= th && th <= angle_[i + 1]) {
      k = i;
      break;
    }
  const Vec& a = dirs_[k];
  const Vec& b = dirs_[(k + 1) % n];
  const double det = a[0] * b[1] - a[1] * b[0];
  const double s = (x[0] * b[1] - x[1] * b[0]) / det;
  const double t = (a[0] * x[1] - a[1] * x[0]) / det;
  return s * vals_[k] + t * vals_[(k + 1) % n];
}

double PolygonNorm::polar(const Vec& h) const {
  double best = 0.0;
  for (std::size_t k = 0; k < dirs_.size(); ++k) best = std::max(best, dot(h, dirs_[k]) / vals_[k]);
  return best;
}

std::vector<Point> direction_fan(int dim) {
  std::vector<Point> fan;
  if (dim == 1) return {Point{{1, 0, 0}}, Point{{-1, 0, 0}}};
  if (dim == 2) {
    for (int a = -3; a <= 3; ++a)
      for (int b = -3; b <= 3; ++b) {
        const Point p{{a, b, 0}};
        if (l1(p) == 0 || l1(p) > 3 || std::gcd(a, b) != 1) continue;
        fan.push_back(p);
      }
    return fan;
  }
  if (dim == 3) {
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c)
          if (a || b || c) fan.push_back(Point{{a, b, c}});
    return fan;
  }
  throw std::invalid_argument("dimension must be 1..3");
}

double polar_norm(const NormEvaluator& norm, const Vec& h, const std::vector<Point>& fan) {
  if (fan.empty()) throw std::invalid_argument("empty direction fan");
  double best = 0.0;
  for (const auto& d : fan) best = std::max(best, dot(h, d) / norm(to_vec(d)));
  return best;
}

}  // namespace polylab
