#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace polylab {

inline constexpr int kMaxDim = 3;

/// Integer lattice point in Z^d, d <= 3. Unused trailing coordinates stay 0.
struct Point {
  std::array<int, kMaxDim> c{};

  constexpr int& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  constexpr int operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  friend constexpr Point operator+(Point a, const Point& b) {
    for (int i = 0; i < kMaxDim; ++i) a[i] += b[i];
    return a;
  }
  friend constexpr Point operator-(Point a, const Point& b) {
    for (int i = 0; i < kMaxDim; ++i) a[i] -= b[i];
    return a;
  }
  friend constexpr Point operator-(Point a) {
    for (int i = 0; i < kMaxDim; ++i) a[i] = -a[i];
    return a;
  }
  friend constexpr Point operator*(int s, Point a) {
    for (int i = 0; i < kMaxDim; ++i) a[i] *= s;
    return a;
  }
  friend constexpr bool operator==(const Point&, const Point&) = default;
  friend constexpr auto operator<=>(const Point&, const Point&) = default;
};

using Vec = std::array<double, kMaxDim>;

inline int l1(const Point& p) { return std::abs(p[0]) + std::abs(p[1]) + std::abs(p[2]); }

inline double dot(const Vec& h, const Point& p) {
  return h[0] * p[0] + h[1] * p[1] + h[2] * p[2];
}
inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec to_vec(const Point& p) {
  return {static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])};
}

inline Point unit(int axis, int sign = 1) {
  Point p;
  p[axis] = sign;
  return p;
}

/// The 2d nearest-neighbour steps, ordered +e1, -e1, +e2, -e2, ...
inline std::vector<Point> unit_steps(int dim) {
  std::vector<Point> s;
  s.reserve(static_cast<std::size_t>(2 * dim));
  for (int i = 0; i < dim; ++i) {
    s.push_back(unit(i, +1));
    s.push_back(unit(i, -1));
  }
  return s;
}

std::string to_string(const Point& p, int dim);

/// Axis-aligned lattice box [lo_i, hi_i] in each of the first `dim` coordinates.
class Box {
 public:
  Box() = default;
  Box(int dim, Point lo, Point hi);

  /// Box [-r, r]^d.
  static Box centered(int dim, int radius);

  int dim() const { return dim_; }
  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }
  std::size_t size() const { return size_; }
  int extent(int axis) const { return hi_[axis] - lo_[axis] + 1; }

  bool contains(const Point& p) const {
    for (int i = 0; i < dim_; ++i)
      if (p[i] < lo_[i] || p[i] > hi_[i]) return false;
    return true;
  }
  bool contains(const Box& other) const { return contains(other.lo_) && contains(other.hi_); }
  bool on_boundary(const Point& p) const {
    for (int i = 0; i < dim_; ++i)
      if (p[i] == lo_[i] || p[i] == hi_[i]) return true;
    return false;
  }

  /// Row-major linear index, last axis fastest. Caller guarantees contains(p).
  std::size_t index(const Point& p) const {
    std::size_t idx = 0;
    for (int i = 0; i < dim_; ++i)
      idx = idx * static_cast<std::size_t>(extent(i)) + static_cast<std::size_t>(p[i] - lo_[i]);
    return idx;
  }
  Point point(std::size_t idx) const {
    Point p;
    for (int i = dim_ - 1; i >= 0; --i) {
      const auto e = static_cast<std::size_t>(extent(i));
      p[i] = lo_[i] + static_cast<int>(idx % e);
      idx /= e;
    }
    return p;
  }
  /// Linear-index offset of a unit step; valid for interior sites.
  std::ptrdiff_t stride(int axis) const {
    std::ptrdiff_t s = 1;
    for (int i = dim_ - 1; i > axis; --i) s *= extent(i);
    return s;
  }

  /// Canonical textual form "lo1:hi1,lo2:hi2".
  std::string str() const;
  static Box parse(const std::string& text);

  friend bool operator==(const Box& a, const Box& b) {
    return a.dim_ == b.dim_ && a.lo_ == b.lo_ && a.hi_ == b.hi_;
  }

 private:
  int dim_ = 0;
  Point lo_{}, hi_{};
  std::size_t size_ = 0;
};

}  // namespace polylab
