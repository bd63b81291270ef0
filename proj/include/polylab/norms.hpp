#pragma once

#include <memory>
#include <string>
#include <vector>

#include "polylab/lattice.hpp"

namespace polylab {

/// A norm on R^d (Lyapunov exponent at a fixed mass), evaluated on real vectors.
class NormEvaluator {
 public:
  virtual ~NormEvaluator() = default;
  virtual int dim() const = 0;
  virtual double operator()(const Vec& x) const = 0;
  /// Dual norm max { h.x : norm(x) <= 1 }.
  virtual double polar(const Vec& h) const = 0;
  /// Short description recorded in output metadata.
  virtual std::string describe() const = 0;
};

/// Exact Lyapunov norm of the simple random walk killed at rate lambda:
///   norm(x) = max { h.x : (1/d) sum_i cosh h_i <= e^lambda }.
class SrwNorm final : public NormEvaluator {
 public:
  SrwNorm(int dim, double lambda);
  int dim() const override { return dim_; }
  double lambda() const { return lambda_; }
  double operator()(const Vec& x) const override;
  /// The maximizing h (on the boundary of the dual ball); zero for x = 0.
  Vec dual(const Vec& x) const;
  /// Exact polar norm: the gauge of the dual ball { (1/d) sum cosh h_i <= e^lambda }.
  double polar(const Vec& h) const override;
  std::string describe() const override;

 private:
  double scale(const Vec& x) const;  // nu with sum sqrt(1 + (x_i/nu)^2) = d e^lambda
  int dim_;
  double lambda_;
};

/// Norm whose unit ball is the convex hull of d_k / a_k over a fan of
/// directions d_k with measured values a_k (d <= 2). Values between fan
/// directions are interpolated linearly in the cone they span.
class PolygonNorm final : public NormEvaluator {
 public:
  PolygonNorm(int dim, std::vector<Vec> directions, std::vector<double> values, std::string origin = "fan");
  int dim() const override { return dim_; }
  double operator()(const Vec& x) const override;
  /// Exact for the polygon: the maximum is attained at a vertex.
  double polar(const Vec& h) const override;
  std::string describe() const override { return origin_; }
  const std::vector<Vec>& directions() const { return dirs_; }
  const std::vector<double>& values() const { return vals_; }

 private:
  int dim_;
  std::vector<Vec> dirs_;  // sorted by angle in d = 2
  std::vector<double> vals_;
  std::vector<double> angle_;
  std::string origin_;
};

/// Lattice directions with coprime coordinates and l1 length <= 3 in d = 2
/// (16 directions); +-e1 in d = 1; coprime points of the unit cube in d = 3.
std::vector<Point> direction_fan(int dim);

/// Largest h.x / norm(x) over the fan: a lower bound on the polar norm that is
/// exact for a PolygonNorm built on the same fan.
double polar_norm(const NormEvaluator& norm, const Vec& h, const std::vector<Point>& fan);

/// Euclidean length.
double euclid(const Vec& x);

}  // namespace polylab
