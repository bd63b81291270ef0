#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "polylab/environment.hpp"
#include "polylab/lattice.hpp"
#include "polylab/logsum.hpp"
#include "polylab/norms.hpp"
#include "polylab/path.hpp"

namespace polylab {

/// A norm evaluated on lattice vectors, cached on the box [-radius, radius]^d.
class LatticeNorm {
 public:
  LatticeNorm(std::shared_ptr<const NormEvaluator> norm, int radius);
  int dim() const { return norm_->dim(); }
  const NormEvaluator& evaluator() const { return *norm_; }
  double operator()(const Point& y) const;

 private:
  std::shared_ptr<const NormEvaluator> norm_;
  Box box_;
  std::vector<double> cache_;
};

/// Forward cone { y : norm(y) - h.y < delta norm(y) } and its reflection.
/// Membership is tabulated for |y|_inf <= radius.
class ConeSpec {
 public:
  ConeSpec(std::shared_ptr<const NormEvaluator> norm, const Vec& h, double delta, int radius = 16);

  int dim() const { return norm_.dim(); }
  const Vec& h() const { return h_; }
  double delta() const { return delta_; }
  const LatticeNorm& norm() const { return norm_; }
  std::string describe() const;

  double surcharge(const Point& y) const { return norm_(y) - dot(h_, to_vec(y)); }
  bool forward(const Point& y) const;
  bool backward(const Point& y) const { return forward(Point{} - y); }

 private:
  bool compute(const Point& y) const;
  LatticeNorm norm_;
  Vec h_;
  double delta_;
  Box box_;
  std::vector<std::uint8_t> table_;
};

/// Indices k such that every earlier site lies in the backward cone at the
/// k-th site and every later site in the forward cone.
std::vector<int> cone_points(std::span<const Point> sites, const ConeSpec& cone);
inline std::vector<int> cone_points(const LatticePath& path, const ConeSpec& cone) {
  return cone_points(std::span<const Point>(path.sites()), cone);
}
/// Both endpoints are cone points.
bool cone_confined(std::span<const Point> sites, const ConeSpec& cone);

/// Surcharge norm(y) - h.y for h on the unit sphere of the polar norm.
class Surcharge {
 public:
  /// Throws if |polar(h) - 1| > 1e-6.
  Surcharge(std::shared_ptr<const NormEvaluator> norm, const Vec& h);
  double operator()(const Vec& y) const { return (*norm_)(y) - dot(h_, y); }
  double operator()(const Point& y) const { return (*this)(to_vec(y)); }
  const Vec& h() const { return h_; }

 private:
  std::shared_ptr<const NormEvaluator> norm_;
  Vec h_;
};

/// h scaled onto the unit sphere of the polar norm.
Vec dual_unit(const NormEvaluator& norm, const Vec& h);

/// K-skeleton: u_0 = 0, v_1, u_1, ..., v_m, u_m, then the final site x.
/// Piece i runs u_{i-1} -> v_i inside the K-ball at u_{i-1}; hair i runs v_i -> u_i;
/// the last piece runs u_m -> x without leaving the K-ball at u_m.
struct SkeletonDecomposition {
  double K = 0.0;
  std::vector<int> u;  // times of u_0..u_m
  std::vector<int> v;  // times of v_1..v_m
  LatticePath path;

  int m() const { return static_cast<int>(v.size()); }
  std::vector<LatticePath> pieces() const;  // m + 1 confined pieces
  std::vector<LatticePath> hairs() const;   // m hairs
  /// Sites u_0..u_m followed by x.
  std::vector<Point> vertices() const;
  /// Pieces and hairs concatenated in order.
  LatticePath reassemble() const;
};

/// v_i is the first exit from the K-ball at u_{i-1}; u_i is the step after the
/// last visit to the balls at u_0..u_{i-1} or to v_1..v_i.
SkeletonDecomposition build_skeleton(const LatticePath& path, double K, const LatticeNorm& norm);

/// Sum of surcharges of u_i - u_{i-1} and of x - u_m.
double skeleton_surcharge(const SkeletonDecomposition& s, const Surcharge& sur);

struct IrreducibleSplit {
  std::vector<int> cone;             // cone-point times
  LatticePath prefix;                // 0 -> first cone point (whole path if flagged)
  std::vector<LatticePath> pieces;   // between consecutive cone points
  LatticePath suffix;                // last cone point -> end
  bool flagged = false;              // fewer than two cone points
  bool confined = true;              // every piece has cone points at both ends

  LatticePath reassemble() const;
};
IrreducibleSplit irreducible_decompose(const LatticePath& path, const ConeSpec& cone);

struct SurchargeTailRow {
  Point x{};
  double threshold = 0.0;    // 2 eps |x|_1
  double bound = 0.0;        // e^{-eps |x|_1}
  double exceed_lo = 0.0;    // exceedance among enumerated paths, over the full sum
  double exceed_hi = 0.0;    // plus the weight of all paths beyond the cap
  int cap = 0;
  bool holds = false;        // exceed_hi <= bound
  bool inconclusive = false;  // exceed_lo <= bound < exceed_hi
};

struct SurchargeTailConfig {
  PotentialDistribution dist = PotentialDistribution::bernoulli(0.5, 1.0);
  int dim = 2;
  double beta = 0.0;
  double lambda = 2.0;
  double K = 7.0;
  double eps = 0.2;
  std::vector<Point> targets;
  int cap = 14;
};

/// Exceedance of the skeleton surcharge under the annealed conjugate ensemble
/// at x, by exact enumeration of the paths of length <= cap. At beta = 0 the
/// full sum comes from the transfer operator; otherwise from the tail bound.
std::vector<SurchargeTailRow> surcharge_tail_test(const SurchargeTailConfig& cfg, const LatticeNorm& norm,
                                                  const Surcharge& sur);

struct ConeDensityReport {
  int n = 0;
  double beta = 0.0;
  double mean_density = 0.0;      // E[#cone / n] under the fixed-length annealed measure
  std::vector<double> count_law;  // P(#cone = k), k = 0..n+1
  double prob_below(double c) const;  // P(#cone < c n)
};

/// Exact fixed-length annealed expectation over all paths of length n with drift h.
/// Throws for sub-critical h (critical_mass <= 0).
ConeDensityReport cone_density_test(const PotentialDistribution& dist, int dim, double beta, const Vec& h, int n,
                                    const ConeSpec& cone, double critical_mass);

}  // namespace polylab
