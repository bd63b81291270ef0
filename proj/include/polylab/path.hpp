#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "polylab/environment.hpp"
#include "polylab/lattice.hpp"

namespace polylab {

class Rng;

/// Inverse temperature, mass per step and pulling force.
struct WeightParams {
  double beta = 0.0;
  double lambda = 0.0;
  Vec h{};

  void validate(int dim) const;
  /// log of (1/2d) sum_e e^{h.e}: the free exponent of the reference walk.
  double log_mean_cosh(int dim) const;
};

/// Nearest-neighbour trajectory stored as its site sequence.
class LatticePath {
 public:
  /// The length-0 path at the origin.
  explicit LatticePath(int dim = 2);

  /// Validates unit steps; the first site must be the origin.
  static LatticePath from_sites(int dim, std::vector<Point> sites);
  /// Same, but any starting site is allowed.
  static LatticePath shifted(int dim, std::vector<Point> sites);
  static LatticePath from_steps(int dim, std::span<const Point> steps, Point start = {});

  int dim() const { return dim_; }
  int length() const { return static_cast<int>(sites_.size()) - 1; }
  const std::vector<Point>& sites() const { return sites_; }
  const Point& operator[](int i) const { return sites_[static_cast<std::size_t>(i)]; }
  const Point& front() const { return sites_.front(); }
  const Point& back() const { return sites_.back(); }

  /// X(path) = last site minus first site.
  Point extension() const { return back() - front(); }
  LatticePath reversed() const;
  /// Sites i..j, keeping absolute coordinates.
  LatticePath slice(int i, int j) const;
  LatticePath translated(const Point& by) const;
  /// This path followed by `next`, translated so that it starts where this one ends.
  LatticePath then(const LatticePath& next) const;

  /// One line per site, whitespace separated coordinates.
  void write(std::ostream& os) const;
  static LatticePath read(std::istream& is, int dim);

  friend bool operator==(const LatticePath&, const LatticePath&) = default;

 private:
  LatticePath(int dim, std::vector<Point> sites, bool check_origin);
  int dim_ = 2;
  std::vector<Point> sites_;
};

/// Visit counts of sites 1..n (the starting site is not counted).
using LocalTimes = std::map<Point, int>;
LocalTimes local_times(const LatticePath& path);

/// sum_x phi_beta(ell(x)).
double annealed_potential(const LatticePath& path, const PotentialDistribution& dist, double beta);

/// h.X - lambda n - beta sum_{i>=1} V(site_i) - n log 2d; -inf when a trap is visited.
double log_quenched_weight(const LatticePath& path, const Environment& env, const WeightParams& p);
/// h.X - lambda n - sum_x phi_beta(ell(x)) - n log 2d.
double log_annealed_weight(const LatticePath& path, const PotentialDistribution& dist,
                           const WeightParams& p);

/// Simple random walk of n steps from the origin.
LatticePath random_path(int dim, int n, Rng& rng);

}  // namespace polylab
