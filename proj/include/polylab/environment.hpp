#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polylab/lattice.hpp"
#include "polylab/logsum.hpp"

namespace polylab {

/// One atom of a finite distribution. `value` may be +inf (a trap).
struct Atom {
  double value = 0.0;
  double prob = 0.0;
};

struct DistributionFlags {
  bool degenerate_ok = false;    // allow a point mass (test fixtures)
  bool traps_ok = false;         // allow atoms at +inf
  bool unnormalized_ok = false;  // allow 0 outside the support (test fixtures)
  friend bool operator==(const DistributionFlags&, const DistributionFlags&) = default;
};

/// Law of the i.i.d. potential. Only families with closed-form
/// E e^{-sV} are offered, so that phi_beta and the tilt function are exact.
class PotentialDistribution {
 public:
  enum class Kind { Bernoulli, Discrete, Uniform };

  using Flags = DistributionFlags;

  /// V = v1 with probability p, else 0.
  static PotentialDistribution bernoulli(double p, double v1, Flags flags = {});
  static PotentialDistribution discrete(std::vector<Atom> atoms, Flags flags = {});
  /// V ~ Uniform[0, b].
  static PotentialDistribution uniform(double b, Flags flags = {});

  /// Parses the canonical spec, e.g. "bernoulli(0.5,1)", "discrete(0:0.5,inf:0.5)+traps-ok",
  /// "uniform(2)".
  static PotentialDistribution parse(const std::string& spec);
  std::string spec() const;

  Kind kind() const { return kind_; }
  const Flags& flags() const { return flags_; }
  /// Atoms sorted by value (empty for Uniform).
  const std::vector<Atom>& atoms() const { return atoms_; }

  /// E[e^{-sV}] for s >= 0; traps contribute 0 (for s > 0).
  double mgf_neg(double s) const;
  /// phi_beta(ell) = -log E e^{-beta ell V}; +inf when every atom is a trap.
  double phi(double beta, int ell) const;
  /// g(delta) = -log E e^{-delta (V ^ 1)}, any real delta.
  double tilt_g(double delta) const;
  /// E[V ^ 1] under the law tilted by e^{-delta (V^1) + g(delta)}.
  double tilted_mean_truncated(double delta) const;

  /// Inverse CDF, u in [0,1).
  double quantile(double u) const;
  /// Inverse CDF of the tilted law; delta == 0 reproduces quantile(u) exactly.
  double tilted_quantile(double u, double delta) const;

  bool in_support(double v) const;
  double prob_zero() const;
  double mean_truncated() const { return tilted_mean_truncated(0.0); }

  friend bool operator==(const PotentialDistribution&, const PotentialDistribution&);

 private:
  PotentialDistribution() = default;
  void validate() const;

  Kind kind_ = Kind::Discrete;
  std::vector<Atom> atoms_;
  double b_ = 0.0;
  double bern_p_ = 0.0, bern_v_ = 0.0;
  Flags flags_;
};

/// Environment tilt on a region A_N: density e^{-delta (V ^ 1) + g(delta)} there.
/// Negative delta favours larger potentials.
struct TiltSpec {
  double delta = 0.0;
  Box region;
};

/// A realization of the potential on a finite box. Immutable after construction.
class Environment {
 public:
  static Environment sample(const PotentialDistribution& dist, const Box& box, std::uint64_t seed);
  static Environment sample_tilted(const PotentialDistribution& dist, const TiltSpec& tilt,
                                   const Box& box, std::uint64_t seed);
  /// Explicit values (row-major over `box`); each must lie in the support of `dist`.
  static Environment from_values(const PotentialDistribution& dist, const Box& box,
                                 std::uint64_t seed, std::vector<double> values);

  double at(const Point& p) const;
  double at_index(std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  const Box& box() const { return box_; }
  const PotentialDistribution& dist() const { return dist_; }
  std::uint64_t seed() const { return seed_; }
  const std::optional<TiltSpec>& tilt() const { return tilt_; }

  /// Text format: header lines dim=, box=, dist=, seed= (and tilt= when tilted),
  /// then one "x1 .. xd value" line per site; traps print as "inf".
  void write(std::ostream& os) const;
  static Environment read(std::istream& is);

  friend bool operator==(const Environment& a, const Environment& b);

 private:
  Environment(PotentialDistribution dist, Box box, std::uint64_t seed)
      : dist_(std::move(dist)), box_(std::move(box)), seed_(seed) {}

  PotentialDistribution dist_;
  Box box_;
  std::uint64_t seed_ = 0;
  std::optional<TiltSpec> tilt_;
  std::vector<double> values_;
};

/// Shortest round-trip formatting of a double ("inf" for +infinity).
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace polylab
