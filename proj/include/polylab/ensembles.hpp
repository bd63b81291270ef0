#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polylab/environment.hpp"
#include "polylab/lattice.hpp"
#include "polylab/logsum.hpp"
#include "polylab/path.hpp"
#include "polylab/transfer.hpp"

namespace polylab {

enum class Ensemble { Quenched, Annealed };
std::string to_string(Ensemble e);

/// Which paths enter a fixed-length sum.
struct EndpointConstraint {
  enum class Type { Free, Endpoint, Slab };
  Type type = Type::Free;
  Point x{};     // Endpoint
  int axis = 0;  // Slab: x[axis] == level
  int level = 0;

  static EndpointConstraint free() { return {}; }
  static EndpointConstraint endpoint(const Point& x) { return {Type::Endpoint, x, 0, 0}; }
  static EndpointConstraint slab(int axis, int level) { return {Type::Slab, {}, axis, level}; }

  bool admits(const Point& end) const;
  /// Can a walk at `pos` with `remaining` steps still end admissibly?
  bool reachable(const Point& pos, int remaining) const;
};

/// Largest length accepted by exact enumeration in dimension `dim`.
int enumeration_cap(int dim);

struct EnumeratedPartition {
  double log_total = kNegInf;
  std::map<Point, double> log_by_endpoint;
};

/// Exact fixed-length sums over all nearest-neighbour paths of length n.
EnumeratedPartition enumerate_partition(const Environment& env, const WeightParams& p, int n,
                                        const EndpointConstraint& c = {}, bool parallel = true);
EnumeratedPartition enumerate_partition(const PotentialDistribution& dist, int dim, const WeightParams& p, int n,
                                        const EndpointConstraint& c = {}, bool parallel = true);

/// Log-domain table of fixed-length partition functions Z_n(x), 0 <= n <= nmax.
class PartitionTable {
 public:
  Ensemble kind() const { return kind_; }
  const WeightParams& params() const { return params_; }
  const Box& box() const { return box_; }
  int nmax() const { return nmax_; }
  /// -inf outside the box.
  double log_at(int n, const Point& x) const;
  bool truncated(const Point& x) const { return box_.on_boundary(x); }
  /// log sum_x Z_n(x) over the box.
  double log_total(int n) const;
  /// log of the total mass that reached the boundary at lengths <= n (-inf if none).
  double log_absorbed(int n) const { return log_absorbed_[static_cast<std::size_t>(n)]; }

  /// Columns: n, x1..xd, log_value, kind, truncated_flag.
  void write_csv(std::ostream& os) const;

 private:
  friend PartitionTable build_table(Ensemble, const Environment*, int, const WeightParams&, int,
                                    const std::optional<Box>&, KernelMode);
  Ensemble kind_ = Ensemble::Quenched;
  WeightParams params_;
  Box box_;
  int nmax_ = 0;
  std::vector<double> log_;  // (nmax+1) * box.size(), row n contiguous
  std::vector<double> log_absorbed_;
};

/// Default DP box: radius nmax + 2, so no path of length <= nmax reaches the boundary.
Box default_dp_box(int dim, int nmax);

PartitionTable quenched_dp(const Environment& env, const WeightParams& p, int nmax,
                           const std::optional<Box>& box = std::nullopt, KernelMode mode = KernelMode::Parallel);
/// Annealed table; only available at beta = 0 where the weights are Markovian.
PartitionTable annealed_dp(const PotentialDistribution& dist, int dim, const WeightParams& p, int nmax,
                           const std::optional<Box>& box = std::nullopt, KernelMode mode = KernelMode::Parallel);

/// Per-step mass factor of the transfer operator: e^{Lambda_0(h) - lambda}.
double step_mass_factor(int dim, const WeightParams& p);

struct ConjugateOptions {
  double rel_tol = 1e-10;
  int max_layers = 200000;
  KernelMode mode = KernelMode::Parallel;
  bool keep_all = false;  // also return log Q(x) for every site of the box
};

struct ConjugateResult {
  std::vector<Point> targets;
  std::vector<double> log_value;
  int layers = 0;                  // lengths 0..layers-1 were summed
  double log_tail_bound = kNegInf;  // absolute bound on the omitted lengths
  double log_boundary_loss = kNegInf;  // absolute bound on the mass lost through the boundary
  bool converged = false;          // both bounds <= rel_tol * value for every target
  std::vector<double> log_all;     // keep_all: indexed like box.index()
};

/// Sum over all lengths of the fixed-endpoint weights, Q_lambda(x) (quenched, or
/// V = 0 when env is null), from the origin, on `box` with absorbing boundary.
/// Requires step_mass_factor < 1.
ConjugateResult conjugate_partition(const Environment* env, const Box& box, const WeightParams& p,
                                    std::span<const Point> targets, const ConjugateOptions& opt = {});

struct ConjugateEnumeration {
  double log_value = kNegInf;
  double log_tail_bound = kNegInf;  // bound on paths longer than the cap
  double loop_moment = 0.0;         // expectation of sum_x ell(x)^2 under the truncated measure
  int cap = 0;
};

/// Annealed (or quenched, with env) conjugate sum to x by enumeration of all paths
/// of length <= cap ending at x; with first_hit, only paths visiting x once, at the end.
ConjugateEnumeration conjugate_enumerate(const PotentialDistribution& dist, int dim, const WeightParams& p,
                                         const Point& x, int cap, bool first_hit = false, bool parallel = true);
ConjugateEnumeration conjugate_enumerate(const Environment& env, const WeightParams& p, const Point& x, int cap,
                                         bool first_hit = false, bool parallel = true);

/// Exact loop moment E[sum_x ell(x)^2] under the conjugate ensemble at beta = 0
/// (simple random walk killed at rate lambda), from Green functions.
double srw_conjugate_loop_moment(int dim, double lambda, const Point& x);

struct EnsembleStats {
  int n = 0;
  int dim = 0;
  Vec mean{};
  std::array<Vec, kMaxDim> cov{};
  std::vector<Vec> alphas;
  std::vector<std::complex<double>> char_fn;
  std::optional<double> loop_moment;  // only from enumeration
};

EnsembleStats ensemble_stats(const Environment& env, const WeightParams& p, int n, std::span<const Vec> alphas = {},
                             bool parallel = true);
EnsembleStats ensemble_stats(const PotentialDistribution& dist, int dim, const WeightParams& p, int n,
                             std::span<const Vec> alphas = {}, bool parallel = true);
/// Extension moments from a DP table (no local-time observables).
EnsembleStats ensemble_stats(const PartitionTable& table, int n, std::span<const Vec> alphas = {});

/// Exact samples of length n from a DP table by backward conditional sampling.
/// `env` must be the table's environment (null for an annealed beta = 0 table).
std::vector<LatticePath> sample_paths(const PartitionTable& table, const Environment* env, int n, int count,
                                      std::uint64_t seed);
/// Exact annealed samples by enumeration and inverse-CDF lookup (n <= 10).
std::vector<LatticePath> sample_paths(const PotentialDistribution& dist, int dim, const WeightParams& p, int n,
                                      int count, std::uint64_t seed);

}  // namespace polylab
