#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polylab/environment.hpp"
#include "polylab/renewal.hpp"
#include "polylab/stats.hpp"

namespace polylab {

enum class Verdict { WeakConsistent, StrongConsistent, Inconclusive };
std::string to_string(Verdict v);

// Partition ratios log(Q_n / A_n) along fixed lengths.

struct RatioTrackConfig {
  PotentialDistribution dist = PotentialDistribution::bernoulli(0.5, 1.0);
  int dim = 2;
  double beta = 1.0;
  Vec h{1.0, 0, 0};
  std::vector<int> ns{10, 20, 30, 40, 50, 60};
  int replicas = 100;
  int annealed_factor = 10;  // replicas used for A_n per track replica
  std::uint64_t seed = 1;
  int bootstrap = 1000;
  double weak_width = 0.01;  // CI width below which a straddling slope counts as weak
};

struct DisorderReport {
  double beta = 0.0;
  Vec h{};
  std::vector<int> ns;
  std::vector<double> log_annealed;           // log A_n (exact at beta = 0, else replica mean of Q)
  std::vector<std::vector<double>> track;     // [replica][n] log(Q_n / A_n)
  std::vector<double> mean_track;             // replica mean per n
  std::vector<Interval> mean_ci;              // bootstrap CI per n
  double slope = 0.0;                         // fitted d(mean track)/dn
  Interval slope_ci;
  bool jensen_ok = true;                      // every mean_ci reaches <= 0
  Verdict verdict = Verdict::Inconclusive;
  int replicas = 0;
};

/// Fixed-length quenched DP per replica; A_n from an independent, larger replica set.
/// The bootstrap resamples units made of one track replica and its share of the
/// annealed replicas, so the slope CI carries the error of A_n.
DisorderReport ratio_track(const RatioTrackConfig& cfg);

// Concentration of log Q_lambda(N e).

struct ConcentrationConfig {
  PotentialDistribution dist = PotentialDistribution::bernoulli(0.5, 1.0);
  int dim = 2;
  double beta = 1.0;
  double lambda = 0.5;
  Point direction{{1, 0, 0}};
  std::vector<int> Ns{20, 40, 80};
  int replicas = 200;
  std::uint64_t seed = 1;
  int bootstrap = 1000;
};

struct ConcentrationReport {
  std::vector<int> Ns;
  std::vector<double> variance;      // Var log Q per N
  std::vector<Interval> variance_ci;
  std::vector<double> ratio;         // Var / N
  double spread = 0.0;               // max ratio / min ratio (1 when every ratio is 0)
  double c_hat = 0.0;                // max ratio
  double curvature = 0.0;            // quadratic coefficient of Var against N
  Interval curvature_ci;
  bool stable = false;               // spread <= 2
  bool starved = false;              // fewer than 20 replicas
  bool converged = true;
};
ConcentrationReport concentration_check(const ConcentrationConfig& cfg);

// Sinai-type expansion around the annealed renewal.

struct SinaiConfig {
  PotentialDistribution dist = PotentialDistribution::bernoulli(0.5, 1.0);
  double beta = 1.0;
  double h = 2.0;        // drift along e1
  double delta = 0.5;    // cone aperture
  int nmax = 10;
  int environments = 5;
  std::uint64_t seed = 1;
};

struct SinaiReplica {
  std::uint64_t env_seed = 0;
  double identity_residual = 0.0;   // max over (z, n), relative to the largest quenched t
  std::vector<double> t_quenched;   // sum_z t^w_{z,n}, n = 0..nmax
  std::vector<double> s;            // s^w_n, incremental
  std::vector<double> s_direct;     // s^w_n, direct double loop
  std::vector<double> eps;          // correction term
  double decomposition_residual = 0.0;
  double s_gap = 0.0;               // max |s - s_direct|
};

struct SinaiLedger {
  double lambda = 0.0;              // calibrated annealed mass
  double kappa = 0.0;
  std::vector<double> t_annealed;   // n = 0..nmax
  std::vector<SinaiReplica> replicas;
  double max_identity_residual = 0.0;
  double max_decomposition_residual = 0.0;
  double max_s_gap = 0.0;
};

/// Calibrates the annealed table, then builds quenched tables at the same mass
/// and cone in each environment. Throws when the identity fails beyond 1e-9.
SinaiLedger sinai_identity_check(const SinaiConfig& cfg);

// Fractional moments of Q_lambda(N e1) / A_lambda(N e1) in d = 2.

struct FractionalMomentConfig {
  PotentialDistribution dist = PotentialDistribution::bernoulli(0.5, 1.0);
  int dim = 2;
  double beta = 1.0;
  double lambda = 0.5;
  double alpha = 0.5;
  std::vector<int> Ns{8, 12, 16};
  int replicas = 500;
  int annealed_factor = 10;
  double epsilon = 0.2;
  std::uint64_t seed = 1;
  int bootstrap = 1000;
  double rel_tol = 1e-9;
  double norm_e1 = 0.0;  // Lyapunov norm of e1 for the tilt box; estimated when 0
};

struct FractionalMomentReport {
  double alpha = 0.0;
  std::vector<int> Ns;
  std::vector<double> log_annealed;   // log A per N (exact at beta = 0)
  std::vector<double> moment;         // log E (Q/A)^alpha
  std::vector<Interval> moment_ci;
  std::vector<double> first_moment;   // log E (Q/A), 0 up to sampling error
  std::vector<Interval> first_moment_ci;
  double slope = 0.0;
  Interval slope_ci;
  Verdict verdict = Verdict::Inconclusive;  // strong-consistent iff slope_ci < 0
  // Change-of-measure diagnostic on the box {0..K N} x {-w..w}, w = floor(N^{1/2+eps}).
  int K = 0;
  double norm_e1 = 0.0;
  std::vector<double> tilt_delta;     // delta_N = N^{-1/2 - 2 eps}
  std::vector<long> box_sites;        // |A_N|
  std::vector<double> tilt_cost;      // (1 - alpha) |A_N| (-g(a delta) - a g(-delta)), a = alpha/(1-alpha)
  std::vector<double> tilt_cost_bound;  // alpha delta^2 |A_N| / (1 - alpha^2)^2
  std::vector<double> tilt_drop;      // -alpha log(E~ Q / E Q) on coupled replicas, tilt toward larger V
  double drop_rate = 0.0;             // fitted c in drop = alpha c delta_N N
  bool tilt_dominates = false;        // cost < drop at every N
  bool converged = true;
};
FractionalMomentReport fractional_moment_test(const FractionalMomentConfig& cfg);

/// -g(-a delta) - a g(delta) with a = alpha / (1 - alpha): log of the Hölder cost per site
/// for the tilt e^{-delta (V ^ 1) + g(delta)}. The test evaluates it at -delta_N.
double tilt_cost_exact(const PotentialDistribution& dist, double alpha, double delta);
/// alpha delta^2 / (1 - alpha^2)^2.
double tilt_cost_bound(double alpha, double delta);

// Quenched law of large numbers.

struct QuenchedLlnConfig {
  PotentialDistribution dist = PotentialDistribution::bernoulli(0.5, 1.0);
  double beta = 0.1;
  double h = 2.0;
  double delta = 0.5;
  int n = 12;
  int replicas = 50;
  std::uint64_t seed = 1;
};

struct QuenchedLlnReport {
  double beta = 0.0;
  int n = 0;
  Vec v{};                     // annealed drift from the calibrated renewal table
  double annealed_gap = 0.0;   // |E_a X_n / n - v|
  std::vector<double> deviation;  // |E^w X_n / n - v| per replica
  double max_deviation = 0.0;
  double mean_deviation = 0.0;
  Interval mean_deviation_ci;
  bool within_band = false;    // max_deviation < 3 annealed_gap
};
/// `ratio` (optional) must not be strong-consistent.
QuenchedLlnReport quenched_lln_check(const QuenchedLlnConfig& cfg, const DisorderReport* ratio = nullptr);

}  // namespace polylab
