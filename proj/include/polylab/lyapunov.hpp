#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polylab/ensembles.hpp"
#include "polylab/environment.hpp"
#include "polylab/norms.hpp"

namespace polylab {

struct LyapunovConfig {
  Ensemble kind = Ensemble::Quenched;
  PotentialDistribution dist = PotentialDistribution::bernoulli(0.5, 1.0);
  int dim = 2;
  double beta = 1.0;
  double lambda = 0.5;
  Point direction = Point{{1, 0, 0}};
  std::vector<int> Ns{20, 40, 80};
  int replicas = 200;
  std::uint64_t seed = 1;
  int bootstrap = 1000;
  double rel_tol = 1e-9;
};

struct LyapunovEstimate {
  Point direction{};
  double lambda = 0.0;
  Ensemble kind = Ensemble::Quenched;
  double value = 0.0;   // extrapolated exponent per unit Euclidean length
  double stderr = 0.0;  // bootstrap over replicas; 0 for exact computations
  std::vector<int> Ns;
  std::vector<double> per_n;     // -log Z(N dir) / (N |dir|) (replica mean, or from the mean Z)
  std::vector<double> per_n_se;  // standard error of per_n
  double intercept = 0.0, slope = 0.0;  // per_n - (d-1) log N / (2 N |dir|) ~ intercept + slope / N
  bool exact = false;      // beta = 0: deterministic, no replicas
  bool converged = true;   // all conjugate sums met their tolerance
  int replicas = 0;
};

/// Lyapunov exponent in one lattice direction from conjugate partition functions
/// at distances N * direction, extrapolated with a + c/N.
LyapunovEstimate estimate_lyapunov(const LyapunovConfig& cfg);

/// Log conjugate partition functions log Z(N dir) for every N, one row per replica
/// (a single row when beta = 0). Shared by the Lyapunov and concentration tools.
struct ConjugateSamples {
  std::vector<std::vector<double>> log_z;  // [replica][N index]
  bool converged = true;
};
ConjugateSamples conjugate_samples(const LyapunovConfig& cfg, std::uint64_t stream_tag);

/// Estimates over a direction fan and the polygon norm they define.
struct FanEstimate {
  int dim = 2;
  std::vector<Point> fan;
  std::vector<LyapunovEstimate> estimates;
  PolygonNorm norm() const;
};
FanEstimate estimate_fan(const LyapunovConfig& base, const std::vector<Point>& fan);

struct NormCheckReport {
  double min_value = 0.0, max_value = 0.0;
  bool equivalent = false;  // 0 < min <= max < inf
  bool ordered = false;     // annealed <= quenched + 2 se, every direction
  std::vector<std::string> findings;
};
NormCheckReport norm_checks(const FanEstimate& annealed, const FanEstimate& quenched);

/// Exact check of A(x + y) >= A~(x) A(y), where A~ sums over paths that visit x
/// only at their end (splitting at the first visit makes concatenation
/// injective). The truncated left side plus its tail bound must dominate the
/// truncated product.
struct SubadditivityCheck {
  Point x{}, y{};
  double log_lhs = 0.0, log_rhs = 0.0, log_tail = 0.0;
  double log_plain_product = 0.0;  // log A(x) + log A(y), for reference
  bool holds = false;
};
std::vector<SubadditivityCheck> subadditivity_check(const PotentialDistribution& dist, int dim, double beta,
                                                    double lambda, const std::vector<std::pair<Point, Point>>& pairs,
                                                    int cap);

/// Lambda(h): the lambda at which the polar norm of h crosses 1, by bracketing
/// root search on lambda -> polar(lambda) - 1 (decreasing). Returns 0 when the
/// polar norm at the floor lambda is <= 1.
struct LambdaOfH {
  double value = 0.0;
  double polar_at_floor = 0.0;
  bool bracketed = true;
};
LambdaOfH lambda_of_h(const std::function<double(double)>& polar_at, double lambda_floor, double lambda_hi,
                      double tol);
/// Exact at beta = 0: log((1/d) sum cosh h_i), or 0 for h = 0.
double srw_lambda_of_h(int dim, const Vec& h);

enum class DriftPhase { SubCritical, NearCritical, Ballistic };
std::string to_string(DriftPhase p);
struct DriftClassification {
  Vec h{};
  double lambda_of_h = 0.0;
  double margin = 0.0;  // polar norm at the floor minus 1
  DriftPhase phase = DriftPhase::SubCritical;
};
DriftClassification classify_drift(const Vec& h, const LambdaOfH& l, double tol = 1e-6, double band = 0.05);

/// J(v) = max_lambda { norm_lambda(v) - lambda } + Lambda(h) - h.v over a lambda grid.
struct RateValue {
  double value = 0.0;
  double argmax_lambda = 0.0;
  bool at_upper_edge = false;  // the grid maximum sits at the largest lambda
};
RateValue rate_function(const std::function<double(double, const Vec&)>& norm_at, double lambda_of_h, const Vec& h,
                        const Vec& v, const std::vector<double>& lambda_grid);

/// log A_lambda(x) (or its replica estimate) on the box [-radius, radius]^d.
struct ConjugateField {
  Box box;
  std::vector<double> log_value;
  bool exact = false;
};
ConjugateField annealed_conjugate_field(const PotentialDistribution& dist, int dim, double beta, double lambda,
                                        int radius, int replicas, std::uint64_t seed);

/// Partial sums of sum_x e^{h.x} A(x) over l1 shells |x|_1 = R.
struct SeriesDiagnostic {
  std::vector<double> log_increment;  // log of the shell sum at R = 0..Rmax
  std::vector<double> partial_sum;
  double tail_ratio = 0.0;  // geometric mean of increment ratios over the upper half
  bool cauchy = false;      // increments decay geometrically
  bool growing = false;     // increments increase
};
SeriesDiagnostic series_diagnostic(const ConjugateField& field, const Vec& h, int max_radius);

}  // namespace polylab
