#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "polylab/coarse_grain.hpp"
#include "polylab/environment.hpp"
#include "polylab/lattice.hpp"
#include "polylab/path.hpp"

namespace polylab {

/// Sparse table (x, n) -> value, rows n = 0..nmax.
struct SiteTable {
  int dim = 1;
  std::vector<std::map<Point, double>> rows;

  int nmax() const { return static_cast<int>(rows.size()) - 1; }
  double at(const Point& x, int n) const;
  double row_sum(int n) const;
};

/// Weights of cone-confined paths (t) and of irreducible ones (f), in the log
/// domain. Row 0 is empty: the empty path is handled by the convolution.
struct IrreducibleTable {
  std::string kind = "annealed";  // "annealed" or "quenched"
  int dim = 2;
  double beta = 0.0;
  double lambda = 0.0;
  Vec h{};
  std::string cone;  // ConeSpec::describe()
  int nmax = 0;
  SiteTable log_f, log_t;

  /// The same table at another mass: every entry shifts by -(lambda' - lambda) n.
  IrreducibleTable with_lambda(double lambda) const;
  SiteTable f() const;  // linear
  SiteTable t() const;
  /// log sum_{x, n <= nmax} f.
  double log_total_f() const;

  /// Header lines "# key=value", then "x1..xd n log_f log_t" per entry.
  void write(std::ostream& os) const;
  static IrreducibleTable read(std::istream& is);
};

/// Annealed tables by enumeration of cone-confined paths from the origin.
IrreducibleTable build_irreducible_tables(const PotentialDistribution& dist, int dim, const WeightParams& p,
                                          const ConeSpec& cone, int nmax, bool parallel = true);
/// Quenched tables for paths starting at `start` in `env`.
IrreducibleTable build_quenched_tables(const Environment& env, const WeightParams& p, const ConeSpec& cone,
                                       int nmax, const Point& start = {}, bool parallel = true);

struct Calibration {
  double lambda = 0.0;
  IrreducibleTable table;
  double log_deficit_estimate = 0.0;  // log of the extrapolated mass beyond nmax
  int iterations = 0;
};
/// Mass lambda with sum_{x, n <= nmax} f = 1, by bracketed root search.
Calibration calibrate_lambda(const IrreducibleTable& table);

/// Max over (x, n) of |t - f - t * f| divided by the largest t.
double renewal_residual(const SiteTable& f, const SiteTable& t);
/// t from f by the renewal convolution, rows 0..nmax (row 0 holds t_{0,0} = 1).
SiteTable renewal_convolve(const SiteTable& f, int nmax);

/// Law of one irreducible step (Y, M).
struct StepLaw {
  struct Atom {
    Point y{};
    int m = 1;
    double p = 0.0;
  };
  int dim = 1;
  std::vector<Atom> atoms;

  double total() const;
  double mean_length() const;  // kappa
  SiteTable as_table() const;
};
/// Throws unless |sum f - 1| <= tol.
StepLaw step_law(const IrreducibleTable& normalized, double tol = 1e-6);
/// d = 1 fixture: f_{x,n} = (1-rho) rho^{n-1} C(n,x) q^x (1-q)^{n-x}, n <= nmax.
/// Renewals happen at every length with probability 1 - rho, and X_n ~ Bin(n, q).
StepLaw geometric_fixture(double rho, double q, int nmax);
/// f_{1,1} = 1 in d = 1.
StepLaw degenerate_fixture();

struct RenewalAsymptotics {
  double kappa = 0.0;
  double limit = 0.0;           // 1 / kappa
  std::vector<double> t_n;      // n = 0..nmax
  double tail_rate = 0.0;       // fitted decay rate of sup_{m >= n} |t_m - 1/kappa|
  double tail_r2 = 0.0;
  double raw_r2 = 0.0;          // same fit on |t_n - 1/kappa| itself
  int fit_points = 0;
  Vec drift{};                  // E Y / E M
  std::array<Vec, kMaxDim> cov{};  // E (Y - M v)(Y - M v)^T / E M
};
/// t_n for n = 0..horizon by convolution. The tail fit runs over the upper half
/// of the range, on points whose envelope stays above the roundoff floor.
/// Throws unless the law is normalized within tol.
RenewalAsymptotics renewal_limit(const StepLaw& law, int horizon, double tol = 1e-6);

/// mu(z) with sum e^{-mu m + z.y} f_{y,m} = 1 (real z), safeguarded Newton.
double solve_mu(const StepLaw& law, const Vec& z, double tol = 1e-14);
Vec mu_gradient(const StepLaw& law, const Vec& z = {});
std::array<Vec, kMaxDim> mu_hessian(const StepLaw& law, const Vec& z = {});
Vec mu_gradient_fd(const StepLaw& law, double step = 1e-5);
std::array<Vec, kMaxDim> mu_hessian_fd(const StepLaw& law, double step = 1e-4);
/// Smallest eigenvalue of the leading dim x dim block.
double min_eigenvalue(const std::array<Vec, kMaxDim>& m, int dim);
/// sup_z { z.u - mu(z) } by Newton on z.
double step_rate(const StepLaw& law, const Vec& u);

struct CltRow {
  int n = 0;
  double t_n = 0.0;
  Vec mean{};           // sum x t_{x,n} / t_n
  double lln_gap = 0.0;  // |mean - n v| / n (max over coordinates)
  double rel_mean_gap = 0.0;  // |mean - n v| / |n v|
  double clt_gap = 0.0;  // sup over the alpha grid of |S_n(alpha)/t_n - e^{-alpha.C alpha/2}|
};
/// S_n(alpha) = sum_x t_{x,n} e^{i alpha.(x - n v)/sqrt(n)}.
std::vector<CltRow> lln_clt_check(const StepLaw& law, std::span<const int> ns, std::span<const Vec> alphas);
/// Square grid of alphas in [-a, a]^d with k points per axis.
std::vector<Vec> alpha_grid(int dim, double a, int k);

struct LocalLimitRow {
  Point x{};
  double G = 0.0;  // P(X_n = x) n^{d/2} e^{n J(x/n)}
};
struct LocalLimitReport {
  int n = 0;
  std::vector<LocalLimitRow> rows;
  double flatness = 0.0;  // max G / min G
  double G_at_mean = 0.0;
};
/// Sites within l1 distance `radius` of n v with P(X_n = x) > 0.
LocalLimitReport local_limit_check(const StepLaw& law, int n, int radius);

/// Quenched f from the quenched t tables of every start point, by the triangular
/// inversion f_{x,n} = t_{x,n} - sum_{0 < m < n} sum_y f_{y,m} t^{(y)}_{x-y,n-m}.
struct QuenchedInversion {
  IrreducibleTable origin;                 // tables from the origin (t enumerated, f enumerated)
  std::map<Point, IrreducibleTable> from;  // tables from every possible cone point
  SiteTable f_recovered;                   // linear
  double max_f_gap = 0.0;                  // recovered vs enumerated f, relative to the largest f
  double forward_residual = 0.0;           // renewal identity with the shifted tables
  double min_recovered = 0.0;              // most negative recovered entry (0 if none)
};
QuenchedInversion quenched_irreducible_inversion(const Environment& env, const WeightParams& p, const ConeSpec& cone,
                                                 int nmax, bool parallel = true);

}  // namespace polylab
