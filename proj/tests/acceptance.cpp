// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "polylab/coarse_grain.hpp"
#include "polylab/disorder.hpp"
#include "polylab/ensembles.hpp"
#include "polylab/lyapunov.hpp"
#include "polylab/norms.hpp"
#include "polylab/renewal.hpp"
#include "polylab/rng.hpp"

using namespace polylab;
namespace fs = std::filesystem;

namespace {

const PotentialDistribution kHalf = PotentialDistribution::bernoulli(0.5, 1.0);

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel_err(double log_a, double log_b) {
  if (log_a == kNegInf && log_b == kNegInf) return 0.0;
  return std::abs(std::expm1(log_a - log_b));
}

double free_mass(int dim, double hx) {
  return dim == 1 ? std::log(std::cosh(hx)) : std::log((std::cosh(hx) + 1.0) / 2.0);
}

ConeSpec drift_cone(double hx, double delta) {
  return ConeSpec(std::make_shared<SrwNorm>(2, free_mass(2, hx)), Vec{hx, 0, 0}, delta);
}

IrreducibleTable strong_drift_table(double beta) {
  return build_irreducible_tables(kHalf, 2, {beta, free_mass(2, 2.0), {2.0, 0, 0}}, drift_cone(2.0, 0.5), 12);
}

// 1. Quenched DP against brute-force enumeration.
Outcome oracle_equivalence() {
  double worst = 0.0;
  int cases = 0;
  for (int e = 0; e < 20; ++e) {
    const auto env = Environment::sample(kHalf, Box::centered(2, 12), derive_seed(1, stream::kReplica, e));
    for (double beta : {0.0, 0.5, 1.0})
      for (double lambda : {0.0, 0.5})
        for (double hx : {0.0, 0.8}) {
          const WeightParams p{beta, lambda, {hx, 0, 0}};
          const auto table = quenched_dp(env, p, 10, std::nullopt, KernelMode::Serial);
          for (int n = 0; n <= 10; ++n) {
            const auto en = enumerate_partition(env, p, n);
            worst = std::max(worst, rel_err(table.log_total(n), en.log_total));
            for (const auto& [x, v] : en.log_by_endpoint) worst = std::max(worst, rel_err(table.log_at(n, x), v));
          }
          ++cases;
        }
  }
  return {worst <= 1e-10, std::to_string(cases) + " cases, max rel err " + fmt("%.2e", worst)};
}

// 2. Annealed weight against the site-factorized expectation, computed here from local times.
Outcome annealed_identity() {
  double worst = 0.0;
  int paths = 0;
  Rng rng(derive_seed(2, stream::kRandomPath));
  for (double beta : {0.0, 0.5, 1.0})
    for (double lambda : {0.0, 0.5})
      for (double hx : {0.0, 0.8}) {
        const WeightParams p{beta, lambda, {hx, 0, 0}};
        for (int k = 0; k < 100; ++k) {
          const int n = 1 + static_cast<int>(rng.below(30));
          const auto path = random_path(2, n, rng);
          std::map<Point, int> visits;
          for (int i = 1; i <= n; ++i) ++visits[path[i]];
          double expect = std::exp(hx * path.back()[0] - lambda * n) * std::pow(0.25, n);
          for (const auto& [x, l] : visits) expect *= kHalf.mgf_neg(beta * l);
          const double got = std::exp(log_annealed_weight(path, kHalf, p));
          worst = std::max(worst, std::abs(got / expect - 1.0));
          ++paths;
        }
      }
  return {worst <= 1e-12, std::to_string(paths) + " paths, max rel err " + fmt("%.2e", worst)};
}

// 3. Reference normalization and free-drift closed form.
Outcome reference_normalization() {
  double worst_ref = 0.0, worst_drift = 0.0;
  const auto env = Environment::sample(kHalf, default_dp_box(2, 20), 3);
  const auto q = quenched_dp(env, WeightParams{}, 20);
  const auto a = annealed_dp(kHalf, 2, WeightParams{}, 20);
  for (int n = 0; n <= 20; ++n) worst_ref = std::max({worst_ref, std::abs(std::expm1(q.log_total(n))), std::abs(std::expm1(a.log_total(n)))});
  for (int dim : {1, 2}) {
    const Vec h = dim == 1 ? Vec{0.7, 0, 0} : Vec{0.7, -0.3, 0};
    const double per_step = dim == 1 ? std::cosh(0.7) : (std::cosh(0.7) + std::cosh(0.3)) / 2.0;
    const auto e = Environment::sample(kHalf, default_dp_box(dim, 14), 4);
    const auto t = quenched_dp(e, WeightParams{0.0, 0.0, h}, 14);
    for (int n = 0; n <= 14; ++n) worst_drift = std::max(worst_drift, std::abs(std::exp(t.log_total(n)) / std::pow(per_step, n) - 1.0));
  }
  return {worst_ref <= 1e-12 && worst_drift <= 1e-10,
          "reference " + fmt("%.2e", worst_ref) + ", drift " + fmt("%.2e", worst_drift)};
}

// 4. d = 1 exponent at beta = 0 against the first-passage closed form.
Outcome lyapunov_closed_form() {
  LyapunovConfig cfg;
  cfg.dim = 1;
  cfg.beta = 0.0;
  cfg.lambda = 0.5;
  cfg.Ns = {50, 100, 200};
  const auto est = estimate_lyapunov(cfg);
  const double u = std::exp(-0.5);
  const double exact = -std::log((1.0 - std::sqrt(1.0 - u * u)) / u);
  const double rel = std::abs(est.value / exact - 1.0);
  return {rel <= 0.01 && est.converged, "estimate " + fmt("%.8f", est.value) + " vs " + fmt("%.8f", exact) + ", rel " + fmt("%.2e", rel)};
}

// 5. Renewal identity on the tables and fixtures.
Outcome renewal_identity() {
  double worst = 0.0;
  for (double beta : {0.0, 0.5, 1.0}) {
    const auto tab = strong_drift_table(beta);
    worst = std::max(worst, renewal_residual(tab.f(), tab.t()));
    const auto cal = calibrate_lambda(tab).table;
    worst = std::max(worst, renewal_residual(cal.f(), cal.t()));
  }
  const auto geo = geometric_fixture(0.4, 0.3, 50);
  const auto deg = degenerate_fixture();
  worst = std::max(worst, renewal_residual(geo.as_table(), renewal_convolve(geo.as_table(), 50)));
  worst = std::max(worst, renewal_residual(deg.as_table(), renewal_convolve(deg.as_table(), 20)));
  const auto lim = renewal_limit(geo, 50);
  double tn = 0.0;
  for (std::size_t n = 1; n < lim.t_n.size(); ++n) tn = std::max(tn, std::abs(lim.t_n[n] - 0.6));
  const double dk = std::abs(lim.kappa - 5.0 / 3.0);
  return {worst <= 1e-10 && dk <= 1e-12 && tn <= 1e-12,
          "residual " + fmt("%.2e", worst) + ", |kappa - 5/3| " + fmt("%.2e", dk) + ", |t_n - 0.6| " + fmt("%.2e", tn)};
}

// 6. Normalization after calibration, t_nmax kappa -> 1, exponential tail.
Outcome normalization_and_limit() {
  const auto cal = calibrate_lambda(strong_drift_table(0.0));
  const auto law = step_law(cal.table);
  const double mass = std::abs(law.total() - 1.0);
  const auto lim = renewal_limit(law, 48);
  const double gap = std::abs(lim.t_n[12] * lim.kappa - 1.0);
  return {mass <= 1e-6 && gap <= 0.01 && lim.tail_r2 >= 0.95,
          "|sum f - 1| " + fmt("%.2e", mass) + ", |t_12 kappa - 1| " + fmt("%.4f", gap) + ", tail R2 " + fmt("%.4f", lim.tail_r2) +
              " (raw " + fmt("%.4f", lim.raw_r2) + ")"};
}

// 7. Derivatives of mu on every calibrated table.
Outcome implicit_function() {
  double grad = 0.0, asym = 0.0, min_eig = kInf;
  for (double beta : {0.0, 0.5, 1.0}) {
    const auto law = step_law(calibrate_lambda(strong_drift_table(beta)).table);
    const Vec g = mu_gradient(law), gfd = mu_gradient_fd(law);
    for (int k = 0; k < 2; ++k) grad = std::max(grad, std::abs(g[static_cast<std::size_t>(k)] - gfd[static_cast<std::size_t>(k)]));
    const auto h = mu_hessian(law);
    asym = std::max(asym, std::abs(h[0][1] - h[1][0]));
    min_eig = std::min(min_eig, min_eigenvalue(h, 2));
  }
  return {grad <= 1e-6 && asym <= 1e-10 && min_eig > 0.0,
          "grad gap " + fmt("%.2e", grad) + ", asymmetry " + fmt("%.2e", asym) + ", min eigenvalue " + fmt("%.4e", min_eig)};
}

// 8. CLT gap decreases on the d = 1 fixture and the d = 2 table.
Outcome annealed_clt() {
  const int ns[] = {8, 12, 16};
  const auto geo = lln_clt_check(geometric_fixture(0.4, 0.3, 50), ns, alpha_grid(1, 1.5, 7));
  const auto tab = lln_clt_check(step_law(calibrate_lambda(strong_drift_table(0.0)).table), ns, alpha_grid(2, 1.5, 7));
  const auto dec = [](const std::vector<CltRow>& r) { return r[1].clt_gap < r[0].clt_gap && r[2].clt_gap < r[1].clt_gap; };
  std::string d = "d=1:";
  for (const auto& r : geo) d += " " + fmt("%.4f", r.clt_gap);
  d += "; d=2:";
  for (const auto& r : tab) d += " " + fmt("%.4f", r.clt_gap);
  return {dec(geo) && dec(tab), d};
}

// 9. Sinai identity.
Outcome sinai_identity() {
  SinaiConfig c;
  const auto hot = sinai_identity_check(c);
  c.beta = 0.0;
  const auto cold = sinai_identity_check(c);
  return {hot.max_identity_residual <= 1e-9 && cold.max_identity_residual <= 1e-12,
          "beta=1 " + fmt("%.2e", hot.max_identity_residual) + ", beta=0 " + fmt("%.2e", cold.max_identity_residual)};
}

// 10. Surcharge tail bound at beta = 0, exact enumeration.
Outcome surcharge_inequality() {
  const double lambda = 2.0;
  const auto norm = std::make_shared<SrwNorm>(2, lambda);
  const LatticeNorm lnorm(norm, 20);
  const Surcharge sur(norm, norm->dual(Vec{1, 0, 0}));
  SurchargeTailConfig cfg;
  cfg.lambda = lambda;
  cfg.K = 2 * lnorm(Point{{1, 0, 0}});
  cfg.eps = 0.2;
  cfg.targets = {Point{{6, 0, 0}}, Point{{8, 0, 0}}, Point{{10, 0, 0}}};
  const auto rows = surcharge_tail_test(cfg, lnorm, sur);
  bool ok = true;
  std::string d;
  for (const auto& r : rows) {
    ok = ok && r.holds;
    d += (d.empty() ? "" : "; ") + std::string("|x|=") + std::to_string(l1(r.x)) + " " + fmt("%.3e", r.exceed_hi) + " <= " + fmt("%.3e", r.bound);
  }
  return {ok, d};
}

// 11. Strong disorder in d = 2: fractional moments and the ratio track.
Outcome strong_disorder() {
  FractionalMomentConfig fc;
  const auto fm = fractional_moment_test(fc);
  RatioTrackConfig rc;
  const auto rt = ratio_track(rc);
  return {fm.slope_ci.strictly_below(0.0) && rt.slope_ci.strictly_below(0.0),
          "fractional slope " + fmt("%.4f", fm.slope) + " [" + fmt("%.4f", fm.slope_ci.lo) + ", " + fmt("%.4f", fm.slope_ci.hi) +
              "], ratio slope " + fmt("%.4f", rt.slope) + " [" + fmt("%.4f", rt.slope_ci.lo) + ", " + fmt("%.4f", rt.slope_ci.hi) + "]"};
}

// 12. Concentration of log Q.
Outcome concentration() {
  const auto r = concentration_check(ConcentrationConfig{});
  std::string d = "Var/N";
  for (double x : r.ratio) d += " " + fmt("%.4f", x);
  return {r.stable && r.converged && !r.starved, d + ", spread " + fmt("%.3f", r.spread)};
}

// 13. Tilted-cost algebra.
Outcome tilting_algebra() {
  double excess = -kInf, value0 = 0.0, slope0 = 0.0;
  for (double alpha : {0.25, 0.5, 0.75}) {
    for (int i = 0; i <= 200; ++i) {
      const double delta = 0.2 * i / 200.0;
      excess = std::max(excess, tilt_cost_exact(kHalf, alpha, delta) - tilt_cost_bound(alpha, delta));
    }
    value0 = std::max(value0, std::abs(tilt_cost_exact(kHalf, alpha, 0.0)));
    const double s = 1e-5;
    slope0 = std::max(slope0, std::abs(tilt_cost_exact(kHalf, alpha, s) - tilt_cost_exact(kHalf, alpha, -s)) / (2 * s));
  }
  return {excess <= 1e-9 && value0 <= 1e-6 && slope0 <= 1e-6,
          "max(cost - bound) " + fmt("%.3e", excess) + ", |value(0)| " + fmt("%.1e", value0) + ", |slope(0)| " + fmt("%.1e", slope0)};
}

// 14. Artifacts from every subcommand, twice, at 1 and 4 threads: identical bytes.
std::map<std::string, std::string> run_suite(const fs::path& dir, int threads) {
  using namespace polylab::cli;
  omp_set_num_threads(threads);
  fs::remove_all(dir);
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"env", {"radius=6", "tilt_delta=-0.3", "tilt_radius=2"}},
      {"partition", {"n=8"}},
      {"partition", {"kind=annealed", "beta=0.5", "n=6"}},
      {"lyapunov", {"replicas=8", "Ns=6,10", "bootstrap=50"}},
      {"decompose", {"kind=quenched", "beta=1"}},
      {"renewal", {"nmax=8", "horizon=24"}},
      {"clt", {"source=geometric"}},
      {"disorder", {"replicas=20", "annealed_factor=2", "ns=4,8,12", "bootstrap=100"}},
      {"disorder", {"check=sinai", "nmax=6", "environments=2"}},
      {"disorder", {"check=concentration", "replicas=6", "Ns=4,6,8", "bootstrap=50"}},
      {"fracmoment", {"replicas=10", "annealed_factor=2", "Ns=4,6,8", "bootstrap=50"}},
  };
  RunOptions opt;
  opt.out_dir = dir.string();
  std::vector<std::string> jsons;
  for (const auto& [cmd, args] : runs) {
    RawConfig raw;
    for (const auto& a : args) raw.push_back({a.substr(0, a.find('=')), a.substr(a.find('=') + 1), "suite", cmd});
    const auto res = run_command(Config::resolve(cmd, schema_for(cmd, raw), raw), opt);
    for (const auto& p : res.artifacts)
      if (p.size() > 5 && p.substr(p.size() - 5) == ".json") jsons.push_back(p);
  }
  run_report(jsons, opt);
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

Outcome determinism() {
  const int saved = omp_get_max_threads();
  const auto a = run_suite("acceptance_artifacts/threads1", 1);
  const auto b = run_suite("acceptance_artifacts/threads4", 4);
  const auto c = run_suite("acceptance_artifacts/threads4_again", 4);
  omp_set_num_threads(saved);
  int differing = 0;
  for (const auto& [name, bytes] : a) {
    if (!b.count(name) || b.at(name) != bytes) ++differing;
    if (!c.count(name) || c.at(name) != bytes) ++differing;
  }
  const bool same_sets = a.size() == b.size() && a.size() == c.size();
  return {same_sets && differing == 0 && a.size() > 20,
          std::to_string(a.size()) + " artifacts, " + std::to_string(differing) + " differing"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"annealed identity", annealed_identity},
      {"reference normalization", reference_normalization},
      {"d=1 Lyapunov closed form", lyapunov_closed_form},
      {"renewal identity", renewal_identity},
      {"normalization and limit", normalization_and_limit},
      {"implicit-function consistency", implicit_function},
      {"annealed CLT", annealed_clt},
      {"Sinai identity", sinai_identity},
      {"surcharge inequality", surcharge_inequality},
      {"strong disorder d=2", strong_disorder},
      {"concentration", concentration},
      {"tilting algebra", tilting_algebra},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures;
}
