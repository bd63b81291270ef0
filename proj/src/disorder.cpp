#include "polylab/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "polylab/ensembles.hpp"
#include "polylab/lyapunov.hpp"
#include "polylab/rng.hpp"

namespace polylab {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::WeakConsistent: return "weak-consistent";
    case Verdict::StrongConsistent: return "strong-consistent";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

void check_grid(const std::vector<int>& ns, const char* what) {
  if (ns.size() < 2) throw std::invalid_argument(std::string(what) + " needs at least two grid points");
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (ns[i] <= 0 || (i > 0 && ns[i] <= ns[i - 1])) throw std::invalid_argument(std::string(what) + " grid must increase");
}

std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

// log of the mean of exp(values[i]) over the chosen rows.
double log_mean_exp(const std::vector<std::vector<double>>& rows, std::size_t col, std::span<const std::size_t> pick) {
  std::vector<double> v;
  v.reserve(pick.size());
  for (std::size_t i : pick) v.push_back(rows[i][col]);
  std::sort(v.begin(), v.end());
  LogSum s;
  for (double x : v) s.add(x);
  return s.value() - std::log(static_cast<double>(pick.size()));
}

double mean_of(const std::vector<std::vector<double>>& rows, std::size_t col, std::span<const std::size_t> pick) {
  std::vector<double> v;
  for (std::size_t i : pick) v.push_back(rows[i][col]);
  return ordered_sum(v) / static_cast<double>(pick.size());
}

// Annealed rows owned by the chosen units.
std::vector<std::size_t> owned(std::span<const std::size_t> units, int factor) {
  std::vector<std::size_t> out;
  out.reserve(units.size() * static_cast<std::size_t>(factor));
  for (std::size_t u : units)
    for (int j = 0; j < factor; ++j) out.push_back(u * static_cast<std::size_t>(factor) + static_cast<std::size_t>(j));
  return out;
}

double slope_of(std::span<const double> x, std::span<const double> y) { return fit_line(x, y).slope; }

ConeSpec drift_cone(double h, double delta) {
  const double lam0 = std::log((std::cosh(h) + 1.0) / 2.0);
  return ConeSpec(std::make_shared<SrwNorm>(2, lam0), Vec{h, 0, 0}, delta);
}

}  // namespace

DisorderReport ratio_track(const RatioTrackConfig& cfg) {
  check_grid(cfg.ns, "ratio track");
  if (cfg.annealed_factor < 1) throw std::invalid_argument("annealed factor must be positive");
  const int nmax = cfg.ns.back();
  const WeightParams p{cfg.beta, 0.0, cfg.h};
  const Box box = default_dp_box(cfg.dim, nmax);
  const std::size_t nn = cfg.ns.size();
  const auto xs = as_doubles(cfg.ns);

  DisorderReport r;
  r.beta = cfg.beta;
  r.h = cfg.h;
  r.ns = cfg.ns;
  if (cfg.beta == 0.0) {
    const auto a = annealed_dp(cfg.dist, cfg.dim, p, nmax, box);
    for (int n : cfg.ns) r.log_annealed.push_back(a.log_total(n));
    r.track.assign(1, std::vector<double>(nn, 0.0));
    r.mean_track.assign(nn, 0.0);
    r.mean_ci.assign(nn, Interval{0.0, 0.0});
    r.verdict = Verdict::WeakConsistent;
    return r;
  }
  if (cfg.replicas < 2) throw std::invalid_argument("ratio track needs at least two replicas");
  const auto R = static_cast<std::size_t>(cfg.replicas);
  const std::size_t M = R * static_cast<std::size_t>(cfg.annealed_factor);
  std::vector<std::vector<double>> logq(R), loga(M);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < R + M; ++i) {
    const bool track = i < R;
    const std::uint64_t seed = track ? derive_seed(cfg.seed, stream::kReplica, i)
                                     : derive_seed(cfg.seed, stream::kAnnealedReplica, i - R);
    const auto env = Environment::sample(cfg.dist, box, seed);
    const auto t = quenched_dp(env, p, nmax, box, KernelMode::Serial);
    std::vector<double> row;
    for (int n : cfg.ns) row.push_back(t.log_total(n));
    (track ? logq[i] : loga[i - R]) = std::move(row);
  }

  const auto track_means = [&](std::span<const std::size_t> units) {
    const auto rows = owned(units, cfg.annealed_factor);
    std::vector<double> m(nn);
    for (std::size_t k = 0; k < nn; ++k) m[k] = mean_of(logq, k, units) - log_mean_exp(loga, k, rows);
    return m;
  };
  std::vector<std::size_t> all(R);
  for (std::size_t i = 0; i < R; ++i) all[i] = i;
  for (std::size_t k = 0; k < nn; ++k) r.log_annealed.push_back(log_mean_exp(loga, k, owned(all, cfg.annealed_factor)));
  r.track.resize(R);
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t k = 0; k < nn; ++k) r.track[i].push_back(logq[i][k] - r.log_annealed[k]);
  r.mean_track = track_means(all);
  for (std::size_t k = 0; k < nn; ++k) {
    const auto b = bootstrap(R, cfg.bootstrap, derive_seed(cfg.seed, stream::kBootstrap, k),
                             [&](std::span<const std::size_t> u) { return track_means(u)[k]; });
    r.mean_ci.push_back(b.ci95);
    r.jensen_ok = r.jensen_ok && b.ci95.lo <= 0.0;
  }
  const auto b = bootstrap(R, cfg.bootstrap, derive_seed(cfg.seed, stream::kBootstrap, nn),
                           [&](std::span<const std::size_t> u) { return slope_of(xs, track_means(u)); });
  r.slope = b.estimate;
  r.slope_ci = b.ci95;
  r.replicas = cfg.replicas;
  if (cfg.replicas < 20) r.verdict = Verdict::Inconclusive;
  else if (r.slope_ci.strictly_below(0.0)) r.verdict = Verdict::StrongConsistent;
  else if (r.slope_ci.contains(0.0) && r.slope_ci.width() < cfg.weak_width) r.verdict = Verdict::WeakConsistent;
  else r.verdict = Verdict::Inconclusive;
  return r;
}

ConcentrationReport concentration_check(const ConcentrationConfig& cfg) {
  check_grid(cfg.Ns, "concentration");
  LyapunovConfig lc;
  lc.kind = Ensemble::Quenched;
  lc.dist = cfg.dist;
  lc.dim = cfg.dim;
  lc.beta = cfg.beta;
  lc.lambda = cfg.lambda;
  lc.direction = cfg.direction;
  lc.Ns = cfg.Ns;
  lc.replicas = cfg.replicas;
  lc.seed = cfg.seed;
  const auto samples = conjugate_samples(lc, stream::kReplica);
  const std::size_t R = samples.log_z.size(), nn = cfg.Ns.size();

  ConcentrationReport r;
  r.Ns = cfg.Ns;
  r.converged = samples.converged;
  r.starved = cfg.beta != 0.0 && cfg.replicas < 20;
  const auto var_at = [&](std::size_t k, std::span<const std::size_t> pick) {
    std::vector<double> v;
    for (std::size_t i : pick) v.push_back(samples.log_z[i][k]);
    return variance(v);
  };
  // Least-squares quadratic coefficient of Var against N.
  const auto curvature = [&](std::span<const std::size_t> pick) {
    if (nn < 3) return 0.0;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(nn), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(nn));
    for (std::size_t k = 0; k < nn; ++k) {
      const double x = cfg.Ns[k];
      a.row(static_cast<Eigen::Index>(k)) << 1.0, x, x * x;
      y(static_cast<Eigen::Index>(k)) = var_at(k, pick);
    }
    return a.colPivHouseholderQr().solve(y)(2);
  };
  std::vector<std::size_t> all(R);
  for (std::size_t i = 0; i < R; ++i) all[i] = i;
  for (std::size_t k = 0; k < nn; ++k) {
    r.variance.push_back(var_at(k, all));
    r.ratio.push_back(r.variance.back() / cfg.Ns[k]);
    r.variance_ci.push_back(R > 1 ? bootstrap(R, cfg.bootstrap, derive_seed(cfg.seed, stream::kBootstrap, k),
                                              [&](std::span<const std::size_t> u) { return var_at(k, u); })
                                        .ci95
                                  : Interval{0.0, 0.0});
  }
  const auto [lo, hi] = std::minmax_element(r.ratio.begin(), r.ratio.end());
  r.c_hat = *hi;
  r.spread = *hi == 0.0 ? 1.0 : (*lo == 0.0 ? kInf : *hi / *lo);
  r.stable = r.spread <= 2.0;
  r.curvature = curvature(all);
  r.curvature_ci = R > 1 ? bootstrap(R, cfg.bootstrap, derive_seed(cfg.seed, stream::kBootstrap, nn), curvature).ci95
                         : Interval{0.0, 0.0};
  return r;
}

SinaiLedger sinai_identity_check(const SinaiConfig& cfg) {
  if (cfg.nmax < 2 || cfg.environments < 1) throw std::invalid_argument("Sinai check needs nmax >= 2 and an environment");
  const int nmax = cfg.nmax;
  const ConeSpec cone = drift_cone(cfg.h, cfg.delta);
  const Vec h{cfg.h, 0, 0};
  const double lam0 = std::log((std::cosh(cfg.h) + 1.0) / 2.0);
  const auto cal = calibrate_lambda(build_irreducible_tables(cfg.dist, 2, {cfg.beta, lam0, h}, cone, nmax));

  SinaiLedger L;
  L.lambda = cal.lambda;
  L.kappa = step_law(cal.table).mean_length();
  const SiteTable fa = cal.table.f();
  SiteTable ta = cal.table.t();
  ta.rows[0][Point{}] = 1.0;
  std::vector<double> fa_n(static_cast<std::size_t>(nmax) + 1, 0.0);
  for (int n = 0; n <= nmax; ++n) {
    L.t_annealed.push_back(ta.row_sum(n));
    fa_n[static_cast<std::size_t>(n)] = fa.row_sum(n);
  }
  const WeightParams p{cfg.beta, cal.lambda, h};
  const Box box = Box::centered(2, 2 * nmax + 2);
  const auto N = static_cast<std::size_t>(nmax) + 1;

  for (int e = 0; e < cfg.environments; ++e) {
    SinaiReplica rep;
    rep.env_seed = derive_seed(cfg.seed, stream::kReplica, static_cast<std::uint64_t>(e));
    const auto env = Environment::sample(cfg.dist, box, rep.env_seed);
    const auto q = quenched_irreducible_inversion(env, p, cone, nmax);
    SiteTable tq = q.origin.t();
    tq.rows[0][Point{}] = 1.0;
    std::map<Point, SiteTable> fq;
    fq.emplace(Point{}, q.origin.f());
    for (const auto& [x, tab] : q.from) fq.emplace(x, tab.f());

    // Quenched prefix followed by one corrected piece: W_{y,k} = sum t^w_{x,l} (f^{x} - f)_{y-x,k-l}.
    std::vector<std::map<Point, double>> W(N);
    for (int l = 0; l < nmax; ++l)
      for (const auto& [x, tx] : tq.rows[static_cast<std::size_t>(l)]) {
        const SiteTable& fx = fq.at(x);
        for (int m = 1; l + m <= nmax; ++m) {
          std::map<Point, double> diff;
          if (m <= fx.nmax())
            for (const auto& [d, v] : fx.rows[static_cast<std::size_t>(m)]) diff[d] += v;
          for (const auto& [d, v] : fa.rows[static_cast<std::size_t>(m)]) diff[d] -= v;
          for (const auto& [d, v] : diff) W[static_cast<std::size_t>(l + m)][x + d] += tx * v;
        }
      }
    double scale = 0.0;
    for (int n = 1; n <= nmax; ++n) {
      std::map<Point, double> rhs = ta.rows[static_cast<std::size_t>(n)];
      for (int k = 1; k <= n; ++k)
        for (const auto& [y, w] : W[static_cast<std::size_t>(k)])
          for (const auto& [d, t] : ta.rows[static_cast<std::size_t>(n - k)]) rhs[y + d] += w * t;
      for (const auto& [z, v] : tq.rows[static_cast<std::size_t>(n)]) {
        scale = std::max(scale, v);
        rhs.try_emplace(z, 0.0);
      }
      for (const auto& [z, v] : rhs) rep.identity_residual = std::max(rep.identity_residual, std::abs(v - tq.at(z, n)));
    }
    if (scale > 0) rep.identity_residual /= scale;

    rep.s.assign(N, 1.0);
    rep.s_direct.assign(N, 1.0);
    rep.eps.assign(N, 0.0);
    rep.t_quenched.assign(N, 0.0);
    for (int n = 0; n <= nmax; ++n) rep.t_quenched[static_cast<std::size_t>(n)] = tq.row_sum(n);
    for (int n = 1; n <= nmax; ++n) {
      double w = 0.0;
      for (const auto& [y, v] : W[static_cast<std::size_t>(n)]) w += v;
      rep.s[static_cast<std::size_t>(n)] = rep.s[static_cast<std::size_t>(n) - 1] + w;
    }
    // Direct loops over (l, x, m) for s and over (l, x, m, r) for the correction term.
    for (int n = 1; n <= nmax; ++n) {
      double s = 1.0, eps = 0.0;
      for (int l = 0; l < n; ++l)
        for (const auto& [x, tx] : tq.rows[static_cast<std::size_t>(l)]) {
          const SiteTable& fx = fq.at(x);
          for (int m = 1; l + m <= n; ++m) {
            const double dm = (m <= fx.nmax() ? fx.row_sum(m) : 0.0) - fa_n[static_cast<std::size_t>(m)];
            s += tx * dm;
            eps += tx * dm * (L.t_annealed[static_cast<std::size_t>(n - l - m)] - 1.0 / L.kappa);
          }
        }
      rep.s_direct[static_cast<std::size_t>(n)] = s;
      rep.eps[static_cast<std::size_t>(n)] = eps;
      const double lhs = rep.t_quenched[static_cast<std::size_t>(n)];
      const double rhs = s / L.kappa + (L.t_annealed[static_cast<std::size_t>(n)] - 1.0 / L.kappa) + eps;
      rep.decomposition_residual = std::max(rep.decomposition_residual, std::abs(lhs - rhs));
      rep.s_gap = std::max(rep.s_gap, std::abs(s - rep.s[static_cast<std::size_t>(n)]));
    }
    if (rep.identity_residual > 1e-9)
      throw std::runtime_error("expansion identity fails (residual " + format_double(rep.identity_residual) +
                               ", environment seed " + std::to_string(rep.env_seed) + "): cone or table conventions differ");
    L.max_identity_residual = std::max(L.max_identity_residual, rep.identity_residual);
    L.max_decomposition_residual = std::max(L.max_decomposition_residual, rep.decomposition_residual);
    L.max_s_gap = std::max(L.max_s_gap, rep.s_gap);
    L.replicas.push_back(std::move(rep));
  }
  return L;
}

double tilt_cost_exact(const PotentialDistribution& dist, double alpha, double delta) {
  const double a = alpha / (1.0 - alpha);
  return -dist.tilt_g(-a * delta) - a * dist.tilt_g(delta);
}

double tilt_cost_bound(double alpha, double delta) {
  const double d = 1.0 - alpha * alpha;
  return alpha * delta * delta / (d * d);
}

FractionalMomentReport fractional_moment_test(const FractionalMomentConfig& cfg) {
  if (cfg.dim != 2) throw std::invalid_argument("the fractional-moment test is two-dimensional");
  if (!(cfg.lambda > 0.0)) throw std::invalid_argument("the fractional-moment test needs lambda > 0");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0 / 3.0)) throw std::invalid_argument("epsilon must lie in (0,1/3)");
  if (cfg.annealed_factor < 1) throw std::invalid_argument("annealed factor must be positive");
  check_grid(cfg.Ns, "fractional moment");
  const std::size_t nn = cfg.Ns.size();
  const auto xs = as_doubles(cfg.Ns);
  const double a = cfg.alpha;

  LyapunovConfig lc;
  lc.kind = Ensemble::Quenched;
  lc.dist = cfg.dist;
  lc.dim = 2;
  lc.beta = cfg.beta;
  lc.lambda = cfg.lambda;
  lc.Ns = cfg.Ns;
  lc.replicas = cfg.replicas;
  lc.seed = cfg.seed;
  lc.rel_tol = cfg.rel_tol;

  FractionalMomentReport r;
  r.alpha = a;
  r.Ns = cfg.Ns;
  const auto q = conjugate_samples(lc, stream::kReplica);
  r.converged = q.converged;
  if (cfg.beta == 0.0) {
    r.log_annealed = q.log_z.front();
    r.moment.assign(nn, 0.0);
    r.first_moment.assign(nn, 0.0);
    r.moment_ci.assign(nn, Interval{0.0, 0.0});
    r.first_moment_ci = r.moment_ci;
    r.verdict = Verdict::WeakConsistent;
    return r;
  }
  lc.replicas = cfg.replicas * cfg.annealed_factor;
  const auto an = conjugate_samples(lc, stream::kAnnealedReplica);
  r.converged = r.converged && an.converged;
  const auto R = q.log_z.size();

  // Tilt box and tilted replicas, coupled to the untilted ones through the site seeds.
  // The tilt raises the potential: it is the density e^{+delta (V ^ 1) - g(-delta)}.
  if (cfg.norm_e1 > 0.0) {
    r.norm_e1 = cfg.norm_e1;
  } else {
    std::vector<double> v;
    for (const auto& row : q.log_z) v.push_back(-row.back() / cfg.Ns.back());
    r.norm_e1 = ordered_sum(v) / static_cast<double>(v.size());
  }
  r.K = static_cast<int>(std::ceil(2.0 / r.norm_e1));
  std::vector<std::vector<double>> tilted(R, std::vector<double>(nn));
  std::vector<char> ok(R * nn, 1);
  for (std::size_t k = 0; k < nn; ++k) {
    const int N = cfg.Ns[k];
    const int w = static_cast<int>(std::floor(std::pow(N, 0.5 + cfg.epsilon)));
    const double dN = std::pow(N, -0.5 - 2.0 * cfg.epsilon);
    const Box region(2, Point{{0, -w, 0}}, Point{{r.K * N, w, 0}});
    r.tilt_delta.push_back(dN);
    r.box_sites.push_back(static_cast<long>(region.size()));
    r.tilt_cost.push_back((1.0 - a) * static_cast<double>(region.size()) * tilt_cost_exact(cfg.dist, a, -dN));
    r.tilt_cost_bound.push_back(tilt_cost_bound(a, dN) * static_cast<double>(region.size()));
    const Point target[] = {Point{{N, 0, 0}}};
    ConjugateOptions opt;
    opt.rel_tol = cfg.rel_tol;
    opt.mode = KernelMode::Serial;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < R; ++i) {
      // Same retry schedule as the untilted sums: widen the box until the boundary loss is small.
      int margin = std::max(10, N / 2 + 4);
      ConjugateResult res;
      for (int attempt = 0; attempt < 4; ++attempt) {
        const Box box(2, Point{{-margin, -std::max(margin, w + 1), 0}},
                      Point{{r.K * N + margin, std::max(margin, w + 1), 0}});
        const auto env =
            Environment::sample_tilted(cfg.dist, {-dN, region}, box, derive_seed(cfg.seed, stream::kReplica, i));
        res = conjugate_partition(&env, box, {cfg.beta, cfg.lambda, {}}, target, opt);
        if (res.converged) break;
        margin = margin * 3 / 2 + 2;
      }
      tilted[i][k] = res.log_value[0];
      ok[i * nn + k] = res.converged;
    }
  }
  r.converged = r.converged && std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });

  const auto log_a = [&](std::size_t k, std::span<const std::size_t> units) {
    return log_mean_exp(an.log_z, k, owned(units, cfg.annealed_factor));
  };
  const auto moment = [&](std::size_t k, std::span<const std::size_t> units, double power) {
    const double la = log_a(k, units);
    std::vector<double> v;
    for (std::size_t i : units) v.push_back(power * (q.log_z[i][k] - la));
    std::sort(v.begin(), v.end());
    LogSum s;
    for (double x : v) s.add(x);
    return s.value() - std::log(static_cast<double>(units.size()));
  };
  const auto moments = [&](std::span<const std::size_t> units) {
    std::vector<double> m(nn);
    for (std::size_t k = 0; k < nn; ++k) m[k] = moment(k, units, a);
    return m;
  };
  std::vector<std::size_t> all(R);
  for (std::size_t i = 0; i < R; ++i) all[i] = i;
  for (std::size_t k = 0; k < nn; ++k) {
    r.log_annealed.push_back(log_a(k, all));
    r.moment.push_back(moment(k, all, a));
    r.first_moment.push_back(moment(k, all, 1.0));
    r.moment_ci.push_back(bootstrap(R, cfg.bootstrap, derive_seed(cfg.seed, stream::kBootstrap, k),
                                    [&](std::span<const std::size_t> u) { return moment(k, u, a); })
                              .ci95);
    r.first_moment_ci.push_back(bootstrap(R, cfg.bootstrap, derive_seed(cfg.seed, stream::kBootstrap, nn + k),
                                          [&](std::span<const std::size_t> u) { return moment(k, u, 1.0); })
                                    .ci95);
    // E~(Q/A) = E~ Q / E Q, both sides from the same coupled replicas.
    std::vector<std::vector<double>> pair(R, std::vector<double>(2));
    for (std::size_t i = 0; i < R; ++i) pair[i] = {tilted[i][k], q.log_z[i][k]};
    r.tilt_drop.push_back(-a * (log_mean_exp(pair, 0, all) - log_mean_exp(pair, 1, all)));
  }
  const auto b = bootstrap(R, cfg.bootstrap, derive_seed(cfg.seed, stream::kBootstrap, 2 * nn),
                           [&](std::span<const std::size_t> u) { return slope_of(xs, moments(u)); });
  r.slope = b.estimate;
  r.slope_ci = b.ci95;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < nn; ++k) {
    const double s = r.tilt_delta[k] * cfg.Ns[k];
    num += r.tilt_drop[k] / a * s;
    den += s * s;
  }
  r.drop_rate = num / den;
  r.tilt_dominates = true;
  for (std::size_t k = 0; k < nn; ++k) r.tilt_dominates = r.tilt_dominates && r.tilt_cost[k] < r.tilt_drop[k];
  r.verdict = cfg.replicas >= 20 && r.slope_ci.strictly_below(0.0) ? Verdict::StrongConsistent : Verdict::Inconclusive;
  return r;
}

QuenchedLlnReport quenched_lln_check(const QuenchedLlnConfig& cfg, const DisorderReport* ratio) {
  if (ratio && ratio->verdict == Verdict::StrongConsistent)
    throw std::domain_error("ratio_track reports strong disorder at these parameters; the quenched LLN hypothesis fails");
  if (cfg.n < 1 || cfg.n > enumeration_cap(2)) throw std::invalid_argument("length outside the enumeration cap");
  if (cfg.replicas < 2) throw std::invalid_argument("need at least two replicas");
  const ConeSpec cone = drift_cone(cfg.h, cfg.delta);
  const Vec h{cfg.h, 0, 0};
  const double lam0 = std::log((std::cosh(cfg.h) + 1.0) / 2.0);
  const auto law = step_law(calibrate_lambda(build_irreducible_tables(cfg.dist, 2, {cfg.beta, lam0, h}, cone, 12)).table);

  QuenchedLlnReport r;
  r.beta = cfg.beta;
  r.n = cfg.n;
  r.v = mu_gradient(law);
  const WeightParams p{cfg.beta, 0.0, h};
  const auto dist_to_v = [&](const Vec& mean) {
    Vec d{};
    for (int i = 0; i < 2; ++i) d[static_cast<std::size_t>(i)] = mean[static_cast<std::size_t>(i)] / cfg.n - r.v[static_cast<std::size_t>(i)];
    return euclid(d);
  };
  r.annealed_gap = dist_to_v(ensemble_stats(cfg.dist, 2, p, cfg.n).mean);
  const auto R = static_cast<std::size_t>(cfg.replicas);
  r.deviation.resize(R);
  const Box box = default_dp_box(2, cfg.n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < R; ++i) {
    const auto env = Environment::sample(cfg.dist, box, derive_seed(cfg.seed, stream::kReplica, i));
    r.deviation[i] = dist_to_v(ensemble_stats(quenched_dp(env, p, cfg.n, box, KernelMode::Serial), cfg.n).mean);
  }
  r.max_deviation = *std::max_element(r.deviation.begin(), r.deviation.end());
  r.mean_deviation = ordered_sum(r.deviation) / static_cast<double>(R);
  r.mean_deviation_ci = bootstrap(R, 1000, derive_seed(cfg.seed, stream::kBootstrap), [&](std::span<const std::size_t> u) {
                          std::vector<double> v;
                          for (std::size_t i : u) v.push_back(r.deviation[i]);
                          return ordered_sum(v) / static_cast<double>(u.size());
                        }).ci95;
  r.within_band = r.max_deviation < 3.0 * r.annealed_gap;
  return r;
}

}  // namespace polylab
