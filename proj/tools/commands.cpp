#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"
#include "polylab/coarse_grain.hpp"
#include "polylab/disorder.hpp"
#include "polylab/ensembles.hpp"
#include "polylab/lyapunov.hpp"
#include "polylab/norms.hpp"
#include "polylab/renewal.hpp"
#include "polylab/rng.hpp"
#include "polylab/stats.hpp"

namespace polylab::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---- schema helpers ----

KeySpec key(std::string name, ValueType t, std::string fallback, std::string doc) {
  return {std::move(name), t, std::move(fallback), {}, std::move(doc)};
}
KeySpec choice(std::string name, std::vector<std::string> options, std::string doc) {
  KeySpec k{std::move(name), ValueType::Choice, options.front(), std::move(options), std::move(doc)};
  return k;
}

const KeySpec kDist = key("dist", ValueType::Dist, "bernoulli(0.5,1)", "potential law");
const KeySpec kSeed = key("seed", ValueType::UInt, "1", "master seed");

// Renewal sources shared by `renewal` and `clt`.
Schema law_keys() {
  return {choice("source", {"table", "geometric", "degenerate"}, "irreducible step law"),
          kDist,
          key("dim", ValueType::Int, "2", "lattice dimension (table)"),
          key("beta", ValueType::Real, "0", "inverse temperature (table)"),
          key("h", ValueType::RealList, "2,0", "drift (table)"),
          key("delta", ValueType::Real, "0.5", "cone aperture (table)"),
          key("nmax", ValueType::Int, "12", "largest length of the enumerated table"),
          key("fixture_nmax", ValueType::Int, "50", "largest length of the geometric fixture"),
          key("rho", ValueType::Real, "0.4", "geometric fixture: continuation probability"),
          key("q", ValueType::Real, "0.3", "geometric fixture: step success probability")};
}

std::string selector(const RawConfig& raw, const std::string& name, const std::string& fallback) {
  std::string v = fallback;
  for (const auto& e : raw)
    if (e.key == name) v = e.value;
  return v;
}

// ---- JSON helpers ----

json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);  // "inf", "-inf", "nan"
}

json vec_json(const Vec& v, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(num(v[static_cast<std::size_t>(i)]));
  return a;
}

json point_json(const Point& p, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

json matrix_json(const std::array<Vec, kMaxDim>& m, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(vec_json(m[static_cast<std::size_t>(i)], dim));
  return a;
}

json interval_json(const Interval& c) { return json::array({num(c.lo), num(c.hi)}); }

json reals_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

// Normal-theory CI of a replica mean; `report` pools these.
json pool_json(const std::string& quantity, const std::vector<double>& values) {
  return {{"quantity", quantity}, {"values", reals_json(values)}};
}

// ---- artifacts ----

class Artifacts {
 public:
  Artifacts(const Config& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt) {
    fs::create_directories(opt.out_dir);
    stem_ = cfg.command() + "-" + cfg.hash();
  }

  std::string path(const std::string& suffix) const { return (fs::path(opt_.out_dir) / (stem_ + suffix)).string(); }

  // Writes a sibling artifact; refuses to touch an input.
  std::string write(const std::string& suffix, const std::string& content) {
    const std::string p = path(suffix);
    for (const auto& in : opt_.inputs)
      if (fs::exists(in) && fs::exists(p) && fs::equivalent(in, p))
        throw std::runtime_error("refusing to overwrite input file '" + in + "'");
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p + "'");
    out << content;
    written_.push_back(p);
    return p;
  }

  RunResult finish(json results, int exit_code, const std::string& summary, json pool = nullptr) {
    json doc;
    doc["command"] = cfg_.command();
    doc["config"] = cfg_.values();
    doc["config_hash"] = cfg_.hash();
    doc["status"] = exit_code == kExitInconclusive ? "inconclusive" : "ok";
    doc["results"] = std::move(results);
    json names = json::array();
    for (const auto& p : written_) names.push_back(fs::path(p).filename().string());
    doc["artifacts"] = names;
    if (!pool.is_null()) doc["pool"] = std::move(pool);
    write(".json", doc.dump(2) + "\n");
    return {exit_code, written_, summary};
  }

 private:
  const Config& cfg_;
  const RunOptions& opt_;
  std::string stem_;
  std::vector<std::string> written_;
};

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s + "\n";
}

std::string fd(double v) { return format_double(v); }

int checked_dim(const Config& c) {
  const long d = c.get_int("dim");
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("dim must lie in 1..3");
  return static_cast<int>(d);
}

Vec checked_vec(const Config& c, const std::string& k, int dim) {
  const Vec v = c.get_vec(k);
  for (int i = dim; i < kMaxDim; ++i)
    if (v[static_cast<std::size_t>(i)] != 0.0) throw std::invalid_argument("key '" + k + "' has more components than dim");
  return v;
}

Point checked_point(const Config& c, const std::string& k, int dim) {
  const Point p = c.get_point(k);
  for (int i = dim; i < kMaxDim; ++i)
    if (p[i] != 0) throw std::invalid_argument("key '" + k + "' has more components than dim");
  return p;
}

std::uint64_t env_seed(const Config& c) { return derive_seed(c.get_uint("seed"), stream::kReplica, 0); }

// ---- env ----

RunResult run_env(const Config& c, const RunOptions& opt) {
  const int dim = checked_dim(c);
  const auto dist = c.get_dist("dist");
  const Box box = Box::centered(dim, static_cast<int>(c.get_int("radius")));
  const double td = c.get_real("tilt_delta");
  const auto env = td == 0.0 ? Environment::sample(dist, box, env_seed(c))
                             : Environment::sample_tilted(dist, {td, Box::centered(dim, static_cast<int>(c.get_int("tilt_radius")))},
                                                          box, env_seed(c));
  Artifacts art(c, opt);
  std::ostringstream os;
  env.write(os);
  art.write(".env", os.str());

  std::vector<double> trunc;
  long nonzero = 0, traps = 0;
  for (double v : env.values()) {
    trunc.push_back(std::min(v, 1.0));
    nonzero += v > 0.0;
    traps += std::isinf(v);
  }
  json r;
  r["box"] = box.str();
  r["sites"] = box.size();
  r["nonzero_fraction"] = num(static_cast<double>(nonzero) / static_cast<double>(box.size()));
  r["traps"] = traps;
  r["mean_truncated"] = num(ordered_sum(trunc) / static_cast<double>(trunc.size()));
  r["law_mean_truncated"] = num(dist.mean_truncated());
  r["environment_seed"] = std::to_string(env.seed());
  return art.finish(r, kExitOk, "environment on " + box.str());
}

// ---- partition ----

RunResult run_partition(const Config& c, const RunOptions& opt) {
  const int dim = checked_dim(c);
  const auto dist = c.get_dist("dist");
  const int n = static_cast<int>(c.get_int("n"));
  if (n < 0) throw std::invalid_argument("n must be >= 0");
  const WeightParams p{c.get_real("beta"), c.get_real("lambda"), checked_vec(c, "h", dim)};
  p.validate(dim);
  const bool quenched = c.get_text("kind") == "quenched";

  Artifacts art(c, opt);
  json r;
  std::vector<double> log_total;
  std::map<Point, double> final_row;
  EnsembleStats stats;
  std::string method;
  if (quenched || p.beta == 0.0) {
    const Box box = default_dp_box(dim, n);
    std::optional<Environment> env;
    if (quenched) env = Environment::sample(dist, box, env_seed(c));
    const auto table = quenched ? quenched_dp(*env, p, n) : annealed_dp(dist, dim, p, n);
    for (int m = 0; m <= n; ++m) log_total.push_back(table.log_total(m));
    for (std::size_t k = 0; k < box.size(); ++k) {
      const Point x = box.point(k);
      const double v = table.log_at(n, x);
      if (v != kNegInf) final_row[x] = v;
    }
    std::ostringstream os;
    table.write_csv(os);
    art.write(".csv", os.str());
    stats = ensemble_stats(table, n);
    method = "transfer";
  } else {
    if (n > enumeration_cap(dim))
      throw std::invalid_argument("annealed sums at beta > 0 use enumeration, capped at n = " + std::to_string(enumeration_cap(dim)));
    std::ostringstream os;
    os << "n";
    for (int i = 0; i < dim; ++i) os << ",x" << (i + 1);
    os << ",log_value,kind,truncated_flag\n";
    for (int m = 0; m <= n; ++m) {
      const auto e = enumerate_partition(dist, dim, p, m);
      log_total.push_back(e.log_total);
      for (const auto& [x, v] : e.log_by_endpoint) {
        os << m;
        for (int i = 0; i < dim; ++i) os << ',' << x[i];
        os << ',' << fd(v) << ",annealed,0\n";
      }
      if (m == n) final_row = e.log_by_endpoint;
    }
    art.write(".csv", os.str());
    stats = ensemble_stats(dist, dim, p, n);
    method = "enumeration";
  }

  // Endpoint law at the final length.
  std::ostringstream ep;
  std::vector<std::string> head;
  for (int i = 0; i < dim; ++i) head.push_back("x" + std::to_string(i + 1));
  head.insert(head.end(), {"log_value", "probability"});
  ep << csv_line(head);
  std::vector<double> probs;
  for (const auto& [x, v] : final_row) {
    const double pr = std::exp(v - log_total.back());
    probs.push_back(pr);
    std::vector<std::string> row;
    for (int i = 0; i < dim; ++i) row.push_back(std::to_string(x[i]));
    row.insert(row.end(), {fd(v), fd(pr)});
    ep << csv_line(row);
  }
  art.write("-endpoint.csv", ep.str());

  r["method"] = method;
  r["log_total"] = reals_json(log_total);
  r["probability_sum"] = num(ordered_sum(probs));
  r["mean_extension"] = vec_json(stats.mean, dim);
  r["covariance"] = matrix_json(stats.cov, dim);
  return art.finish(r, kExitOk, "log Z_" + std::to_string(n) + " = " + fd(log_total.back()));
}

// ---- lyapunov ----

RunResult run_lyapunov(const Config& c, const RunOptions& opt) {
  LyapunovConfig lc;
  lc.kind = c.get_text("kind") == "quenched" ? Ensemble::Quenched : Ensemble::Annealed;
  lc.dist = c.get_dist("dist");
  lc.dim = checked_dim(c);
  lc.beta = c.get_real("beta");
  lc.lambda = c.get_real("lambda");
  lc.direction = checked_point(c, "direction", lc.dim);
  lc.Ns = c.get_ints("Ns");
  lc.replicas = static_cast<int>(c.get_int("replicas"));
  lc.seed = c.get_uint("seed");
  lc.bootstrap = static_cast<int>(c.get_int("bootstrap"));
  lc.rel_tol = c.get_real("rel_tol");
  const auto est = estimate_lyapunov(lc);

  Artifacts art(c, opt);
  std::ostringstream os;
  os << "N,per_n,per_n_se\n";
  for (std::size_t k = 0; k < est.Ns.size(); ++k)
    os << csv_line({std::to_string(est.Ns[k]), fd(est.per_n[k]), fd(est.per_n_se[k])});
  art.write(".csv", os.str());

  const double len = euclid(to_vec(lc.direction));
  json r;
  r["value"] = num(est.value);
  r["stderr"] = num(est.stderr);
  r["intercept"] = num(est.intercept);
  r["slope"] = num(est.slope);
  r["exact"] = est.exact;
  r["converged"] = est.converged;
  r["replicas"] = est.replicas;
  r["per_n"] = reals_json(est.per_n);
  if (lc.beta == 0.0) r["killed_walk_value"] = num(SrwNorm(lc.dim, lc.lambda)(to_vec(lc.direction)) / len);

  json pool = nullptr;
  if (lc.kind == Ensemble::Quenched && lc.beta != 0.0) {
    const auto s = conjugate_samples(lc, stream::kReplica);
    std::vector<double> v;
    for (const auto& row : s.log_z) v.push_back(-row.back() / (lc.Ns.back() * len));
    pool = pool_json("-log Q(N dir) / |N dir| at the largest N", v);
  }
  return art.finish(r, est.converged ? kExitOk : kExitInconclusive, "exponent " + fd(est.value), pool);
}

// ---- decompose ----

json ranges_json(const std::vector<std::pair<int, int>>& rs) {
  json a = json::array();
  for (const auto& [s, e] : rs) a.push_back(json::array({s, e}));
  return a;
}

RunResult run_decompose(const Config& c, RunOptions opt) {
  const int dim = checked_dim(c);
  const auto dist = c.get_dist("dist");
  const Vec h = checked_vec(c, "h", dim);
  const double lam = srw_lambda_of_h(dim, h);
  if (!(lam > 0.0)) throw std::invalid_argument("decompose needs a nonzero drift h");
  const auto norm = std::make_shared<SrwNorm>(dim, lam);

  LatticePath path(dim);
  const std::string file = c.get_text("path");
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open path file '" + file + "'");
    path = LatticePath::read(in, dim);
    opt.inputs.push_back(file);
  } else {
    const int n = static_cast<int>(c.get_int("n"));
    const WeightParams p{c.get_real("beta"), 0.0, h};
    const auto seed = derive_seed(c.get_uint("seed"), stream::kPathSample, 0);
    if (c.get_text("kind") == "quenched") {
      const auto env = Environment::sample(dist, default_dp_box(dim, n), env_seed(c));
      path = sample_paths(quenched_dp(env, p, n), &env, n, 1, seed).front();
    } else if (p.beta == 0.0) {
      path = sample_paths(annealed_dp(dist, dim, p, n), nullptr, n, 1, seed).front();
    } else {
      path = sample_paths(dist, dim, p, n, 1, seed).front();
    }
  }
  const int n = path.length();
  const ConeSpec cone(norm, h, c.get_real("delta"), std::max(16, n + 1));
  const auto split = irreducible_decompose(path, cone);
  const auto skel = build_skeleton(path, c.get_real("K"), LatticeNorm(norm, n + 1));
  const Surcharge sur(norm, dual_unit(*norm, h));

  Artifacts art(c, opt);
  std::ostringstream ps;
  path.write(ps);
  art.write(".path", ps.str());

  json sites = json::array();
  for (const auto& s : path.sites()) sites.push_back(point_json(s, dim));
  json r;
  r["length"] = n;
  r["sites"] = sites;
  r["cone"] = cone.describe();

  json irr;
  irr["cone_points"] = split.cone;
  irr["flagged"] = split.flagged;
  irr["confined"] = split.confined;
  std::vector<std::pair<int, int>> pieces;
  for (std::size_t i = 0; i + 1 < split.cone.size(); ++i) pieces.push_back({split.cone[i], split.cone[i + 1]});
  irr["pieces"] = ranges_json(pieces);
  if (!split.flagged) {
    irr["prefix"] = json::array({0, split.cone.front()});
    irr["suffix"] = json::array({split.cone.back(), n});
  }
  irr["reassembles"] = split.reassemble() == path;
  r["irreducible"] = irr;

  json sk;
  sk["K"] = num(skel.K);
  sk["u"] = skel.u;
  sk["v"] = skel.v;
  json verts = json::array();
  for (const auto& x : skel.vertices()) verts.push_back(point_json(x, dim));
  sk["vertices"] = verts;
  std::vector<std::pair<int, int>> sp, hp;
  for (int i = 0; i < skel.m(); ++i) {
    sp.push_back({skel.u[static_cast<std::size_t>(i)], skel.v[static_cast<std::size_t>(i)]});
    hp.push_back({skel.v[static_cast<std::size_t>(i)], skel.u[static_cast<std::size_t>(i + 1)]});
  }
  sp.push_back({skel.u.back(), n});
  sk["pieces"] = ranges_json(sp);
  sk["hairs"] = ranges_json(hp);
  sk["surcharge"] = num(skeleton_surcharge(skel, sur));
  sk["reassembles"] = skel.reassemble() == path;
  r["skeleton"] = sk;
  return art.finish(r, kExitOk,
                    std::to_string(split.cone.size()) + " cone points, skeleton m = " + std::to_string(skel.m()));
}

// ---- renewal / clt ----

struct LawSource {
  StepLaw law;
  json meta;
  std::optional<IrreducibleTable> table;
};

LawSource build_law(const Config& c) {
  LawSource s;
  const std::string src = c.get_text("source");
  const int nmax = static_cast<int>(c.get_int("nmax"));
  s.meta["source"] = src;
  if (src == "geometric") {
    const int fmax = static_cast<int>(c.get_int("fixture_nmax"));
    s.law = geometric_fixture(c.get_real("rho"), c.get_real("q"), fmax);
    s.meta["residual"] = num(renewal_residual(s.law.as_table(), renewal_convolve(s.law.as_table(), fmax)));
  } else if (src == "degenerate") {
    s.law = degenerate_fixture();
    s.meta["residual"] = num(renewal_residual(s.law.as_table(), renewal_convolve(s.law.as_table(), nmax)));
  } else {
    const int dim = checked_dim(c);
    const Vec h = checked_vec(c, "h", dim);
    const double lam0 = srw_lambda_of_h(dim, h);
    if (!(lam0 > 0.0)) throw std::invalid_argument("renewal tables need a nonzero drift h");
    const ConeSpec cone(std::make_shared<SrwNorm>(dim, lam0), h, c.get_real("delta"));
    const auto tab = build_irreducible_tables(c.get_dist("dist"), dim, {c.get_real("beta"), lam0, h}, cone, nmax);
    s.meta["residual"] = num(renewal_residual(tab.f(), tab.t()));
    s.meta["log_total_f_uncalibrated"] = num(tab.log_total_f());
    const auto cal = calibrate_lambda(tab);
    s.meta["lambda"] = num(cal.lambda);
    s.meta["log_deficit_estimate"] = num(cal.log_deficit_estimate);
    s.meta["cone"] = tab.cone;
    s.law = step_law(cal.table);
    s.table = cal.table;
  }
  s.meta["sum_f"] = num(s.law.total());
  return s;
}

RunResult run_renewal(const Config& c, const RunOptions& opt) {
  auto src = build_law(c);
  const int horizon = static_cast<int>(c.get_int("horizon"));
  const auto lim = renewal_limit(src.law, horizon);
  const int dim = src.law.dim;

  Artifacts art(c, opt);
  if (src.table) {
    std::ostringstream os;
    src.table->write(os);
    art.write(".table", os.str());
  }
  std::ostringstream os;
  os << "n,t_n,gap\n";
  for (std::size_t n = 0; n < lim.t_n.size(); ++n)
    os << csv_line({std::to_string(n), fd(lim.t_n[n]), fd(std::abs(lim.t_n[n] - lim.limit))});
  art.write(".csv", os.str());

  json r = src.meta;
  r["kappa"] = num(lim.kappa);
  r["limit"] = num(lim.limit);
  r["tail_rate"] = num(lim.tail_rate);
  r["tail_r2"] = num(lim.tail_r2);
  r["raw_r2"] = num(lim.raw_r2);
  r["fit_points"] = lim.fit_points;
  r["drift"] = vec_json(lim.drift, dim);
  r["covariance"] = matrix_json(lim.cov, dim);
  const int nmax = static_cast<int>(c.get_int("nmax"));
  if (nmax < static_cast<int>(lim.t_n.size())) r["t_nmax_kappa_gap"] = num(std::abs(lim.t_n[static_cast<std::size_t>(nmax)] * lim.kappa - 1.0));
  const auto hess = mu_hessian(src.law);
  r["mu_gradient"] = vec_json(mu_gradient(src.law), dim);
  r["mu_gradient_fd"] = vec_json(mu_gradient_fd(src.law), dim);
  r["mu_hessian"] = matrix_json(hess, dim);
  r["mu_hessian_min_eigenvalue"] = num(min_eigenvalue(hess, dim));
  return art.finish(r, kExitOk, "kappa = " + fd(lim.kappa));
}

RunResult run_clt(const Config& c, const RunOptions& opt) {
  auto src = build_law(c);
  const int dim = src.law.dim;
  const auto ns = c.get_ints("ns");
  const auto alphas = alpha_grid(dim, c.get_real("alpha_max"), static_cast<int>(c.get_int("alpha_points")));
  const auto rows = lln_clt_check(src.law, ns, alphas);
  const int radius = static_cast<int>(c.get_int("local_radius"));

  Artifacts art(c, opt);
  std::ostringstream os;
  os << "n,t_n,lln_gap,rel_mean_gap,clt_gap,local_flatness\n";
  json out = json::array();
  bool monotone = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& row = rows[k];
    const auto loc = local_limit_check(src.law, row.n, radius);
    os << csv_line({std::to_string(row.n), fd(row.t_n), fd(row.lln_gap), fd(row.rel_mean_gap), fd(row.clt_gap), fd(loc.flatness)});
    out.push_back({{"n", row.n}, {"t_n", num(row.t_n)}, {"mean", vec_json(row.mean, dim)}, {"lln_gap", num(row.lln_gap)},
                   {"clt_gap", num(row.clt_gap)}, {"local_flatness", num(loc.flatness)}, {"local_G_at_mean", num(loc.G_at_mean)},
                   {"local_sites", loc.rows.size()}});
    if (k > 0 && !(row.clt_gap < rows[k - 1].clt_gap)) monotone = false;
  }
  art.write(".csv", os.str());
  json r = src.meta;
  r["rows"] = out;
  r["clt_gap_decreasing"] = monotone;
  return art.finish(r, kExitOk, std::string("CLT gap ") + (monotone ? "decreasing" : "not decreasing"));
}

// ---- disorder ----

RunResult run_disorder(const Config& c, const RunOptions& opt) {
  const std::string check = c.get_text("check");
  const auto dist = c.get_dist("dist");
  const auto seed = c.get_uint("seed");
  Artifacts art(c, opt);
  json r;
  r["check"] = check;

  if (check == "ratio") {
    RatioTrackConfig rc;
    rc.dist = dist;
    rc.dim = checked_dim(c);
    rc.beta = c.get_real("beta");
    rc.h = checked_vec(c, "h", rc.dim);
    rc.ns = c.get_ints("ns");
    rc.replicas = static_cast<int>(c.get_int("replicas"));
    rc.annealed_factor = static_cast<int>(c.get_int("annealed_factor"));
    rc.seed = seed;
    rc.bootstrap = static_cast<int>(c.get_int("bootstrap"));
    rc.weak_width = c.get_real("weak_width");
    const auto rep = ratio_track(rc);
    std::ostringstream os;
    os << "n,log_annealed,mean_track,ci_lo,ci_hi\n";
    for (std::size_t k = 0; k < rep.ns.size(); ++k)
      os << csv_line({std::to_string(rep.ns[k]), fd(rep.log_annealed[k]), fd(rep.mean_track[k]), fd(rep.mean_ci[k].lo),
                      fd(rep.mean_ci[k].hi)});
    art.write(".csv", os.str());
    r["log_annealed"] = reals_json(rep.log_annealed);
    r["mean_track"] = reals_json(rep.mean_track);
    json cis = json::array();
    for (const auto& ci : rep.mean_ci) cis.push_back(interval_json(ci));
    r["mean_ci"] = cis;
    r["slope"] = num(rep.slope);
    r["slope_ci"] = interval_json(rep.slope_ci);
    r["jensen_ok"] = rep.jensen_ok;
    r["verdict"] = to_string(rep.verdict);
    // log Q_n / n is i.i.d. across seeds; log(Q_n / A_n) is not, since each run estimates its own A_n.
    std::vector<double> last;
    for (const auto& row : rep.track) last.push_back((row.back() + rep.log_annealed.back()) / rep.ns.back());
    return art.finish(r, rep.verdict == Verdict::Inconclusive ? kExitInconclusive : kExitOk,
                      "ratio track: " + to_string(rep.verdict), pool_json("log Q_n / n at the largest n", last));
  }
  if (check == "concentration") {
    ConcentrationConfig cc;
    cc.dist = dist;
    cc.dim = checked_dim(c);
    cc.beta = c.get_real("beta");
    cc.lambda = c.get_real("lambda");
    cc.direction = checked_point(c, "direction", cc.dim);
    cc.Ns = c.get_ints("Ns");
    cc.replicas = static_cast<int>(c.get_int("replicas"));
    cc.seed = seed;
    cc.bootstrap = static_cast<int>(c.get_int("bootstrap"));
    const auto rep = concentration_check(cc);
    std::ostringstream os;
    os << "N,variance,ci_lo,ci_hi,ratio\n";
    for (std::size_t k = 0; k < rep.Ns.size(); ++k)
      os << csv_line({std::to_string(rep.Ns[k]), fd(rep.variance[k]), fd(rep.variance_ci[k].lo), fd(rep.variance_ci[k].hi),
                      fd(rep.ratio[k])});
    art.write(".csv", os.str());
    r["variance"] = reals_json(rep.variance);
    r["ratio"] = reals_json(rep.ratio);
    r["spread"] = num(rep.spread);
    r["c_hat"] = num(rep.c_hat);
    r["curvature"] = num(rep.curvature);
    r["curvature_ci"] = interval_json(rep.curvature_ci);
    r["stable"] = rep.stable;
    r["starved"] = rep.starved;
    r["converged"] = rep.converged;
    const bool inconclusive = rep.starved || !rep.converged;
    return art.finish(r, inconclusive ? kExitInconclusive : kExitOk,
                      "Var/N spread " + fd(rep.spread) + (rep.stable ? " (stable)" : " (unstable)"));
  }
  if (check == "sinai") {
    SinaiConfig sc;
    sc.dist = dist;
    sc.beta = c.get_real("beta");
    sc.h = c.get_real("h");
    sc.delta = c.get_real("delta");
    sc.nmax = static_cast<int>(c.get_int("nmax"));
    sc.environments = static_cast<int>(c.get_int("environments"));
    sc.seed = seed;
    const auto led = sinai_identity_check(sc);
    std::ostringstream os;
    os << "environment,n,t_annealed,t_quenched,s,s_direct,eps\n";
    json reps = json::array();
    for (std::size_t e = 0; e < led.replicas.size(); ++e) {
      const auto& rp = led.replicas[e];
      for (std::size_t n = 0; n < rp.s.size(); ++n)
        os << csv_line({std::to_string(e), std::to_string(n), fd(led.t_annealed[n]), fd(rp.t_quenched[n]), fd(rp.s[n]),
                        fd(rp.s_direct[n]), fd(rp.eps[n])});
      reps.push_back({{"environment_seed", std::to_string(rp.env_seed)}, {"identity_residual", num(rp.identity_residual)},
                      {"decomposition_residual", num(rp.decomposition_residual)}, {"s_gap", num(rp.s_gap)}});
    }
    art.write(".csv", os.str());
    r["lambda"] = num(led.lambda);
    r["kappa"] = num(led.kappa);
    r["environments"] = reps;
    r["max_identity_residual"] = num(led.max_identity_residual);
    r["max_decomposition_residual"] = num(led.max_decomposition_residual);
    r["max_s_gap"] = num(led.max_s_gap);
    return art.finish(r, kExitOk, "identity residual " + fd(led.max_identity_residual));
  }
  // lln
  QuenchedLlnConfig lc;
  lc.dist = dist;
  lc.beta = c.get_real("beta");
  lc.h = c.get_real("h");
  lc.delta = c.get_real("delta");
  lc.n = static_cast<int>(c.get_int("n"));
  lc.replicas = static_cast<int>(c.get_int("replicas"));
  lc.seed = seed;
  std::optional<DisorderReport> guard;
  if (c.get_int("guard_replicas") > 0) {
    RatioTrackConfig rc;
    rc.dist = dist;
    rc.beta = lc.beta;
    rc.h = Vec{lc.h, 0, 0};
    rc.ns = c.get_ints("guard_ns");
    rc.replicas = static_cast<int>(c.get_int("guard_replicas"));
    rc.seed = seed;
    guard = ratio_track(rc);
    r["guard_verdict"] = to_string(guard->verdict);
    r["guard_slope_ci"] = interval_json(guard->slope_ci);
  } else {
    r["guard_verdict"] = "skipped";
  }
  const auto rep = quenched_lln_check(lc, guard ? &*guard : nullptr);
  std::ostringstream os;
  os << "replica,deviation\n";
  for (std::size_t i = 0; i < rep.deviation.size(); ++i) os << csv_line({std::to_string(i), fd(rep.deviation[i])});
  art.write(".csv", os.str());
  r["v"] = vec_json(rep.v, 2);
  r["annealed_gap"] = num(rep.annealed_gap);
  r["max_deviation"] = num(rep.max_deviation);
  r["mean_deviation"] = num(rep.mean_deviation);
  r["mean_deviation_ci"] = interval_json(rep.mean_deviation_ci);
  r["within_band"] = rep.within_band;
  return art.finish(r, kExitOk, "max deviation " + fd(rep.max_deviation), pool_json("|E^w X_n / n - v|", rep.deviation));
}

// ---- fracmoment ----

RunResult run_fracmoment(const Config& c, const RunOptions& opt) {
  FractionalMomentConfig base;
  base.dist = c.get_dist("dist");
  base.beta = c.get_real("beta");
  base.lambda = c.get_real("lambda");
  base.Ns = c.get_ints("Ns");
  base.replicas = static_cast<int>(c.get_int("replicas"));
  base.annealed_factor = static_cast<int>(c.get_int("annealed_factor"));
  base.epsilon = c.get_real("epsilon");
  base.seed = c.get_uint("seed");
  base.bootstrap = static_cast<int>(c.get_int("bootstrap"));
  base.rel_tol = c.get_real("rel_tol");
  base.norm_e1 = c.get_real("norm_e1");
  const auto alphas = c.get_reals("alphas");
  if (alphas.empty()) throw std::invalid_argument("alphas must not be empty");

  Artifacts art(c, opt);
  std::ostringstream os;
  os << "alpha,N,moment,ci_lo,ci_hi,first_moment,tilt_delta,box_sites,tilt_cost,tilt_cost_bound,tilt_drop\n";
  json reps = json::array();
  Verdict overall = Verdict::Inconclusive;
  bool converged = true;
  for (double a : alphas) {
    auto fc = base;
    fc.alpha = a;
    const auto rep = fractional_moment_test(fc);
    converged = converged && rep.converged;
    if (rep.verdict == Verdict::StrongConsistent || (rep.verdict == Verdict::WeakConsistent && overall == Verdict::Inconclusive))
      overall = rep.verdict;
    json cis = json::array();
    for (std::size_t k = 0; k < rep.Ns.size(); ++k) {
      cis.push_back(interval_json(rep.moment_ci[k]));
      const bool tilt = k < rep.tilt_cost.size();
      os << csv_line({fd(a), std::to_string(rep.Ns[k]), fd(rep.moment[k]), fd(rep.moment_ci[k].lo), fd(rep.moment_ci[k].hi),
                      fd(rep.first_moment[k]), tilt ? fd(rep.tilt_delta[k]) : "", tilt ? std::to_string(rep.box_sites[k]) : "",
                      tilt ? fd(rep.tilt_cost[k]) : "", tilt ? fd(rep.tilt_cost_bound[k]) : "", tilt ? fd(rep.tilt_drop[k]) : ""});
    }
    reps.push_back({{"alpha", num(a)},
                    {"log_annealed", reals_json(rep.log_annealed)},
                    {"moment", reals_json(rep.moment)},
                    {"moment_ci", cis},
                    {"first_moment", reals_json(rep.first_moment)},
                    {"slope", num(rep.slope)},
                    {"slope_ci", interval_json(rep.slope_ci)},
                    {"verdict", to_string(rep.verdict)},
                    {"K", rep.K},
                    {"norm_e1", num(rep.norm_e1)},
                    {"tilt_cost", reals_json(rep.tilt_cost)},
                    {"tilt_cost_bound", reals_json(rep.tilt_cost_bound)},
                    {"tilt_drop", reals_json(rep.tilt_drop)},
                    {"drop_rate", num(rep.drop_rate)},
                    {"tilt_dominates", rep.tilt_dominates},
                    {"converged", rep.converged}});
  }
  art.write(".csv", os.str());
  json r;
  r["alphas"] = reps;
  r["verdict"] = to_string(overall);
  r["converged"] = converged;
  const bool inconclusive = overall == Verdict::Inconclusive || !converged;
  return art.finish(r, inconclusive ? kExitInconclusive : kExitOk, "fractional moments: " + to_string(overall));
}

// ---- inspect ----

RunResult run_inspect(const Config& c, RunOptions opt) {
  const std::string file = c.get_text("file");
  if (file.empty()) throw std::invalid_argument("inspect needs file=PATH");
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + file + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  opt.inputs.push_back(file);
  const std::string kind = c.get_text("kind");
  json r;
  r["file_fnv1a"] = hex64(fnv1a(buf.str()));
  std::string summary;
  if (kind == "path") {
    const int dim = checked_dim(c);
    std::istringstream is(buf.str());
    const auto path = LatticePath::read(is, dim);
    const WeightParams p{c.get_real("beta"), c.get_real("lambda"), checked_vec(c, "h", dim)};
    const auto lt = local_times(path);
    int max_visits = 0;
    for (const auto& [x, k] : lt) max_visits = std::max(max_visits, k);
    r["length"] = path.length();
    r["extension"] = point_json(path.extension(), dim);
    r["distinct_sites"] = lt.size();
    r["max_local_time"] = max_visits;
    r["log_annealed_weight"] = num(log_annealed_weight(path, c.get_dist("dist"), p));
    summary = "path of length " + std::to_string(path.length());
  } else if (kind == "env") {
    std::istringstream is(buf.str());
    const auto env = Environment::read(is);
    std::vector<double> trunc;
    for (double v : env.values()) trunc.push_back(std::min(v, 1.0));
    r["box"] = env.box().str();
    r["dist"] = env.dist().spec();
    r["seed"] = std::to_string(env.seed());
    r["tilted"] = env.tilt().has_value();
    r["mean_truncated"] = num(ordered_sum(trunc) / static_cast<double>(trunc.size()));
    summary = "environment on " + env.box().str();
  } else {
    std::istringstream is(buf.str());
    const auto tab = IrreducibleTable::read(is);
    json rows = json::array();
    for (int n = 0; n <= tab.nmax; ++n)
      rows.push_back({{"n", n}, {"entries", tab.log_t.rows[static_cast<std::size_t>(n)].size()},
                      {"sum_f", num(tab.f().row_sum(n))}, {"sum_t", num(tab.t().row_sum(n))}});
    r["kind"] = tab.kind;
    r["lambda"] = num(tab.lambda);
    r["cone"] = tab.cone;
    r["log_total_f"] = num(tab.log_total_f());
    r["rows"] = rows;
    summary = tab.kind + " table, nmax = " + std::to_string(tab.nmax);
  }
  Artifacts art(c, opt);
  return art.finish(r, kExitOk, summary);
}

}  // namespace

const std::vector<std::string>& configured_commands() {
  static const std::vector<std::string> names{"env",     "partition", "lyapunov",   "decompose", "renewal",
                                              "clt",     "disorder",  "fracmoment", "inspect"};
  return names;
}

std::string describe(const std::string& command) {
  static const std::map<std::string, std::string> d{
      {"env", "sample an environment on a box"},
      {"partition", "fixed-length partition functions by transfer matrix or enumeration"},
      {"lyapunov", "Lyapunov exponent along a lattice direction"},
      {"decompose", "cone points, irreducible pieces and skeleton of a path"},
      {"renewal", "irreducible tables, calibration and the limit of t_n"},
      {"clt", "law of large numbers, CLT and local limit of the renewal walk"},
      {"disorder", "ratio track, concentration, Sinai identity or quenched LLN"},
      {"fracmoment", "fractional moments of Q / A with the tilt diagnostic"},
      {"inspect", "summarize a path, environment or table file"},
      {"report", "merge artifacts, pool compatible runs, flag mismatches"}};
  return d.at(command);
}

Schema schema_for(const std::string& command, const RawConfig& raw) {
  using VT = ValueType;
  if (command == "env")
    return {kDist, kSeed, key("dim", VT::Int, "2", "lattice dimension"), key("radius", VT::Int, "10", "box [-r, r]^d"),
            key("tilt_delta", VT::Real, "0", "tilt strength; negative favours large V"),
            key("tilt_radius", VT::Int, "0", "tilted region [-r, r]^d")};
  if (command == "partition")
    return {choice("kind", {"quenched", "annealed"}, "ensemble"), kDist, kSeed,
            key("dim", VT::Int, "2", "lattice dimension"), key("beta", VT::Real, "1", "inverse temperature"),
            key("lambda", VT::Real, "0", "mass per step"), key("h", VT::RealList, "0,0", "pulling force"),
            key("n", VT::Int, "10", "path length")};
  if (command == "lyapunov")
    return {choice("kind", {"quenched", "annealed"}, "ensemble"), kDist, kSeed,
            key("dim", VT::Int, "2", "lattice dimension"), key("beta", VT::Real, "1", "inverse temperature"),
            key("lambda", VT::Real, "0.5", "mass per step"), key("direction", VT::IntList, "1,0", "lattice direction"),
            key("Ns", VT::IntList, "20,40,80", "distances"), key("replicas", VT::Int, "200", "environments"),
            key("bootstrap", VT::Int, "1000", "bootstrap resamples"), key("rel_tol", VT::Real, "1e-9", "conjugate-sum tolerance")};
  if (command == "decompose")
    return {choice("kind", {"annealed", "quenched"}, "ensemble the path is sampled from"), kDist, kSeed,
            key("path", VT::Text, "", "path file; sampled when empty"), key("dim", VT::Int, "2", "lattice dimension"),
            key("beta", VT::Real, "0", "inverse temperature"), key("h", VT::RealList, "1.2,0", "drift, also the cone axis"),
            key("n", VT::Int, "14", "sampled length"), key("delta", VT::Real, "0.25", "cone aperture"),
            key("K", VT::Real, "6", "skeleton scale in norm units")};
  if (command == "renewal") {
    auto s = law_keys();
    s.push_back(key("horizon", VT::Int, "48", "length of the t_n sequence"));
    return s;
  }
  if (command == "clt") {
    auto s = law_keys();
    s.push_back(key("ns", VT::IntList, "8,12,16", "lengths"));
    s.push_back(key("alpha_max", VT::Real, "1.5", "alpha grid half width"));
    s.push_back(key("alpha_points", VT::Int, "7", "alpha grid points per axis"));
    s.push_back(key("local_radius", VT::Int, "2", "local limit window (l1)"));
    return s;
  }
  if (command == "disorder") {
    const std::string check = selector(raw, "check", "ratio");
    Schema s{choice("check", {"ratio", "concentration", "sinai", "lln"}, "which diagnostic"), kDist, kSeed};
    if (check == "concentration") {
      s.insert(s.end(), {key("beta", VT::Real, "1", "inverse temperature"), key("dim", VT::Int, "2", "lattice dimension"),
                         key("lambda", VT::Real, "0.5", "mass per step"), key("direction", VT::IntList, "1,0", "lattice direction"),
                         key("Ns", VT::IntList, "20,40,80", "distances"), key("replicas", VT::Int, "200", "environments"),
                         key("bootstrap", VT::Int, "1000", "bootstrap resamples")});
    } else if (check == "sinai") {
      s.insert(s.end(), {key("beta", VT::Real, "1", "inverse temperature"), key("h", VT::Real, "2", "drift along e1"),
                         key("delta", VT::Real, "0.5", "cone aperture"), key("nmax", VT::Int, "10", "table length"),
                         key("environments", VT::Int, "5", "environments")});
    } else if (check == "lln") {
      s.insert(s.end(), {key("beta", VT::Real, "0.1", "inverse temperature"), key("h", VT::Real, "2", "drift along e1"),
                         key("delta", VT::Real, "0.5", "cone aperture"), key("n", VT::Int, "12", "length"),
                         key("replicas", VT::Int, "50", "environments"),
                         key("guard_replicas", VT::Int, "30", "ratio-track replicas for the weak-disorder guard; 0 skips"),
                         key("guard_ns", VT::IntList, "5,10,15,20", "ratio-track lengths for the guard")});
    } else {
      s.insert(s.end(), {key("beta", VT::Real, "1", "inverse temperature"), key("dim", VT::Int, "2", "lattice dimension"),
                         key("h", VT::RealList, "1,0", "pulling force"), key("ns", VT::IntList, "10,20,30,40,50,60", "lengths"),
                         key("replicas", VT::Int, "100", "track environments"),
                         key("annealed_factor", VT::Int, "10", "annealed environments per track environment"),
                         key("bootstrap", VT::Int, "1000", "bootstrap resamples"),
                         key("weak_width", VT::Real, "0.01", "CI width for a weak verdict")});
    }
    return s;
  }
  if (command == "fracmoment")
    return {kDist, kSeed, key("beta", VT::Real, "1", "inverse temperature"), key("lambda", VT::Real, "0.5", "mass per step"),
            key("alphas", VT::RealList, "0.5", "fractional powers"), key("Ns", VT::IntList, "8,12,16", "distances"),
            key("replicas", VT::Int, "500", "environments"),
            key("annealed_factor", VT::Int, "10", "annealed environments per replica"),
            key("epsilon", VT::Real, "0.2", "tilt box exponent"), key("bootstrap", VT::Int, "1000", "bootstrap resamples"),
            key("rel_tol", VT::Real, "1e-9", "conjugate-sum tolerance"),
            key("norm_e1", VT::Real, "0", "norm of e1 for the tilt box; estimated when 0")};
  if (command == "inspect")
    return {choice("kind", {"path", "env", "table"}, "file type"), key("file", VT::Text, "", "file to inspect"), kDist,
            key("dim", VT::Int, "2", "path dimension"), key("beta", VT::Real, "0", "weight parameters for paths"),
            key("lambda", VT::Real, "0", "mass per step"), key("h", VT::RealList, "0,0", "pulling force")};
  throw std::invalid_argument("unknown subcommand '" + command + "'");
}

RunResult run_command(const Config& cfg, const RunOptions& opt) {
  const auto& c = cfg.command();
  if (c == "env") return run_env(cfg, opt);
  if (c == "partition") return run_partition(cfg, opt);
  if (c == "lyapunov") return run_lyapunov(cfg, opt);
  if (c == "decompose") return run_decompose(cfg, opt);
  if (c == "renewal") return run_renewal(cfg, opt);
  if (c == "clt") return run_clt(cfg, opt);
  if (c == "disorder") return run_disorder(cfg, opt);
  if (c == "fracmoment") return run_fracmoment(cfg, opt);
  if (c == "inspect") return run_inspect(cfg, opt);
  throw std::invalid_argument("unknown subcommand '" + c + "'");
}

// ---- report ----

namespace {

struct Loaded {
  std::string file;
  json doc;
  Config cfg;
};

struct MeanCi {
  double mean = 0.0;
  Interval ci;
  std::size_t n = 0;
};

MeanCi mean_ci(const std::vector<double>& v) {
  Welford w;
  for (double x : v) w.add(x);
  const double se = w.stderr_of_mean();
  return {w.mean(), {w.mean() - 1.96 * se, w.mean() + 1.96 * se}, w.count()};
}

std::vector<double> pool_values(const json& doc) {
  std::vector<double> v;
  for (const auto& x : doc["pool"]["values"]) v.push_back(x.is_number() ? x.get<double>() : parse_double(x.get<std::string>()));
  return v;
}

std::string without_seed(const Config& c) {
  auto vals = c.values();
  vals.erase("seed");
  return Config::from_canonical(c.command(), vals).canonical_text();
}

}  // namespace

RunResult run_report(const std::vector<std::string>& artifacts, const RunOptions& opt) {
  if (artifacts.empty()) throw ConfigError({"report needs at least one artifact"});
  std::vector<std::string> problems;
  std::vector<Loaded> in;
  for (const auto& f : artifacts) {
    std::ifstream is(f);
    if (!is) {
      problems.push_back(f + ": cannot open");
      continue;
    }
    json doc;
    try {
      doc = json::parse(is);
    } catch (const std::exception& e) {
      problems.push_back(f + ": not JSON (" + e.what() + ")");
      continue;
    }
    if (!doc.contains("command") || !doc.contains("config") || !doc.contains("config_hash")) {
      problems.push_back(f + ": not a polylab artifact (needs command, config, config_hash)");
      continue;
    }
    auto cfg = Config::from_canonical(doc["command"].get<std::string>(),
                                      doc["config"].get<std::map<std::string, std::string>>());
    if (cfg.hash() != doc["config_hash"].get<std::string>())
      problems.push_back(f + ": hash mismatch, claimed " + doc["config_hash"].get<std::string>() + ", embedded config hashes to " +
                         cfg.hash());
    in.push_back({f, std::move(doc), std::move(cfg)});
  }
  if (!problems.empty()) throw ConfigError(problems);

  // Runs that agree on everything but the seed form a group.
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto k = without_seed(in[i].cfg);
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(i);
  }

  json rep;
  json inputs = json::array();
  std::ostringstream txt;
  txt << "artifact                                  command     hash              status        pooled quantity\n";
  for (const auto& l : in) {
    json e{{"file", fs::path(l.file).filename().string()}, {"command", l.cfg.command()}, {"config_hash", l.cfg.hash()},
           {"status", l.doc.value("status", "ok")}};
    std::string pooled = "-";
    if (l.doc.contains("pool")) {
      const auto m = mean_ci(pool_values(l.doc));
      e["pool"] = {{"quantity", l.doc["pool"]["quantity"]}, {"mean", num(m.mean)}, {"ci95", interval_json(m.ci)}, {"n", m.n}};
      pooled = fd(m.mean) + " [" + fd(m.ci.lo) + ", " + fd(m.ci.hi) + "] n=" + std::to_string(m.n);
    }
    inputs.push_back(e);
    char line[256];
    std::snprintf(line, sizeof line, "%-41s %-11s %-17s %-13s ", fs::path(l.file).filename().string().c_str(),
                  l.cfg.command().c_str(), l.cfg.hash().c_str(), e["status"].get<std::string>().c_str());
    txt << line << pooled << "\n";
  }
  rep["inputs"] = inputs;

  json pooled = json::array();
  for (const auto& k : order) {
    const auto& members = groups[k];
    if (members.size() < 2) continue;
    std::vector<double> all;
    json files = json::array();
    bool poolable = true;
    for (std::size_t i : members) {
      files.push_back(fs::path(in[i].file).filename().string());
      if (!in[i].doc.contains("pool")) poolable = false;
      else for (double v : pool_values(in[i].doc)) all.push_back(v);
    }
    json g{{"command", in[members.front()].cfg.command()}, {"members", files}};
    std::set<std::string> seeds;
    for (std::size_t i : members) seeds.insert(in[i].cfg.values().count("seed") ? in[i].cfg.values().at("seed") : "");
    if (seeds.size() < members.size()) {
      g["pooled"] = false;
      g["reason"] = "repeated seed: the runs are not independent";
    } else if (!poolable) {
      g["pooled"] = false;
      g["reason"] = "no per-replica values to pool";
    } else {
      const auto m = mean_ci(all);
      g["pooled"] = true;
      g["quantity"] = in[members.front()].doc["pool"]["quantity"];
      g["mean"] = num(m.mean);
      g["ci95"] = interval_json(m.ci);
      g["n"] = m.n;
      txt << "pooled " << g["command"].get<std::string>() << " x" << members.size() << ": " << fd(m.mean) << " [" << fd(m.ci.lo)
          << ", " << fd(m.ci.hi) << "] n=" << m.n << "\n";
    }
    pooled.push_back(g);
  }
  rep["groups"] = pooled;

  // Same command, different parameters: listed separately with the differing keys.
  json mismatches = json::array();
  for (std::size_t a = 0; a < order.size(); ++a)
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      const auto& x = in[groups[order[a]].front()].cfg;
      const auto& y = in[groups[order[b]].front()].cfg;
      if (x.command() != y.command()) continue;
      json keys = json::array();
      for (const auto& [k, v] : x.values())
        if (k != "seed" && (!y.values().count(k) || y.values().at(k) != v)) keys.push_back(k);
      for (const auto& [k, v] : y.values())
        if (k != "seed" && !x.values().count(k)) keys.push_back(k);
      const bool beta = std::find(keys.begin(), keys.end(), "beta") != keys.end();
      mismatches.push_back({{"command", x.command()},
                            {"left", x.hash()},
                            {"right", y.hash()},
                            {"differing_keys", keys},
                            {"note", beta ? "beta differs: not pooled" : "parameters differ: not pooled"}});
      txt << "not pooled (" << x.command() << " " << x.hash() << " vs " << y.hash() << "): "
          << (beta ? "beta differs" : "parameters differ") << "\n";
    }
  rep["mismatches"] = mismatches;

  std::string joined;
  for (const auto& l : in) joined += l.cfg.hash();
  const std::string stem = (fs::path(opt.out_dir) / ("report-" + hex64(fnv1a(joined)))).string();
  fs::create_directories(opt.out_dir);
  for (const auto& f : artifacts)
    for (const char* suf : {".json", ".txt"})
      if (fs::exists(stem + suf) && fs::equivalent(f, stem + suf))
        throw std::runtime_error("refusing to overwrite input file '" + f + "'");
  std::ofstream(stem + ".json", std::ios::binary) << rep.dump(2) << "\n";
  std::ofstream(stem + ".txt", std::ios::binary) << txt.str();
  return {kExitOk, {stem + ".json", stem + ".txt"}, txt.str()};
}

}  // namespace polylab::cli
