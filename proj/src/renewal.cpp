#include "polylab/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "polylab/ensembles.hpp"
#include "polylab/enumerate.hpp"
#include "polylab/logsum.hpp"
#include "polylab/roots.hpp"
#include "polylab/stats.hpp"

namespace polylab {

double SiteTable::at(const Point& x, int n) const {
  if (n < 0 || n > nmax()) return 0.0;
  const auto& r = rows[static_cast<std::size_t>(n)];
  const auto it = r.find(x);
  return it == r.end() ? 0.0 : it->second;
}

double SiteTable::row_sum(int n) const {
  std::vector<double> v;
  for (const auto& [x, w] : rows[static_cast<std::size_t>(n)]) v.push_back(w);
  return ordered_sum(v);
}

namespace {

SiteTable exp_table(const SiteTable& lg) {
  SiteTable out{lg.dim, std::vector<std::map<Point, double>>(lg.rows.size())};
  for (std::size_t n = 0; n < lg.rows.size(); ++n)
    for (const auto& [x, v] : lg.rows[n]) out.rows[n][x] = std::exp(v);
  return out;
}

double log_row_mass(const std::map<Point, double>& row) {
  LogSum s;
  for (const auto& [x, v] : row) s.add(v);
  return s.value();
}

std::string vec_text(const Vec& h, int dim) {
  std::string s;
  for (int i = 0; i < dim; ++i) s += (i ? "," : "") + format_double(h[static_cast<std::size_t>(i)]);
  return s;
}

struct TableAcc {
  std::vector<std::map<Point, LogSum>> f, t;
};

IrreducibleTable enumerate_tables(const PathEnumerator::Config& cfg, const ConeSpec& cone, bool quenched) {
  if (cone.dim() != cfg.dim) throw std::invalid_argument("cone dimension mismatch");
  const int nmax = cfg.max_len;
  const PathEnumerator en(cfg);
  const auto rows = static_cast<std::size_t>(nmax) + 1;
  const auto accs = en.run<TableAcc>([&] { return TableAcc{std::vector<std::map<Point, LogSum>>(rows),
                                                           std::vector<std::map<Point, LogSum>>(rows)}; },
                                     [&](TableAcc& acc, const WalkView& v) {
                                       if (v.depth == 0) return true;
                                       const Point& end = v.end();
                                       if (!cone.forward(end)) return false;
                                       for (int j = 0; j < v.depth; ++j)
                                         if (!cone.backward(v.sites[j] - end)) return true;
                                       const double w = quenched ? v.log_q : v.log_a;
                                       const auto d = static_cast<std::size_t>(v.depth);
                                       acc.t[d][end].add(w);
                                       const auto c = cone_points(std::span<const Point>(v.sites, d + 1), cone);
                                       if (c.size() == 2) acc.f[d][end].add(w);
                                       return true;
                                     });
  IrreducibleTable tab;
  tab.kind = quenched ? "quenched" : "annealed";
  tab.dim = cfg.dim;
  tab.beta = cfg.params.beta;
  tab.lambda = cfg.params.lambda;
  tab.h = cfg.params.h;
  tab.cone = cone.describe();
  tab.nmax = nmax;
  tab.log_f = SiteTable{cfg.dim, std::vector<std::map<Point, double>>(rows)};
  tab.log_t = tab.log_f;
  for (std::size_t n = 1; n < rows; ++n) {
    std::map<Point, LogSum> f, t;
    for (const auto& a : accs) {
      for (const auto& [x, s] : a.f[n]) f[x].merge(s);
      for (const auto& [x, s] : a.t[n]) t[x].merge(s);
    }
    for (const auto& [x, s] : f)
      if (!s.empty()) tab.log_f.rows[n][x] = s.value();
    for (const auto& [x, s] : t)
      if (!s.empty()) tab.log_t.rows[n][x] = s.value();
  }
  return tab;
}

}  // namespace

IrreducibleTable IrreducibleTable::with_lambda(double l) const {
  IrreducibleTable out = *this;
  out.lambda = l;
  const double d = l - lambda;
  for (auto* tab : {&out.log_f, &out.log_t})
    for (std::size_t n = 0; n < tab->rows.size(); ++n)
      for (auto& [x, v] : tab->rows[n]) v -= d * static_cast<double>(n);
  return out;
}

SiteTable IrreducibleTable::f() const { return exp_table(log_f); }
SiteTable IrreducibleTable::t() const { return exp_table(log_t); }

double IrreducibleTable::log_total_f() const {
  LogSum s;
  for (const auto& row : log_f.rows)
    for (const auto& [x, v] : row) s.add(v);
  return s.value();
}

void IrreducibleTable::write(std::ostream& os) const {
  os << "# kind=" << kind << "\n# dim=" << dim << "\n# beta=" << format_double(beta)
     << "\n# lambda=" << format_double(lambda) << "\n# h=" << vec_text(h, dim) << "\n# cone=" << cone
     << "\n# nmax=" << nmax << "\n";
  for (int i = 0; i < dim; ++i) os << "x" << i + 1 << " ";
  os << "n log_f log_t\n";
  for (int n = 0; n <= nmax; ++n)
    for (const auto& [x, lt] : log_t.rows[static_cast<std::size_t>(n)]) {
      const auto& fr = log_f.rows[static_cast<std::size_t>(n)];
      const auto it = fr.find(x);
      for (int i = 0; i < dim; ++i) os << x[i] << " ";
      os << n << " " << format_double(it == fr.end() ? kNegInf : it->second) << " " << format_double(lt) << "\n";
    }
}

IrreducibleTable IrreducibleTable::read(std::istream& is) {
  IrreducibleTable tab;
  std::string line;
  std::map<std::string, std::string> head;
  while (std::getline(is, line) && line.starts_with("# ")) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad table header line: " + line);
    head[line.substr(2, eq - 2)] = line.substr(eq + 1);
  }
  for (const char* k : {"kind", "dim", "beta", "lambda", "h", "cone", "nmax"})
    if (!head.contains(k)) throw std::invalid_argument(std::string("table header lacks ") + k);
  tab.kind = head["kind"];
  tab.dim = std::stoi(head["dim"]);
  tab.beta = parse_double(head["beta"]);
  tab.lambda = parse_double(head["lambda"]);
  tab.cone = head["cone"];
  tab.nmax = std::stoi(head["nmax"]);
  {
    std::istringstream hs(head["h"]);
    std::string tok;
    for (std::size_t i = 0; std::getline(hs, tok, ','); ++i) tab.h[i] = parse_double(tok);
  }
  const auto rows = static_cast<std::size_t>(tab.nmax) + 1;
  tab.log_f = SiteTable{tab.dim, std::vector<std::map<Point, double>>(rows)};
  tab.log_t = tab.log_f;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Point x;
    int n = 0;
    std::string f, t;
    for (int i = 0; i < tab.dim; ++i) ls >> x[i];
    ls >> n >> f >> t;
    if (!ls || n < 0 || n > tab.nmax) throw std::invalid_argument("bad table line: " + line);
    const double lf = parse_double(f);
    if (lf != kNegInf) tab.log_f.rows[static_cast<std::size_t>(n)][x] = lf;
    tab.log_t.rows[static_cast<std::size_t>(n)][x] = parse_double(t);
  }
  return tab;
}

IrreducibleTable build_irreducible_tables(const PotentialDistribution& dist, int dim, const WeightParams& p,
                                          const ConeSpec& cone, int nmax, bool parallel) {
  if (nmax < 1 || nmax > enumeration_cap(dim)) throw std::invalid_argument("table length outside the enumeration cap");
  return enumerate_tables({dim, nmax, p, nullptr, &dist, parallel}, cone, false);
}

namespace {

Environment shifted_environment(const Environment& env, const Point& by, int radius) {
  const int dim = env.box().dim();
  const Box box = Box::centered(dim, radius);
  std::vector<double> values(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) values[i] = env.at(box.point(i) + by);
  return Environment::from_values(env.dist(), box, env.seed(), std::move(values));
}

}  // namespace

IrreducibleTable build_quenched_tables(const Environment& env, const WeightParams& p, const ConeSpec& cone, int nmax,
                                       const Point& start, bool parallel) {
  const int dim = env.box().dim();
  if (nmax < 1 || nmax > enumeration_cap(dim)) throw std::invalid_argument("table length outside the enumeration cap");
  const Environment local = shifted_environment(env, start, nmax);
  return enumerate_tables({dim, nmax, p, &local, nullptr, parallel}, cone, true);
}

Calibration calibrate_lambda(const IrreducibleTable& table) {
  std::vector<double> mass(static_cast<std::size_t>(table.nmax) + 1, kNegInf);
  for (int n = 1; n <= table.nmax; ++n) mass[static_cast<std::size_t>(n)] = log_row_mass(table.log_f.rows[static_cast<std::size_t>(n)]);
  const auto g = [&](double l) {
    LogSum s;
    for (int n = 1; n <= table.nmax; ++n) s.add(mass[static_cast<std::size_t>(n)] - (l - table.lambda) * n);
    return s.value();
  };
  if (g(table.lambda) == kNegInf) throw std::invalid_argument("empty irreducible table");
  double lo = table.lambda, hi = table.lambda, step = 1.0;
  int guard = 0;
  while (g(lo) < 0.0 && guard++ < 200) lo -= (step *= 2);
  step = 1.0;
  while (g(hi) > 0.0 && guard++ < 400) hi += (step *= 2);
  if (g(lo) < 0.0 || g(hi) > 0.0) throw std::domain_error("calibration bracket failed");
  Calibration c;
  c.iterations = guard;
  c.lambda = bracketed_root(g, lo, hi);
  c.table = table.with_lambda(c.lambda);
  // Extrapolate the row masses geometrically beyond nmax.
  std::vector<double> xs, ys;
  for (int n = std::max(1, table.nmax / 2); n <= table.nmax; ++n) {
    const double m = mass[static_cast<std::size_t>(n)] - (c.lambda - table.lambda) * n;
    if (m == kNegInf) continue;
    xs.push_back(n);
    ys.push_back(m);
  }
  c.log_deficit_estimate = kInf;
  if (xs.size() >= 2) {
    const auto fit = fit_line(xs, ys);
    if (fit.slope < 0) c.log_deficit_estimate = ys.back() + fit.slope - std::log1p(-std::exp(fit.slope));
  }
  return c;
}

SiteTable renewal_convolve(const SiteTable& f, int nmax) {
  SiteTable t{f.dim, std::vector<std::map<Point, double>>(static_cast<std::size_t>(nmax) + 1)};
  t.rows[0][Point{}] = 1.0;
  for (int n = 1; n <= nmax; ++n) {
    auto& row = t.rows[static_cast<std::size_t>(n)];
    for (int m = 1; m <= std::min(n, f.nmax()); ++m)
      for (const auto& [y, fy] : f.rows[static_cast<std::size_t>(m)])
        for (const auto& [z, tz] : t.rows[static_cast<std::size_t>(n - m)]) row[z + y] += tz * fy;
  }
  return t;
}

double renewal_residual(const SiteTable& f, const SiteTable& t) {
  const auto conv = renewal_convolve(f, t.nmax());
  double scale = 0.0, worst = 0.0;
  for (int n = 1; n <= t.nmax(); ++n) {
    for (const auto& [x, v] : t.rows[static_cast<std::size_t>(n)]) scale = std::max(scale, std::abs(v));
    std::map<Point, double> keys = conv.rows[static_cast<std::size_t>(n)];
    for (const auto& [x, v] : t.rows[static_cast<std::size_t>(n)]) keys.try_emplace(x, 0.0);
    for (const auto& [x, unused] : keys) worst = std::max(worst, std::abs(conv.at(x, n) - t.at(x, n)));
  }
  return scale > 0 ? worst / scale : worst;
}

double StepLaw::total() const {
  std::vector<double> v;
  for (const auto& a : atoms) v.push_back(a.p);
  return ordered_sum(v);
}

double StepLaw::mean_length() const {
  std::vector<double> v;
  for (const auto& a : atoms) v.push_back(a.p * a.m);
  return ordered_sum(v);
}

SiteTable StepLaw::as_table() const {
  int nmax = 0;
  for (const auto& a : atoms) nmax = std::max(nmax, a.m);
  SiteTable t{dim, std::vector<std::map<Point, double>>(static_cast<std::size_t>(nmax) + 1)};
  for (const auto& a : atoms) t.rows[static_cast<std::size_t>(a.m)][a.y] += a.p;
  return t;
}

StepLaw step_law(const IrreducibleTable& normalized, double tol) {
  StepLaw law;
  law.dim = normalized.dim;
  for (int n = 1; n <= normalized.nmax; ++n)
    for (const auto& [x, v] : normalized.log_f.rows[static_cast<std::size_t>(n)]) law.atoms.push_back({x, n, std::exp(v)});
  if (std::abs(law.total() - 1.0) > tol) throw std::invalid_argument("irreducible table is not normalized");
  return law;
}

StepLaw geometric_fixture(double rho, double q, int nmax) {
  if (!(rho > 0 && rho < 1 && q >= 0 && q <= 1)) throw std::invalid_argument("geometric fixture needs rho in (0,1), q in [0,1]");
  StepLaw law;
  law.dim = 1;
  for (int n = 1; n <= nmax; ++n) {
    double binom = 1.0;  // C(n, x)
    for (int x = 0; x <= n; ++x) {
      const double p = (1 - rho) * std::pow(rho, n - 1) * binom * std::pow(q, x) * std::pow(1 - q, n - x);
      if (p > 0) law.atoms.push_back({Point{{x, 0, 0}}, n, p});
      binom = binom * (n - x) / (x + 1);
    }
  }
  return law;
}

StepLaw degenerate_fixture() {
  StepLaw law;
  law.dim = 1;
  law.atoms.push_back({Point{{1, 0, 0}}, 1, 1.0});
  return law;
}

namespace {

// Weights p e^{z.y - mu m} with their log-sum.
struct Tilted {
  std::vector<double> w;
  double log_sum = 0.0;
};

Tilted tilt(const StepLaw& law, const Vec& z, double mu) {
  Tilted t;
  t.w.resize(law.atoms.size());
  double mx = kNegInf;
  for (std::size_t i = 0; i < law.atoms.size(); ++i) {
    const auto& a = law.atoms[i];
    t.w[i] = std::log(a.p) + dot(z, to_vec(a.y)) - mu * a.m;
    mx = std::max(mx, t.w[i]);
  }
  std::vector<double> e(t.w.size());
  for (std::size_t i = 0; i < t.w.size(); ++i) e[i] = std::exp(t.w[i] - mx);
  const double s = ordered_sum(e);
  for (std::size_t i = 0; i < t.w.size(); ++i) t.w[i] = e[i] / s;
  t.log_sum = mx + std::log(s);
  return t;
}

struct Moments {
  double m = 0.0;
  Vec y{};
};

Moments first_moments(const StepLaw& law, const Tilted& t) {
  Moments mo;
  std::vector<double> ms, ys[kMaxDim];
  for (std::size_t i = 0; i < law.atoms.size(); ++i) {
    ms.push_back(t.w[i] * law.atoms[i].m);
    for (int k = 0; k < law.dim; ++k) ys[k].push_back(t.w[i] * law.atoms[i].y[k]);
  }
  mo.m = ordered_sum(ms);
  for (int k = 0; k < law.dim; ++k) mo.y[static_cast<std::size_t>(k)] = ordered_sum(ys[k]);
  return mo;
}

}  // namespace

double solve_mu(const StepLaw& law, const Vec& z, double tol) {
  if (law.atoms.empty()) throw std::invalid_argument("empty step law");
  // G(mu) = log sum p e^{z.y - mu m}: convex, strictly decreasing.
  const auto G = [&](double mu) { return tilt(law, z, mu).log_sum; };
  double lo = -1.0, hi = 1.0;
  for (int k = 0; k < 200 && G(lo) < 0; ++k) lo *= 2;
  for (int k = 0; k < 200 && G(hi) > 0; ++k) hi *= 2;
  if (G(lo) < 0 || G(hi) > 0) throw std::domain_error("mu bracket failed");
  double mu = 0.0;
  for (int it = 0; it < 200; ++it) {
    const auto t = tilt(law, z, mu);
    const double g = t.log_sum;
    if (std::abs(g) <= tol) return mu;
    if (g > 0) lo = mu;
    else hi = mu;
    const double slope = -first_moments(law, t).m;
    double next = mu - g / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - mu) <= tol * std::max(1.0, std::abs(mu))) return next;
    mu = next;
  }
  throw std::runtime_error("mu did not converge");
}

Vec mu_gradient(const StepLaw& law, const Vec& z) {
  const auto t = tilt(law, z, solve_mu(law, z));
  const auto mo = first_moments(law, t);
  Vec g{};
  for (int k = 0; k < law.dim; ++k) g[static_cast<std::size_t>(k)] = mo.y[static_cast<std::size_t>(k)] / mo.m;
  return g;
}

std::array<Vec, kMaxDim> mu_hessian(const StepLaw& law, const Vec& z) {
  const auto t = tilt(law, z, solve_mu(law, z));
  const auto mo = first_moments(law, t);
  Vec v{};
  for (int k = 0; k < law.dim; ++k) v[static_cast<std::size_t>(k)] = mo.y[static_cast<std::size_t>(k)] / mo.m;
  std::array<Vec, kMaxDim> h{};
  for (int i = 0; i < law.dim; ++i)
    for (int j = 0; j < law.dim; ++j) {
      std::vector<double> terms;
      for (std::size_t a = 0; a < law.atoms.size(); ++a) {
        const auto& at = law.atoms[a];
        terms.push_back(t.w[a] * (at.y[i] - at.m * v[static_cast<std::size_t>(i)]) *
                        (at.y[j] - at.m * v[static_cast<std::size_t>(j)]));
      }
      h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = ordered_sum(terms) / mo.m;
    }
  return h;
}

Vec mu_gradient_fd(const StepLaw& law, double s) {
  Vec g{};
  for (int k = 0; k < law.dim; ++k) {
    Vec a{}, b{};
    a[static_cast<std::size_t>(k)] = s;
    b[static_cast<std::size_t>(k)] = -s;
    g[static_cast<std::size_t>(k)] = (solve_mu(law, a) - solve_mu(law, b)) / (2 * s);
  }
  return g;
}

std::array<Vec, kMaxDim> mu_hessian_fd(const StepLaw& law, double s) {
  std::array<Vec, kMaxDim> h{};
  const auto at = [&](int i, double si, int j, double sj) {
    Vec z{};
    z[static_cast<std::size_t>(i)] += si;
    z[static_cast<std::size_t>(j)] += sj;
    return solve_mu(law, z);
  };
  for (int i = 0; i < law.dim; ++i)
    for (int j = 0; j < law.dim; ++j)
      h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          (at(i, s, j, s) - at(i, s, j, -s) - at(i, -s, j, s) + at(i, -s, j, -s)) / (4 * s * s);
  return h;
}

double min_eigenvalue(const std::array<Vec, kMaxDim>& m, int dim) {
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double step_rate(const StepLaw& law, const Vec& u) {
  const int d = law.dim;
  Vec z{};
  for (int it = 0; it < 100; ++it) {
    const Vec g = mu_gradient(law, z);
    const auto h = mu_hessian(law, z);
    Eigen::MatrixXd H(d, d);
    Eigen::VectorXd r(d);
    for (int i = 0; i < d; ++i) {
      r(i) = u[static_cast<std::size_t>(i)] - g[static_cast<std::size_t>(i)];
      for (int j = 0; j < d; ++j) H(i, j) = h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    if (r.norm() < 1e-13) break;
    const Eigen::VectorXd dz = H.ldlt().solve(r);
    for (int i = 0; i < d; ++i) z[static_cast<std::size_t>(i)] += dz(i);
  }
  return dot(z, u) - solve_mu(law, z);
}

RenewalAsymptotics renewal_limit(const StepLaw& law, int horizon, double tol) {
  if (std::abs(law.total() - 1.0) > tol) throw std::invalid_argument("step law is not normalized");
  RenewalAsymptotics r;
  r.kappa = law.mean_length();
  r.limit = 1.0 / r.kappa;
  int mmax = 0;
  for (const auto& a : law.atoms) mmax = std::max(mmax, a.m);
  std::vector<double> fm(static_cast<std::size_t>(mmax) + 1, 0.0);
  {
    std::vector<std::vector<double>> parts(fm.size());
    for (const auto& a : law.atoms) parts[static_cast<std::size_t>(a.m)].push_back(a.p);
    for (std::size_t m = 0; m < fm.size(); ++m) fm[m] = ordered_sum(parts[m]);
  }
  r.t_n.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  r.t_n[0] = 1.0;
  for (int n = 1; n <= horizon; ++n) {
    double s = 0.0;
    for (int m = 1; m <= std::min(n, mmax); ++m) s += r.t_n[static_cast<std::size_t>(n - m)] * fm[static_cast<std::size_t>(m)];
    r.t_n[static_cast<std::size_t>(n)] = s;
  }
  std::vector<double> env(r.t_n.size(), 0.0);
  for (int n = horizon; n >= 1; --n)
    env[static_cast<std::size_t>(n)] = std::max(n < horizon ? env[static_cast<std::size_t>(n) + 1] : 0.0,
                                                std::abs(r.t_n[static_cast<std::size_t>(n)] - r.limit));
  const double floor = 1e-12;
  std::vector<double> xs, ys, raw;
  for (int n = std::max(1, horizon / 2); n <= horizon; ++n) {
    const double gap = std::abs(r.t_n[static_cast<std::size_t>(n)] - r.limit);
    if (env[static_cast<std::size_t>(n)] <= floor || gap <= 0.0) continue;
    xs.push_back(n);
    ys.push_back(std::log(env[static_cast<std::size_t>(n)]));
    raw.push_back(std::log(gap));
  }
  r.fit_points = static_cast<int>(xs.size());
  if (xs.size() >= 3) {
    const auto fit = fit_line(xs, ys);
    r.tail_rate = -fit.slope;
    r.tail_r2 = fit.r2;
    r.raw_r2 = fit_line(xs, raw).r2;
  }
  r.drift = mu_gradient(law);
  r.cov = mu_hessian(law);
  return r;
}

std::vector<Vec> alpha_grid(int dim, double a, int k) {
  std::vector<double> axis;
  for (int i = 0; i < k; ++i) axis.push_back(k == 1 ? 0.0 : -a + 2 * a * i / (k - 1));
  std::vector<Vec> out;
  if (dim == 1) {
    for (double x : axis) out.push_back(Vec{x, 0, 0});
  } else if (dim == 2) {
    for (double x : axis)
      for (double y : axis) out.push_back(Vec{x, y, 0});
  } else {
    for (double x : axis)
      for (double y : axis)
        for (double z : axis) out.push_back(Vec{x, y, z});
  }
  return out;
}

std::vector<CltRow> lln_clt_check(const StepLaw& law, std::span<const int> ns, std::span<const Vec> alphas) {
  const int nmax = *std::max_element(ns.begin(), ns.end());
  const auto t = renewal_convolve(law.as_table(), nmax);
  const Vec v = mu_gradient(law);
  const auto c = mu_hessian(law);
  if (!(min_eigenvalue(c, law.dim) > 0)) throw std::domain_error("covariance of the step law is degenerate");
  std::vector<CltRow> out;
  for (int n : ns) {
    CltRow row;
    row.n = n;
    const auto& tr = t.rows[static_cast<std::size_t>(n)];
    row.t_n = t.row_sum(n);
    for (int k = 0; k < law.dim; ++k) {
      std::vector<double> terms;
      for (const auto& [x, w] : tr) terms.push_back(w * x[k]);
      row.mean[static_cast<std::size_t>(k)] = ordered_sum(terms) / row.t_n;
    }
    double gap2 = 0.0, nv2 = 0.0;
    for (int k = 0; k < law.dim; ++k) {
      const double g = row.mean[static_cast<std::size_t>(k)] - n * v[static_cast<std::size_t>(k)];
      row.lln_gap = std::max(row.lln_gap, std::abs(g) / n);
      gap2 += g * g;
      nv2 += n * v[static_cast<std::size_t>(k)] * n * v[static_cast<std::size_t>(k)];
    }
    row.rel_mean_gap = nv2 > 0 ? std::sqrt(gap2 / nv2) : std::sqrt(gap2);
    const double sq = std::sqrt(static_cast<double>(n));
    for (const auto& a : alphas) {
      std::complex<double> s = 0.0;
      for (const auto& [x, w] : tr) {
        double phase = 0.0;
        for (int k = 0; k < law.dim; ++k)
          phase += a[static_cast<std::size_t>(k)] * (x[k] - n * v[static_cast<std::size_t>(k)]) / sq;
        s += w * std::polar(1.0, phase);
      }
      double q = 0.0;
      for (int i = 0; i < law.dim; ++i)
        for (int j = 0; j < law.dim; ++j)
          q += a[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(j)];
      row.clt_gap = std::max(row.clt_gap, std::abs(s / row.t_n - std::exp(-0.5 * q)));
    }
    out.push_back(row);
  }
  return out;
}

LocalLimitReport local_limit_check(const StepLaw& law, int n, int radius) {
  const auto t = renewal_convolve(law.as_table(), n);
  const Vec v = mu_gradient(law);
  const auto& row = t.rows[static_cast<std::size_t>(n)];
  const double tn = t.row_sum(n);
  // Centre: the supported site closest to n v.
  Point centre{};
  double best = kInf;
  for (const auto& [x, w] : row) {
    double d2 = 0.0;
    for (int k = 0; k < law.dim; ++k) d2 += std::pow(x[k] - n * v[static_cast<std::size_t>(k)], 2);
    if (w > 0 && d2 < best) {
      best = d2;
      centre = x;
    }
  }
  LocalLimitReport rep;
  rep.n = n;
  double gmin = kInf, gmax = 0.0;
  for (const auto& [x, w] : row) {
    if (!(w > 0) || l1(x - centre) > radius) continue;
    Vec u{};
    for (int k = 0; k < law.dim; ++k) u[static_cast<std::size_t>(k)] = static_cast<double>(x[k]) / n;
    const double G = w / tn * std::pow(n, 0.5 * law.dim) * std::exp(n * step_rate(law, u));
    rep.rows.push_back({x, G});
    gmin = std::min(gmin, G);
    gmax = std::max(gmax, G);
    if (x == centre) rep.G_at_mean = G;
  }
  if (rep.rows.empty()) throw std::domain_error("neighbourhood outside the table support");
  rep.flatness = gmax / gmin;
  return rep;
}

QuenchedInversion quenched_irreducible_inversion(const Environment& env, const WeightParams& p, const ConeSpec& cone,
                                                 int nmax, bool parallel) {
  QuenchedInversion q;
  q.origin = build_quenched_tables(env, p, cone, nmax, {}, parallel);
  const int dim = q.origin.dim;
  // Every site a cone-confined path from the origin can pass at length < nmax.
  std::vector<Point> starts;
  for (int m = 1; m < nmax; ++m)
    for (const auto& [y, v] : q.origin.log_t.rows[static_cast<std::size_t>(m)])
      if (std::find(starts.begin(), starts.end(), y) == starts.end()) starts.push_back(y);
  std::sort(starts.begin(), starts.end());
  std::vector<IrreducibleTable> built(starts.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::size_t i = 0; i < starts.size(); ++i)
    built[i] = build_quenched_tables(env, p, cone, std::max(1, nmax - l1(starts[i])), starts[i], false);
  for (std::size_t i = 0; i < starts.size(); ++i) q.from.emplace(starts[i], std::move(built[i]));

  std::map<Point, SiteTable> tf, ff;
  for (const auto& [y, tab] : q.from) {
    tf.emplace(y, tab.t());
    ff.emplace(y, tab.f());
  }
  const SiteTable t0 = q.origin.t(), f0 = q.origin.f();
  q.f_recovered = SiteTable{dim, std::vector<std::map<Point, double>>(static_cast<std::size_t>(nmax) + 1)};
  double fscale = 0.0, tscale = 0.0;
  for (int n = 1; n <= nmax; ++n) {
    auto& out = q.f_recovered.rows[static_cast<std::size_t>(n)];
    for (const auto& [x, txn] : t0.rows[static_cast<std::size_t>(n)]) {
      tscale = std::max(tscale, txn);
      double s = txn;
      for (int m = 1; m < n; ++m)
        for (const auto& [y, fy] : q.f_recovered.rows[static_cast<std::size_t>(m)])
          if (y != x) s -= fy * tf.at(y).at(x - y, n - m);
      out[x] = s;
      q.min_recovered = std::min(q.min_recovered, s);
    }
  }
  for (int n = 1; n <= nmax; ++n)
    for (const auto& [x, v] : f0.rows[static_cast<std::size_t>(n)]) fscale = std::max(fscale, v);
  for (int n = 1; n <= nmax; ++n) {
    std::map<Point, double> keys = q.f_recovered.rows[static_cast<std::size_t>(n)];
    for (const auto& [x, v] : f0.rows[static_cast<std::size_t>(n)]) keys.try_emplace(x, 0.0);
    for (const auto& [x, unused] : keys)
      q.max_f_gap = std::max(q.max_f_gap, std::abs(q.f_recovered.at(x, n) - f0.at(x, n)));
  }
  if (fscale > 0) q.max_f_gap /= fscale;
  // Forward identity with a split at the last cone point: t = f + sum t_{y,m} f^{(y)}_{x-y,n-m}.
  for (int n = 1; n <= nmax; ++n)
    for (const auto& [x, txn] : t0.rows[static_cast<std::size_t>(n)]) {
      double s = f0.at(x, n);
      for (int m = 1; m < n; ++m)
        for (const auto& [y, ty] : t0.rows[static_cast<std::size_t>(m)]) s += ty * ff.at(y).at(x - y, n - m);
      q.forward_residual = std::max(q.forward_residual, std::abs(s - txn));
    }
  if (tscale > 0) q.forward_residual /= tscale;
  return q;
}

}  // namespace polylab
