#include "polylab/path.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "polylab/logsum.hpp"
#include "polylab/rng.hpp"

namespace polylab {

void WeightParams::validate(int dim) const {
  if (!(std::isfinite(beta) && beta >= 0.0)) throw std::invalid_argument("beta must be finite and >= 0");
  if (!(std::isfinite(lambda) && lambda >= 0.0)) throw std::invalid_argument("lambda must be finite and >= 0");
  for (int i = 0; i < kMaxDim; ++i) {
    if (!std::isfinite(h[static_cast<std::size_t>(i)])) throw std::invalid_argument("h must be finite");
    if (i >= dim && h[static_cast<std::size_t>(i)] != 0.0)
      throw std::invalid_argument("h has components beyond the lattice dimension");
  }
}

double WeightParams::log_mean_cosh(int dim) const {
  double s = 0;
  for (int i = 0; i < dim; ++i) s += std::cosh(h[static_cast<std::size_t>(i)]);
  return std::log(s / dim);
}

LatticePath::LatticePath(int dim) : dim_(dim), sites_(1) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension must be 1..3");
}

LatticePath::LatticePath(int dim, std::vector<Point> sites, bool check_origin)
    : dim_(dim), sites_(std::move(sites)) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension must be 1..3");
  if (sites_.empty()) throw std::invalid_argument("a path has at least one site");
  if (check_origin && sites_.front() != Point{}) throw std::invalid_argument("path must start at the origin");
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    for (int k = dim; k < kMaxDim; ++k)
      if (sites_[i][k] != 0) throw std::invalid_argument("site has coordinates beyond the dimension");
    if (i > 0 && l1(sites_[i] - sites_[i - 1]) != 1)
      throw std::invalid_argument("consecutive sites must be nearest neighbours");
  }
}

LatticePath LatticePath::from_sites(int dim, std::vector<Point> sites) {
  return LatticePath(dim, std::move(sites), true);
}

LatticePath LatticePath::shifted(int dim, std::vector<Point> sites) {
  return LatticePath(dim, std::move(sites), false);
}

LatticePath LatticePath::from_steps(int dim, std::span<const Point> steps, Point start) {
  std::vector<Point> s;
  s.reserve(steps.size() + 1);
  s.push_back(start);
  for (const auto& e : steps) s.push_back(s.back() + e);
  return LatticePath(dim, std::move(s), false);
}

LatticePath LatticePath::reversed() const {
  return LatticePath(dim_, std::vector<Point>(sites_.rbegin(), sites_.rend()), false);
}

LatticePath LatticePath::slice(int i, int j) const {
  if (i < 0 || j > length() || i > j) throw std::out_of_range("bad path slice");
  return LatticePath(dim_, std::vector<Point>(sites_.begin() + i, sites_.begin() + j + 1), false);
}

LatticePath LatticePath::translated(const Point& by) const {
  std::vector<Point> s = sites_;
  for (auto& p : s) p = p + by;
  return LatticePath(dim_, std::move(s), false);
}

LatticePath LatticePath::then(const LatticePath& next) const {
  if (next.dim_ != dim_) throw std::invalid_argument("dimension mismatch in concatenation");
  std::vector<Point> s = sites_;
  const Point shift = back() - next.front();
  for (std::size_t i = 1; i < next.sites_.size(); ++i) s.push_back(next.sites_[i] + shift);
  return LatticePath(dim_, std::move(s), false);
}

void LatticePath::write(std::ostream& os) const {
  for (const auto& p : sites_) {
    for (int k = 0; k < dim_; ++k) os << (k ? " " : "") << p[k];
    os << "\n";
  }
}

LatticePath LatticePath::read(std::istream& is, int dim) {
  std::vector<Point> s;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Point p;
    for (int k = 0; k < dim; ++k)
      if (!(ls >> p[k])) throw std::invalid_argument("malformed path line: " + line);
    s.push_back(p);
  }
  return LatticePath(dim, std::move(s), false);
}

LocalTimes local_times(const LatticePath& path) {
  LocalTimes lt;
  for (int i = 1; i <= path.length(); ++i) ++lt[path[i]];
  return lt;
}

double annealed_potential(const LatticePath& path, const PotentialDistribution& dist, double beta) {
  double s = 0;
  for (const auto& [site, ell] : local_times(path)) s += dist.phi(beta, ell);
  return s;
}

double log_quenched_weight(const LatticePath& path, const Environment& env, const WeightParams& p) {
  const int n = path.length();
  double pot = 0;
  for (int i = 1; i <= n; ++i) {
    const double v = env.at(path[i]);
    if (std::isinf(v)) {
      if (p.beta > 0) return kNegInf;
      continue;
    }
    pot += v;
  }
  return dot(p.h, path.extension()) - p.lambda * n - p.beta * pot - n * std::log(2.0 * path.dim());
}

double log_annealed_weight(const LatticePath& path, const PotentialDistribution& dist,
                           const WeightParams& p) {
  const int n = path.length();
  return dot(p.h, path.extension()) - p.lambda * n - annealed_potential(path, dist, p.beta) -
         n * std::log(2.0 * path.dim());
}

LatticePath random_path(int dim, int n, Rng& rng) {
  const auto steps = unit_steps(dim);
  std::vector<Point> s(1);
  for (int i = 0; i < n; ++i) s.push_back(s.back() + steps[rng.below(steps.size())]);
  return LatticePath::from_sites(dim, std::move(s));
}

}  // namespace polylab
