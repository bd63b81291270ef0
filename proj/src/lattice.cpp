#include "polylab/lattice.hpp"

#include <sstream>

namespace polylab {

std::string to_string(const Point& p, int dim) {
  std::string s = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) s += ",";
    s += std::to_string(p[i]);
  }
  return s + ")";
}

Box::Box(int dim, Point lo, Point hi) : dim_(dim), lo_(lo), hi_(hi) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("box dimension must be 1..3");
  size_ = 1;
  for (int i = 0; i < dim; ++i) {
    if (hi[i] < lo[i]) throw std::invalid_argument("empty box");
    size_ *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  }
  for (int i = dim; i < kMaxDim; ++i) {
    lo_[i] = 0;
    hi_[i] = 0;
  }
}

Box Box::centered(int dim, int radius) {
  Point lo, hi;
  for (int i = 0; i < dim; ++i) {
    lo[i] = -radius;
    hi[i] = radius;
  }
  return Box(dim, lo, hi);
}

std::string Box::str() const {
  std::string s;
  for (int i = 0; i < dim_; ++i) {
    if (i) s += ",";
    s += std::to_string(lo_[i]) + ":" + std::to_string(hi_[i]);
  }
  return s;
}

Box Box::parse(const std::string& text) {
  Point lo, hi;
  int dim = 0;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos || dim >= kMaxDim)
      throw std::invalid_argument("malformed box: " + text);
    lo[dim] = std::stoi(part.substr(0, colon));
    hi[dim] = std::stoi(part.substr(colon + 1));
    ++dim;
  }
  if (dim == 0) throw std::invalid_argument("malformed box: " + text);
  return Box(dim, lo, hi);
}

}  // namespace polylab
