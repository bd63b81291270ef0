#include "polylab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polylab {

TransferOperator::TransferOperator(const Box& box, const Environment* env, const WeightParams& p)
    : box_(box), dim_(box.dim()) {
  p.validate(dim_);
  if (env && !env->box().contains(box)) throw std::invalid_argument("transfer box exceeds the environment box");
  for (int i = 0; i < kMaxDim; ++i) {
    pad_[i] = i < dim_ ? 1 : 0;
    ext_[i] = i < dim_ ? static_cast<std::size_t>(box.extent(i) + 2) : 1;
  }
  stride_[kMaxDim - 1] = 1;
  for (int i = kMaxDim - 2; i >= 0; --i) stride_[i] = stride_[i + 1] * ext_[i + 1];
  cells_ = stride_[0] * ext_[0];
  w_.assign(cells_, 0.0);
  mask_.assign(cells_, 0);
  for (std::size_t k = 0; k < box.size(); ++k) {
    const Point x = box.point(k);
    const std::size_t c = cell(x);
    double pot = 0.0;
    if (env && p.beta > 0.0) {
      const double v = env->at(x);
      pot = std::isinf(v) ? kInf : p.beta * v;
    }
    w_[c] = std::exp(-p.lambda - pot);
    mask_[c] = box.on_boundary(x) ? 0 : 1;
  }
  const auto steps = unit_steps(dim_);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    coef_[s] = std::exp(dot(p.h, steps[s])) / (2.0 * dim_);
    std::ptrdiff_t o = 0;
    for (int i = 0; i < dim_; ++i) o += steps[s][i] * static_cast<std::ptrdiff_t>(stride_[i]);
    off_[s] = o;
  }
}

Point TransferOperator::point(std::size_t c) const {
  Point p;
  for (int i = 0; i < kMaxDim; ++i) {
    p[i] = static_cast<int>(c / stride_[i]) - pad_[i] + (i < dim_ ? box_.lo()[i] : 0);
    c %= stride_[i];
  }
  return p;
}

Box TransferOperator::sweep(const Point& start, int n) const {
  Point lo, hi;
  for (int i = 0; i < dim_; ++i) {
    lo[i] = std::max(box_.lo()[i], start[i] - n);
    hi[i] = std::min(box_.hi()[i], start[i] + n);
  }
  return Box(dim_, lo, hi);
}

template <bool Parallel>
TransferOperator::Layer TransferOperator::apply_impl(const double* in, double* out, double* record,
                                                     const Box& sw, double scale) const {
  const int last = dim_ - 1;
  std::size_t nrows = 1;
  for (int i = 0; i < last; ++i) nrows *= static_cast<std::size_t>(sw.extent(i));
  const int len = sw.extent(last);
  const int nsteps = 2 * dim_;
  std::vector<Layer> rows(nrows);

#pragma omp parallel for schedule(static) if (Parallel)
  for (std::size_t r = 0; r < nrows; ++r) {
    Point p = sw.lo();
    std::size_t rem = r;
    for (int i = last - 1; i >= 0; --i) {
      const auto e = static_cast<std::size_t>(sw.extent(i));
      p[i] = sw.lo()[i] + static_cast<int>(rem % e);
      rem /= e;
    }
    const std::size_t c0 = cell(p);
    Layer acc;
    for (int k = 0; k < len; ++k) {
      const std::size_t c = c0 + static_cast<std::size_t>(k);
      double s = 0.0;
      for (int e = 0; e < nsteps; ++e) s += coef_[e] * in[static_cast<std::ptrdiff_t>(c) - off_[e]];
      const double z = scale * w_[c] * s;
      if (record) record[c] = z;
      if (mask_[c]) {
        out[c] = z;
        acc.mass += z;
      } else {
        out[c] = 0.0;
        acc.absorbed += z;
      }
      acc.max = std::max(acc.max, z);
    }
    rows[r] = acc;
  }

  Layer total;
  for (const auto& l : rows) {
    total.max = std::max(total.max, l.max);
    total.mass += l.mass;
    total.absorbed += l.absorbed;
  }
  return total;
}

TransferOperator::Layer TransferOperator::apply(const double* in, double* out, double* record,
                                                const Box& sweep, double scale, KernelMode mode) const {
  return mode == KernelMode::Parallel ? apply_impl<true>(in, out, record, sweep, scale)
                                      : apply_impl<false>(in, out, record, sweep, scale);
}

}  // namespace polylab
