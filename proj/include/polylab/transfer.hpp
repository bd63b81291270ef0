#pragma once

#include <cstddef>
#include <vector>

#include "polylab/environment.hpp"
#include "polylab/lattice.hpp"
#include "polylab/path.hpp"

namespace polylab {

enum class KernelMode { Serial, Parallel };

/// One step of the quenched transfer recursion on a box with a zero halo:
///   Z_{n}(x) = e^{-lambda - beta V(x)} sum_e e^{h.e}/(2d) Z_{n-1}(x - e).
/// Sites on the box boundary receive mass but do not pass it on (absorbing).
class TransferOperator {
 public:
  /// A null environment means V = 0 everywhere.
  TransferOperator(const Box& box, const Environment* env, const WeightParams& p);

  const Box& box() const { return box_; }
  std::size_t cells() const { return cells_; }
  std::size_t cell(const Point& p) const {
    std::size_t c = 0;
    for (int i = 0; i < kMaxDim; ++i) c += static_cast<std::size_t>(p[i] - box_.lo()[i] + pad_[i]) * stride_[i];
    return c;
  }
  Point point(std::size_t c) const;
  bool interior_cell(std::size_t c) const { return mask_[c] != 0; }
  double step_coef(int s) const { return coef_[s]; }
  std::ptrdiff_t step_offset(int s) const { return off_[s]; }
  double site_weight(std::size_t c) const { return w_[c]; }

  struct Layer {
    double max = 0.0;       // max over all swept cells
    double mass = 0.0;      // sum over interior cells
    double absorbed = 0.0;  // sum over boundary cells
  };

  /// out = scale * T(in) on the swept sub-box; `record` (optional) receives the
  /// values including boundary cells, `out` keeps only what propagates.
  /// Cells of `out` outside the sweep are left untouched.
  Layer apply(const double* in, double* out, double* record, const Box& sweep, double scale,
              KernelMode mode) const;

  /// Sub-box swept at layer n from `start`: the l-infinity ball of radius n clipped to the box.
  Box sweep(const Point& start, int n) const;

 private:
  template <bool Parallel>
  Layer apply_impl(const double* in, double* out, double* record, const Box& sweep, double scale) const;

  Box box_;
  int dim_;
  int pad_[kMaxDim]{};
  std::size_t ext_[kMaxDim]{}, stride_[kMaxDim]{};
  std::size_t cells_ = 0;
  std::vector<double> w_;
  std::vector<unsigned char> mask_;
  double coef_[2 * kMaxDim]{};
  std::ptrdiff_t off_[2 * kMaxDim]{};
};

}  // namespace polylab
