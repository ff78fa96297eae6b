#pragma once

#include <cstddef>

namespace kinv {

/// Uniform opinion grid x_i = x_min + i*dx on [x_min, x_max].
///
/// Node i owns the cell [x_i - dx/2, x_i + dx/2] clipped to [x_min, x_max], so
/// the two end nodes own half-cells. Masses are always f_i * dx.
class OpinionGrid {
 public:
  OpinionGrid(double x_min, double x_max, double dx);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double dx() const { return dx_; }
  std::size_t size() const { return size_; }

  double node(std::size_t i) const;
  double cell_lo(std::size_t i) const;
  double cell_hi(std::size_t i) const;

  /// Reflection of node i about the grid center.
  std::size_t mirror(std::size_t i) const { return size_ - 1 - i; }

  friend bool operator==(const OpinionGrid& a, const OpinionGrid& b) {
    return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.dx_ == b.dx_;
  }

 private:
  double x_min_;
  double x_max_;
  double dx_;
  std::size_t size_;
};

/// Nonnegative-r nodes r_m = m*dr, m = 0..M, of the kernel representation.
///
/// The node count is ceil(requested_half_width/dr) + 1, so the effective
/// half-width r_M may exceed the requested one by less than one dr.
class KernelBasis {
 public:
  KernelBasis(double requested_half_width, double dr);

  double dr() const { return dr_; }
  double half_width() const { return half_width_; }
  std::size_t size() const { return size_; }
  double node(std::size_t m) const { return static_cast<double>(m) * dr_; }

  /// Mirrored hat function of node m, phi_m(r) = phi_m(-r), zero for |r| > half_width.
  double hat(std::size_t m, double r) const;

  /// Exact integral of the mirrored hat of node m over [lo, hi].
  double hat_integral(std::size_t m, double lo, double hi) const;

  friend bool operator==(const KernelBasis& a, const KernelBasis& b) {
    return a.dr_ == b.dr_ && a.size_ == b.size_;
  }

 private:
  double dr_;
  double half_width_;
  std::size_t size_;
};

}  // namespace kinv
