#pragma once

#include <functional>
#include <span>
#include <vector>

#include "kinv/grid.hpp"

namespace kinv {

/// Symmetric, nonnegative, compactly supported interaction kernel theta(r).
///
/// Stored as nodal coefficients on a KernelBasis and interpolated piecewise
/// linearly; theta(-r) = theta(r) holds by construction and theta vanishes for
/// |r| > half_width.
class InteractionKernel {
 public:
  InteractionKernel(KernelBasis basis, std::vector<double> coeffs);

  static InteractionKernel zero(const KernelBasis& basis);
  static InteractionKernel constant(const KernelBasis& basis, double value);
  /// Nodal interpolation of an arbitrary function of r >= 0.
  static InteractionKernel interpolate(const KernelBasis& basis,
                                       const std::function<double(double)>& fn);
  /// Nodal interpolation of the confidence-bound indicator 1_{|r| < bound}.
  static InteractionKernel confidence_bound(const KernelBasis& basis, double bound);

  const KernelBasis& basis() const { return basis_; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  double operator()(double r) const;

  /// Mean of theta over [lo, hi], computed exactly for the piecewise-linear interpolant.
  double average(double lo, double hi) const;

 private:
  KernelBasis basis_;
  std::vector<double> coeffs_;
};

double eval_kernel(const InteractionKernel& kernel, double r);

/// Maps kernel coefficients to the pair weights used on an opinion grid.
///
/// A pair of nodes at distance n*dx interacts with weight theta_bar_n, the
/// mean of theta over the cell [n*dx - dx/2, n*dx + dx/2]. The map is linear in
/// the coefficients: theta_bar_n = sum_m A(n, m) Theta_m / dx with
/// A(n, m) = integral of the mirrored hat phi_m over cell n. The transpose of
/// the same table projects pair sensitivities back onto coefficients.
class DistanceCellMap {
 public:
  DistanceCellMap(const OpinionGrid& grid, const KernelBasis& basis);

  std::size_t distances() const { return distances_; }
  std::size_t coefficients() const { return coefficients_; }

  /// theta_bar_n for n = 0 .. distances()-1.
  std::vector<double> pair_weights(std::span<const double> coeffs) const;

  /// Coefficient m receives sum over n in [-(N-1), N-1] of
  /// pointwise[|n|] * integral_{cell n} phi_m. `pointwise` is indexed by |n|.
  std::vector<double> project(std::span<const double> pointwise) const;

  double cell_integral(std::size_t n, std::size_t m) const {
    return table_[n * coefficients_ + m];
  }

 private:
  std::size_t distances_;
  std::size_t coefficients_;
  double dx_;
  std::vector<double> table_;
};

}  // namespace kinv
