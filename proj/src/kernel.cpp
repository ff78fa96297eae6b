#include "kinv/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kinv/error.hpp"

namespace kinv {

InteractionKernel::InteractionKernel(KernelBasis basis, std::vector<double> coeffs)
    : basis_(basis), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != basis_.size()) {
    std::ostringstream msg;
    msg << "InteractionKernel: expected " << basis_.size() << " coefficients, got "
        << coeffs_.size();
    throw InvalidArgument(msg.str());
  }
  for (std::size_t m = 0; m < coeffs_.size(); ++m) {
    if (!std::isfinite(coeffs_[m]) || coeffs_[m] < 0.0) {
      std::ostringstream msg;
      msg << "InteractionKernel: coefficient " << m << " = " << coeffs_[m]
          << " is not a finite nonnegative value";
      throw InvalidArgument(msg.str());
    }
  }
}

InteractionKernel InteractionKernel::zero(const KernelBasis& basis) {
  return constant(basis, 0.0);
}

InteractionKernel InteractionKernel::constant(const KernelBasis& basis, double value) {
  return InteractionKernel(basis, std::vector<double>(basis.size(), value));
}

InteractionKernel InteractionKernel::interpolate(const KernelBasis& basis,
                                                 const std::function<double(double)>& fn) {
  std::vector<double> coeffs(basis.size());
  for (std::size_t m = 0; m < coeffs.size(); ++m) coeffs[m] = fn(basis.node(m));
  return InteractionKernel(basis, std::move(coeffs));
}

InteractionKernel InteractionKernel::confidence_bound(const KernelBasis& basis, double bound) {
  return interpolate(basis, [bound](double r) { return std::abs(r) < bound ? 1.0 : 0.0; });
}

double InteractionKernel::operator()(double r) const {
  const double a = std::abs(r);
  if (a > basis_.half_width()) return 0.0;
  const double s = a / basis_.dr();
  auto m = static_cast<std::size_t>(s);
  if (m + 1 >= coeffs_.size()) return coeffs_.back();
  const double frac = s - static_cast<double>(m);
  return coeffs_[m] + frac * (coeffs_[m + 1] - coeffs_[m]);
}

double InteractionKernel::average(double lo, double hi) const {
  if (!(hi > lo)) throw InvalidArgument("InteractionKernel::average: empty interval");
  double total = 0.0;
  for (std::size_t m = 0; m < coeffs_.size(); ++m) {
    if (coeffs_[m] != 0.0) total += coeffs_[m] * basis_.hat_integral(m, lo, hi);
  }
  return total / (hi - lo);
}

double eval_kernel(const InteractionKernel& kernel, double r) { return kernel(r); }

DistanceCellMap::DistanceCellMap(const OpinionGrid& grid, const KernelBasis& basis)
    : distances_(grid.size()), coefficients_(basis.size()), dx_(grid.dx()) {
  table_.assign(distances_ * coefficients_, 0.0);
  for (std::size_t n = 0; n < distances_; ++n) {
    const double center = static_cast<double>(n) * dx_;
    for (std::size_t m = 0; m < coefficients_; ++m) {
      table_[n * coefficients_ + m] =
          basis.hat_integral(m, center - 0.5 * dx_, center + 0.5 * dx_);
    }
  }
}

std::vector<double> DistanceCellMap::pair_weights(std::span<const double> coeffs) const {
  if (coeffs.size() != coefficients_) {
    throw InvalidArgument("DistanceCellMap::pair_weights: coefficient count mismatch");
  }
  std::vector<double> weights(distances_, 0.0);
  for (std::size_t n = 0; n < distances_; ++n) {
    double acc = 0.0;
    for (std::size_t m = 0; m < coefficients_; ++m) acc += table_[n * coefficients_ + m] * coeffs[m];
    weights[n] = acc / dx_;
  }
  return weights;
}

std::vector<double> DistanceCellMap::project(std::span<const double> pointwise) const {
  if (pointwise.size() != distances_) {
    throw InvalidArgument("DistanceCellMap::project: expected one value per pair distance");
  }
  std::vector<double> out(coefficients_, 0.0);
  for (std::size_t n = 0; n < distances_; ++n) {
    // Cells n and -n carry the same value; count both except for n = 0.
    const double w = (n == 0 ? 1.0 : 2.0) * pointwise[n];
    if (w == 0.0) continue;
    for (std::size_t m = 0; m < coefficients_; ++m) out[m] += w * table_[n * coefficients_ + m];
  }
  return out;
}

}  // namespace kinv
