#include "kinv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kinv/error.hpp"

namespace kinv {

namespace {

constexpr double kGridTolerance = 1e-12;

// Integral of the one-sided hat max(1 - |r - c|/h, 0) over [lo, hi], without mirroring.
double half_line_hat_integral(double c, double h, double lo, double hi) {
  double total = 0.0;
  // Left flank on [c - h, c], right flank on [c, c + h]; both linear.
  auto flank = [&](double a, double b, double value_a, double value_b) {
    const double l = std::max(lo, a);
    const double r = std::min(hi, b);
    if (r <= l) return;
    const double slope = (value_b - value_a) / (b - a);
    const double vl = value_a + slope * (l - a);
    const double vr = value_a + slope * (r - a);
    total += 0.5 * (vl + vr) * (r - l);
  };
  flank(c - h, c, 0.0, 1.0);
  flank(c, c + h, 1.0, 0.0);
  return total;
}

}  // namespace

OpinionGrid::OpinionGrid(double x_min, double x_max, double dx)
    : x_min_(x_min), x_max_(x_max), dx_(dx), size_(0) {
  if (!(dx > 0.0) || !std::isfinite(dx)) {
    throw InvalidArgument("OpinionGrid: dx must be positive and finite");
  }
  if (!(x_max > x_min)) {
    throw InvalidArgument("OpinionGrid: x_max must exceed x_min");
  }
  const double cells = (x_max - x_min) / dx;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > kGridTolerance * std::max(1.0, rounded)) {
    std::ostringstream msg;
    msg << "OpinionGrid: (x_max - x_min)/dx = " << cells << " is not an integer";
    throw InvalidArgument(msg.str());
  }
  size_ = static_cast<std::size_t>(rounded) + 1;
  if (size_ < 3) {
    throw InvalidArgument("OpinionGrid: at least 3 nodes are required");
  }
}

double OpinionGrid::node(std::size_t i) const {
  if (i + 1 == size_) return x_max_;
  return x_min_ + static_cast<double>(i) * dx_;
}

double OpinionGrid::cell_lo(std::size_t i) const {
  return i == 0 ? x_min_ : node(i) - 0.5 * dx_;
}

double OpinionGrid::cell_hi(std::size_t i) const {
  return i + 1 == size_ ? x_max_ : node(i) + 0.5 * dx_;
}

KernelBasis::KernelBasis(double requested_half_width, double dr)
    : dr_(dr), half_width_(0.0), size_(0) {
  if (!(dr > 0.0) || !std::isfinite(dr)) {
    throw InvalidArgument("KernelBasis: dr must be positive and finite");
  }
  if (!(requested_half_width > 0.0)) {
    throw InvalidArgument("KernelBasis: half width must be positive");
  }
  const auto intervals =
      static_cast<std::size_t>(std::ceil(requested_half_width / dr - kGridTolerance));
  size_ = std::max<std::size_t>(intervals, 1) + 1;
  half_width_ = static_cast<double>(size_ - 1) * dr_;
}

double KernelBasis::hat(std::size_t m, double r) const {
  const double a = std::abs(r);
  if (a > half_width_ || m >= size_) return 0.0;
  return std::max(1.0 - std::abs(a - node(m)) / dr_, 0.0);
}

double KernelBasis::hat_integral(std::size_t m, double lo, double hi) const {
  if (m >= size_ || hi <= lo) return 0.0;
  // Clip to the support, then split into the r >= 0 part and the mirrored r < 0 part.
  lo = std::max(lo, -half_width_);
  hi = std::min(hi, half_width_);
  if (hi <= lo) return 0.0;
  const double c = node(m);
  double total = 0.0;
  if (hi > 0.0) total += half_line_hat_integral(c, dr_, std::max(lo, 0.0), hi);
  if (lo < 0.0) total += half_line_hat_integral(c, dr_, std::max(-hi, 0.0), -lo);
  return total;
}

}  // namespace kinv
