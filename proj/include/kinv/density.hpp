#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kinv/grid.hpp"

namespace kinv {

/// Uniform density 1/(2B) on (center - B, center + B).
struct Uniform {
  double half_width = 1.0;
  double center = 0.0;
};

/// Two plateaus of height 1/(2w) on (a0-c-w, a0-c) and (a0+c-w, a0+c).
struct IndicatorPair {
  double a0 = 0.0;
  double c = 0.0;
  double w = 0.0;
};

/// Unit point mass at x0.
struct PointMass {
  double x0 = 0.0;
};

/// Density values tabulated on a grid; interpreted as constant over each node's cell.
struct Tabulated {
  OpinionGrid grid;
  std::vector<double> values;
};

using DensitySpec = std::variant<Uniform, IndicatorPair, PointMass, Tabulated>;

std::string describe(const DensitySpec& spec);

/// Smallest interval containing the support of the spec.
std::pair<double, double> support(const DensitySpec& spec);

/// Pointwise value of the (unnormalized-free) analytic density. Point masses
/// have no pointwise value and raise InvalidArgument.
double density_value(const DensitySpec& spec, double x);

/// Integral of the density over [lo, hi]. Point masses contribute 1 when x0 lies
/// in [lo, hi).
double density_integral(const DensitySpec& spec, double lo, double hi);

/// Locations where the density jumps; piecewise smooth in between.
std::vector<double> density_breakpoints(const DensitySpec& spec);

/// Probability density sampled on an opinion grid.
class OpinionDensity {
 public:
  OpinionDensity(OpinionGrid grid, std::vector<double> values);

  const OpinionGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  double mass() const;
  double first_moment() const;

 private:
  OpinionGrid grid_;
  std::vector<double> values_;
};

double grid_mass(const OpinionGrid& grid, std::span<const double> values);
double grid_first_moment(const OpinionGrid& grid, std::span<const double> values);

/// Cell averages of the spec on the grid, renormalized to unit grid mass.
///
/// Point masses off the nodes are split linearly between the two neighbouring
/// nodes so that both mass and first moment are exact.
OpinionDensity realize_density(const DensitySpec& spec, const OpinionGrid& grid);

}  // namespace kinv
