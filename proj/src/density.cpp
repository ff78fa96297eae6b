#include "kinv/density.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kinv/error.hpp"

namespace kinv {

namespace {

constexpr double kSupportTolerance = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double overlap(double lo, double hi, double a, double b) {
  return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

void check_indicator_pair(const IndicatorPair& p) {
  if (!(p.w > 0.0)) throw InvalidArgument("IndicatorPair: w must be positive");
}

}  // namespace

std::string describe(const DensitySpec& spec) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const Uniform& u) { out << "Uniform{B=" << u.half_width << ", center=" << u.center << "}"; },
                 [&](const IndicatorPair& p) {
                   out << "IndicatorPair{a0=" << p.a0 << ", c=" << p.c << ", w=" << p.w << "}";
                 },
                 [&](const PointMass& p) { out << "PointMass{x0=" << p.x0 << "}"; },
                 [&](const Tabulated& t) { out << "Tabulated{" << t.values.size() << " values}"; },
             },
             spec);
  return out.str();
}

std::pair<double, double> support(const DensitySpec& spec) {
  return std::visit(
      Overloaded{
          [](const Uniform& u) { return std::pair{u.center - u.half_width, u.center + u.half_width}; },
          [](const IndicatorPair& p) { return std::pair{p.a0 - p.c - p.w, p.a0 + p.c}; },
          [](const PointMass& p) { return std::pair{p.x0, p.x0}; },
          [](const Tabulated& t) { return std::pair{t.grid.x_min(), t.grid.x_max()}; },
      },
      spec);
}

double density_value(const DensitySpec& spec, double x) {
  return std::visit(
      Overloaded{
          [x](const Uniform& u) {
            return std::abs(x - u.center) < u.half_width ? 0.5 / u.half_width : 0.0;
          },
          [x](const IndicatorPair& p) {
            check_indicator_pair(p);
            const double h = 0.5 / p.w;
            double v = 0.0;
            if (x > p.a0 - p.c - p.w && x < p.a0 - p.c) v += h;
            if (x > p.a0 + p.c - p.w && x < p.a0 + p.c) v += h;
            return v;
          },
          [](const PointMass&) -> double {
            throw InvalidArgument("density_value: a point mass has no pointwise density");
          },
          [x](const Tabulated& t) {
            const auto& g = t.grid;
            if (x < g.x_min() || x > g.x_max()) return 0.0;
            auto i = static_cast<std::size_t>(std::floor((x - g.x_min()) / g.dx() + 0.5));
            return t.values[std::min(i, t.values.size() - 1)];
          },
      },
      spec);
}

double density_integral(const DensitySpec& spec, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return std::visit(
      Overloaded{
          [&](const Uniform& u) {
            return overlap(lo, hi, u.center - u.half_width, u.center + u.half_width) * 0.5 /
                   u.half_width;
          },
          [&](const IndicatorPair& p) {
            check_indicator_pair(p);
            return (overlap(lo, hi, p.a0 - p.c - p.w, p.a0 - p.c) +
                    overlap(lo, hi, p.a0 + p.c - p.w, p.a0 + p.c)) *
                   0.5 / p.w;
          },
          [&](const PointMass& p) { return (p.x0 >= lo && p.x0 < hi) ? 1.0 : 0.0; },
          [&](const Tabulated& t) {
            double total = 0.0;
            for (std::size_t i = 0; i < t.values.size(); ++i) {
              total += t.values[i] * overlap(lo, hi, t.grid.cell_lo(i), t.grid.cell_hi(i));
            }
            return total;
          },
      },
      spec);
}

std::vector<double> density_breakpoints(const DensitySpec& spec) {
  return std::visit(
      Overloaded{
          [](const Uniform& u) {
            return std::vector<double>{u.center - u.half_width, u.center + u.half_width};
          },
          [](const IndicatorPair& p) {
            return std::vector<double>{p.a0 - p.c - p.w, p.a0 - p.c, p.a0 + p.c - p.w, p.a0 + p.c};
          },
          [](const PointMass& p) { return std::vector<double>{p.x0}; },
          [](const Tabulated& t) {
            std::vector<double> out;
            out.reserve(t.values.size() + 1);
            for (std::size_t i = 0; i < t.values.size(); ++i) out.push_back(t.grid.cell_lo(i));
            out.push_back(t.grid.x_max());
            return out;
          },
      },
      spec);
}

OpinionDensity::OpinionDensity(OpinionGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw InvalidArgument("OpinionDensity: value count does not match the grid");
  }
}

double OpinionDensity::mass() const { return grid_mass(grid_, values_); }

double OpinionDensity::first_moment() const { return grid_first_moment(grid_, values_); }

double grid_mass(const OpinionGrid& grid, std::span<const double> values) {
  double total = 0.0;
  for (double v : values) total += v;
  return total * grid.dx();
}

double grid_first_moment(const OpinionGrid& grid, std::span<const double> values) {
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) total += grid.node(i) * values[i];
  return total * grid.dx();
}

OpinionDensity realize_density(const DensitySpec& spec, const OpinionGrid& grid) {
  const auto [lo, hi] = support(spec);
  const double tol = kSupportTolerance * std::max(1.0, grid.x_max() - grid.x_min());
  if (lo < grid.x_min() - tol) {
    std::ostringstream msg;
    msg << "realize_density: lower support bound " << lo << " of " << describe(spec)
        << " lies below x_min = " << grid.x_min();
    throw InvalidArgument(msg.str());
  }
  if (hi > grid.x_max() + tol) {
    std::ostringstream msg;
    msg << "realize_density: upper support bound " << hi << " of " << describe(spec)
        << " lies above x_max = " << grid.x_max();
    throw InvalidArgument(msg.str());
  }

  const std::size_t n = grid.size();
  const double dx = grid.dx();
  std::vector<double> values(n, 0.0);

  if (const auto* pm = std::get_if<PointMass>(&spec)) {
    const double s = std::clamp((pm->x0 - grid.x_min()) / dx, 0.0, static_cast<double>(n - 1));
    const double rounded = std::round(s);
    if (std::abs(s - rounded) < 1e-9) {
      values[static_cast<std::size_t>(rounded)] = 1.0 / dx;
    } else {
      const auto i = static_cast<std::size_t>(std::floor(s));
      const double frac = s - static_cast<double>(i);
      values[i] = (1.0 - frac) / dx;
      values[i + 1] = frac / dx;
    }
    return OpinionDensity(grid, std::move(values));
  }

  if (const auto* tab = std::get_if<Tabulated>(&spec)) {
    if (!(tab->grid == grid)) {
      throw InvalidArgument("realize_density: tabulated density lives on a different grid");
    }
    if (tab->values.size() != n) {
      throw InvalidArgument("realize_density: tabulated value count does not match the grid");
    }
    values = tab->values;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = density_integral(spec, grid.cell_lo(i), grid.cell_hi(i)) / dx;
    }
  }

  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("realize_density: density has negative or non-finite values");
    }
  }
  const double mass = grid_mass(grid, values);
  if (!(mass > 0.0)) throw InvalidArgument("realize_density: density has zero mass on the grid");
  if (mass != 1.0) {
    for (double& v : values) v /= mass;
  }
  return OpinionDensity(grid, std::move(values));
}

}  // namespace kinv
