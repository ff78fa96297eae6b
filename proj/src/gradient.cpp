#include "kinv/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "kinv/error.hpp"
#include "kinv/io.hpp"

namespace kinv {

double KernelGradient::norm() const {
  double s = 0.0;
  for (double c : coeffs) s += c * c;
  return std::sqrt(s);
}

namespace {

// Linear interpolation of nodal values at x; zero outside the grid.
double interp(const OpinionGrid& grid, std::span<const double> v, double x) {
  const double s = (x - grid.x_min()) / grid.dx();
  const double last = static_cast<double>(grid.size() - 1);
  if (s < -1e-9 || s > last + 1e-9) return 0.0;
  const double clamped = std::clamp(s, 0.0, last);
  auto i = static_cast<std::size_t>(std::floor(clamped));
  if (i + 1 >= grid.size()) return v[grid.size() - 1];
  const double frac = clamped - static_cast<double>(i);
  if (frac < 1e-12) return v[i];
  if (frac > 1.0 - 1e-12) return v[i + 1];
  return (1.0 - frac) * v[i] + frac * v[i + 1];
}

double frechet_integrand(const OpinionGrid& grid, std::span<const double> f,
                         std::span<const double> g, double r) {
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double y = grid.node(k);
    const double fy = f[k];
    if (fy == 0.0) continue;
    const double fr = interp(grid, f, r + y);
    if (fr == 0.0) continue;
    acc += fr * fy *
           (2.0 * interp(grid, g, 0.5 * r + y) - interp(grid, g, r + y) - g[k]);
  }
  return 2.0 * acc * grid.dx();
}

}  // namespace

double frechet_dM(const ForwardTrajectory& trajectory, const AdjointTrajectory& adjoint, double r,
                  const KernelBasis& basis) {
  if (std::abs(r) > basis.half_width() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "frechet_dM: r = " << r << " lies outside [-" << basis.half_width() << ", "
        << basis.half_width() << "]";
    throw InvalidArgument(msg.str());
  }
  if (!(trajectory.grid() == adjoint.grid()) || trajectory.dt() != adjoint.dt()) {
    throw InvalidArgument("frechet_dM: forward and adjoint trajectories use different grids");
  }
  const std::size_t last = adjoint.frame_count() - 1;
  if (last >= trajectory.frame_count()) {
    throw InvalidArgument("frechet_dM: adjoint extends beyond the forward trajectory");
  }
  const auto& grid = trajectory.grid();
  double total = 0.0;
  double previous = frechet_integrand(grid, trajectory.frame(0), adjoint.frame(0), r);
  for (std::size_t i = 1; i <= last; ++i) {
    const double current = frechet_integrand(grid, trajectory.frame(i), adjoint.frame(i), r);
    total += 0.5 * trajectory.dt() * (previous + current);
    previous = current;
  }
  return total;
}

KernelGradient project_gradient(const std::function<double(double)>& pointwise,
                                const KernelBasis& basis, double step) {
  if (!(step > 0.0)) throw InvalidArgument("project_gradient: step must be positive");
  const auto reach = static_cast<long>(std::ceil(basis.half_width() / step + 0.5));
  KernelGradient out{basis, std::vector<double>(basis.size(), 0.0), {}};
  for (long n = -reach; n <= reach; ++n) {
    const double center = static_cast<double>(n) * step;
    const double lo = center - 0.5 * step;
    const double hi = center + 0.5 * step;
    if (hi <= -basis.half_width() || lo >= basis.half_width()) continue;
    const double p = pointwise(center);
    if (p == 0.0) continue;
    for (std::size_t m = 0; m < basis.size(); ++m) {
      out.coeffs[m] += p * basis.hat_integral(m, lo, hi);
    }
  }
  return out;
}

void pair_sensitivity(std::span<const double> f, std::span<const double> g, double dx,
                      std::span<double> out) {
  const std::size_t size = f.size();
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t reach = std::min(out.size(), size);
  for (std::size_t n = 1; n < reach; ++n) {
    double acc = 0.0;
    const std::size_t half = n / 2;
    const std::size_t len = size - n;
    if (n % 2 == 0) {
      for (std::size_t k = 0; k < len; ++k) {
        acc += f[k + n] * f[k] * (2.0 * g[k + half] - g[k + n] - g[k]);
      }
    } else {
      for (std::size_t k = 0; k < len; ++k) {
        acc += f[k + n] * f[k] * (g[k + half] + g[k + half + 1] - g[k + n] - g[k]);
      }
    }
    out[n] = acc * dx;
  }
}

namespace {

// Distances whose pair cell overlaps the kernel support.
std::size_t sensitivity_reach(const DistanceCellMap& map) {
  std::size_t reach = 0;
  for (std::size_t n = 0; n < map.distances(); ++n) {
    for (std::size_t m = 0; m < map.coefficients(); ++m) {
      if (map.cell_integral(n, m) != 0.0) reach = n + 1;
    }
  }
  return reach;
}

// Backward sweep of the adjoint with final data injected at `jumps` (substep
// index -> weight on the threshold indicator). Adds the time integral of the
// pair sensitivity to `accumulated`.
void weighted_adjoint_sweep(const CollisionOperator& op, const ForwardTrajectory& traj,
                            const std::vector<double>& indicator,
                            const std::map<std::size_t, double>& jumps,
                            std::vector<double>& accumulated) {
  if (jumps.empty()) return;
  const std::size_t n = traj.grid().size();
  const double dx = traj.grid().dx();
  const double dt = traj.dt();
  const std::size_t reach = accumulated.size();

  auto inject = [&](std::vector<double>& g, std::size_t index) {
    auto it = jumps.find(index);
    if (it == jumps.end()) return false;
    for (std::size_t k = 0; k < n; ++k) g[k] += it->second * indicator[k];
    return true;
  };

  const std::size_t last = jumps.rbegin()->first;
  std::vector<double> g(n, 0.0);
  inject(g, last);
  std::vector<double> h_hi(reach), h_lo(reach);
  pair_sensitivity(traj.frame(last), g, dx, h_hi);
  for (std::size_t i = last; i-- > 0;) {
    const auto mid = traj.midpoint(i);
    adjoint_step(op, g, traj.frame(i + 1), mid, traj.frame(i), dt);
    pair_sensitivity(traj.frame(i), g, dx, h_lo);
    for (std::size_t r = 0; r < reach; ++r) accumulated[r] += 0.5 * dt * (h_hi[r] + h_lo[r]);
    if (inject(g, i)) {
      pair_sensitivity(traj.frame(i), g, dx, h_hi);
    } else {
      std::swap(h_hi, h_lo);
    }
  }
}

}  // namespace

LossGradient loss_and_gradient(const InteractionKernel& kernel, const MeasurementDataset& dataset,
                               const SolverConfig& solver, AdjointStrategy strategy) {
  if (dataset.records.empty()) throw InvalidArgument("loss_gradient: dataset has no records");
  const double t_end = horizon(dataset);
  const auto& grid = solver.grid;
  const DistanceCellMap map(grid, kernel.basis());
  const CollisionOperator op(grid, map.pair_weights(kernel.coeffs()));
  const std::size_t reach = std::max<std::size_t>(sensitivity_reach(map), 1);
  const double scale = 1.0 / static_cast<double>(dataset.records.size());

  LossGradient result{0.0, KernelGradient{kernel.basis(), {}, {}}, 0, 0};
  std::vector<double> sensitivity(reach, 0.0);

  const auto groups = group_records(dataset);
  std::map<std::size_t, std::vector<const RecordGroup*>> by_spec;
  for (const auto& group : groups) by_spec[group.f0_id].push_back(&group);

  for (const auto& [f0_id, spec_groups] : by_spec) {
    const auto f0 = realize_density(dataset.specs.at(f0_id), grid);
    const auto traj = solve_forward(f0, kernel, t_end, solver.dt_sub);
    ++result.forward_solves;
    for (const RecordGroup* group : spec_groups) {
      const auto indicator = threshold_weights(grid, group->a);
      std::map<std::size_t, double> jumps;
      for (std::size_t idx : group->record_indices) {
        const auto& rec = dataset.records[idx];
        const std::size_t ti = traj.index_of(rec.t);
        const double residual = measure_M(grid, traj.frame(ti), rec.a) - rec.value;
        result.loss += 0.5 * residual * residual * scale;
        result.gradient.provenance.push_back({rec.f0_id, rec.a, rec.t});
        if (ti == 0) continue;  // M(a, 0) does not depend on the kernel
        if (strategy == AdjointStrategy::PerRecord) {
          weighted_adjoint_sweep(op, traj, indicator, {{ti, residual * scale}}, sensitivity);
          ++result.adjoint_solves;
        } else {
          jumps[ti] += residual * scale;
        }
      }
      if (strategy == AdjointStrategy::Accumulated && !jumps.empty()) {
        weighted_adjoint_sweep(op, traj, indicator, jumps, sensitivity);
        ++result.adjoint_solves;
      }
    }
  }

  std::vector<double> pointwise(map.distances(), 0.0);
  std::copy(sensitivity.begin(), sensitivity.end(), pointwise.begin());
  result.gradient.coeffs = map.project(pointwise);
  return result;
}

KernelGradient loss_gradient(const InteractionKernel& kernel, const MeasurementDataset& dataset,
                             const SolverConfig& solver, AdjointStrategy strategy) {
  return loss_and_gradient(kernel, dataset, solver, strategy).gradient;
}

std::vector<double> finite_difference_gradient(const InteractionKernel& kernel,
                                               const MeasurementDataset& dataset,
                                               const SolverConfig& solver, double relative_step) {
  if (!(relative_step > 0.0)) throw InvalidArgument("finite differences need a positive step");
  const auto& basis = kernel.basis();
  std::vector<double> out(basis.size());
  for (std::size_t m = 0; m < basis.size(); ++m) {
    const double h = relative_step * std::max(1.0, std::abs(kernel.coeffs()[m]));
    auto up = kernel.coeffs();
    auto down = kernel.coeffs();
    up[m] += h;
    // Coefficients must stay nonnegative; fall back to a one-sided difference.
    const bool central = down[m] - h >= 0.0;
    down[m] = central ? down[m] - h : down[m];
    const double l_up = loss(InteractionKernel(basis, up), dataset, solver);
    const double l_down = loss(InteractionKernel(basis, down), dataset, solver);
    out[m] = (l_up - l_down) / (central ? 2.0 * h : h);
  }
  return out;
}

double relative_l2_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("relative_l2_error: size mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

void write_gradient_csv(std::ostream& out, const KernelGradient& gradient) {
  out << "r,grad\n";
  for (std::size_t m = 0; m < gradient.coeffs.size(); ++m) {
    out << format_real(gradient.basis.node(m)) << ',' << format_real(gradient.coeffs[m]) << '\n';
  }
}

}  // namespace kinv
