#include "kinv/adjoint.hpp"

#include <algorithm>
#include <sstream>

#include "kinv/error.hpp"

namespace kinv {

std::vector<double> threshold_weights(const OpinionGrid& grid, double a) {
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double lo = grid.cell_lo(i);
    const double hi = grid.cell_hi(i);
    w[i] = std::clamp((a - lo) / (hi - lo), 0.0, 1.0);
  }
  return w;
}

std::vector<double> adjoint_rate(std::span<const double> g, const OpinionDensity& f,
                                 const InteractionKernel& kernel) {
  if (g.size() != f.size()) {
    std::ostringstream msg;
    msg << "adjoint_rate: g has " << g.size() << " values but the density grid has " << f.size();
    throw InvalidArgument(msg.str());
  }
  CollisionOperator op(f.grid(), kernel);
  std::vector<double> out(f.size());
  op.adjoint(g, f.values(), out);
  return out;
}

AdjointTrajectory::AdjointTrajectory(OpinionGrid grid, double dt, double threshold,
                                     std::vector<double> frames)
    : grid_(grid), dt_(dt), threshold_(threshold), count_(0), frames_(std::move(frames)) {
  if (frames_.empty() || frames_.size() % grid_.size() != 0) {
    throw InvalidArgument("AdjointTrajectory: frame storage does not match the grid");
  }
  count_ = frames_.size() / grid_.size();
}

std::span<const double> AdjointTrajectory::frame(std::size_t i) const {
  const std::size_t n = grid_.size();
  return std::span<const double>(frames_).subspan(i * n, n);
}

void adjoint_step(const CollisionOperator& op, std::vector<double>& g,
                  std::span<const double> f_hi, std::span<const double> f_mid,
                  std::span<const double> f_lo, double dt) {
  // In reversed time s = tau_{i+1} - tau the equation reads dg/ds = L*[g].
  const std::size_t n = g.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);
  op.adjoint(g, f_hi, k1);
  for (std::size_t i = 0; i < n; ++i) stage[i] = g[i] + 0.5 * dt * k1[i];
  op.adjoint(stage, f_mid, k2);
  for (std::size_t i = 0; i < n; ++i) stage[i] = g[i] + 0.5 * dt * k2[i];
  op.adjoint(stage, f_mid, k3);
  for (std::size_t i = 0; i < n; ++i) stage[i] = g[i] + dt * k3[i];
  op.adjoint(stage, f_lo, k4);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

AdjointTrajectory solve_adjoint(double a, const ForwardTrajectory& trajectory,
                                const InteractionKernel& kernel, double t) {
  const std::size_t last = trajectory.index_of(t);
  const auto& grid = trajectory.grid();
  const std::size_t n = grid.size();
  CollisionOperator op(grid, kernel);

  std::vector<double> frames((last + 1) * n);
  std::vector<double> g = threshold_weights(grid, a);
  std::copy(g.begin(), g.end(), frames.begin() + static_cast<std::ptrdiff_t>(last * n));
  for (std::size_t i = last; i-- > 0;) {
    const auto mid = trajectory.midpoint(i);
    adjoint_step(op, g, trajectory.frame(i + 1), mid, trajectory.frame(i), trajectory.dt());
    std::copy(g.begin(), g.end(), frames.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return AdjointTrajectory(grid, trajectory.dt(), a, std::move(frames));
}

}  // namespace kinv
