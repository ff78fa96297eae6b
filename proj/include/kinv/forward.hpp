#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "kinv/density.hpp"
#include "kinv/grid.hpp"
#include "kinv/kernel.hpp"

namespace kinv {

/// Grid resolution shared by forward, adjoint, and measurement computations.
struct SolverConfig {
  OpinionGrid grid{-1.0, 1.0, 0.02};
  double dt_sub = 0.01;
};

/// Discrete binary-compromise collision operator on a uniform grid.
///
/// Every ordered node pair (j, k) carries flux theta_bar_{|j-k|} f_j f_k dx^2,
/// depositing +2 at the midpoint (split half/half between the two adjacent
/// nodes when j + k is odd) and -1 at each of x_j and x_k. Mass and first
/// moment are conserved exactly in exact arithmetic.
class CollisionOperator {
 public:
  CollisionOperator(const OpinionGrid& grid, const InteractionKernel& kernel);
  CollisionOperator(const OpinionGrid& grid, std::vector<double> pair_weights);

  const OpinionGrid& grid() const { return grid_; }
  std::span<const double> pair_weights() const { return theta_; }

  /// df/dt for density f.
  void rate(std::span<const double> f, std::span<double> out) const;

  /// Derivative of rate at f in direction h.
  void linearized(std::span<const double> f, std::span<const double> h,
                  std::span<double> out) const;

  /// Transpose of `linearized` with respect to the dx-weighted inner product:
  /// L*[g](x) = sum_y 2 f(y) theta(x - y) [2 g((x+y)/2) - g(x) - g(y)] dx.
  void adjoint(std::span<const double> g, std::span<const double> f,
               std::span<double> out) const;

 private:
  void bilinear(std::span<const double> u, std::span<const double> v,
                std::span<double> out) const;
  static void deposit_midpoints(std::span<const double> q, std::size_t d, std::span<double> out);

  OpinionGrid grid_;
  std::vector<double> theta_;
  std::size_t reach_ = 0;
};

std::vector<double> collision_rate(const OpinionDensity& f, const InteractionKernel& kernel);

/// One classical fourth-order Runge-Kutta step of df/dt = collision_rate(f).
///
/// Values in (-1e-8, 0) are clamped to zero and the frame renormalized; anything
/// below -1e-8 raises InstabilityError.
OpinionDensity step(const OpinionDensity& f, const InteractionKernel& kernel, double dt_sub);

/// Opinion densities at every substep t_i = i*dt of a forward solve, together
/// with df/dt at each stored frame.
class ForwardTrajectory {
 public:
  ForwardTrajectory(OpinionGrid grid, double dt, std::vector<double> frames,
                    std::vector<double> rates);

  const OpinionGrid& grid() const { return grid_; }
  double dt() const { return dt_; }
  std::size_t frame_count() const { return count_; }
  double time(std::size_t i) const { return static_cast<double>(i) * dt_; }
  double final_time() const { return time(count_ - 1); }

  std::span<const double> frame(std::size_t i) const;
  std::span<const double> rate(std::size_t i) const;
  OpinionDensity density(std::size_t i) const;

  /// Cubic Hermite reconstruction of f at time(i) + dt/2.
  std::vector<double> midpoint(std::size_t i) const;

  /// Index of the substep at time t; InvalidArgument when t is not a substep time.
  std::size_t index_of(double t) const;

 private:
  OpinionGrid grid_;
  double dt_;
  std::size_t count_;
  std::vector<double> frames_;
  std::vector<double> rates_;
};

/// Number of substeps in [0, t_end]; InvalidArgument unless t_end/dt_sub is an integer.
std::size_t substep_count(double t_end, double dt_sub);

ForwardTrajectory solve_forward(const OpinionDensity& f0, const InteractionKernel& kernel,
                                double t_end, double dt_sub);

/// CSV with header `t,x,f`, one row per node per exported frame.
void write_trajectory_csv(std::ostream& out, const ForwardTrajectory& trajectory,
                          std::size_t frame_stride = 1);

}  // namespace kinv
