#pragma once

#include <span>
#include <vector>

#include "kinv/density.hpp"
#include "kinv/forward.hpp"
#include "kinv/kernel.hpp"

namespace kinv {

/// Discretized indicator 1_{(-inf, a]}: node i carries the fraction of its cell
/// lying at or below a. Used both as the adjoint final condition and as the
/// quadrature weights of measure_M, which makes the two dual.
std::vector<double> threshold_weights(const OpinionGrid& grid, double a);

/// L*_theta[g] for a single frame f; g must live on f's grid.
std::vector<double> adjoint_rate(std::span<const double> g, const OpinionDensity& f,
                                 const InteractionKernel& kernel);

/// Adjoint variable g(., tau) on tau in [0, t], stored at every substep.
class AdjointTrajectory {
 public:
  AdjointTrajectory(OpinionGrid grid, double dt, double threshold, std::vector<double> frames);

  const OpinionGrid& grid() const { return grid_; }
  double dt() const { return dt_; }
  double threshold() const { return threshold_; }
  std::size_t frame_count() const { return count_; }
  double final_time() const { return static_cast<double>(count_ - 1) * dt_; }
  std::span<const double> frame(std::size_t i) const;

 private:
  OpinionGrid grid_;
  double dt_;
  double threshold_;
  std::size_t count_;
  std::vector<double> frames_;
};

/// One backward RK4 step of dg/dtau = -L*[g] from tau_{i+1} to tau_i.
///
/// `f_hi`, `f_mid`, `f_lo` are the forward frames at tau_{i+1}, the half step,
/// and tau_i.
void adjoint_step(const CollisionOperator& op, std::vector<double>& g,
                  std::span<const double> f_hi, std::span<const double> f_mid,
                  std::span<const double> f_lo, double dt);

/// Integrates the adjoint problem backward from g(., t) = 1_{(-inf, a]} to tau = 0.
AdjointTrajectory solve_adjoint(double a, const ForwardTrajectory& trajectory,
                                const InteractionKernel& kernel, double t);

}  // namespace kinv
