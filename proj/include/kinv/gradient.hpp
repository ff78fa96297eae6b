#pragma once

#include <functional>
#include <span>
#include <vector>

#include "kinv/adjoint.hpp"
#include "kinv/forward.hpp"
#include "kinv/kernel.hpp"
#include "kinv/measurement.hpp"

namespace kinv {

struct RecordKey {
  std::size_t f0_id = 0;
  double a = 0.0;
  double t = 0.0;
};

/// Derivative of a scalar with respect to the kernel coefficients.
struct KernelGradient {
  KernelBasis basis;
  std::vector<double> coeffs;
  std::vector<RecordKey> provenance;

  double norm() const;
};

/// Frechet derivative of M(a, t; f0) at opinion difference r:
///   int_0^t int 2 f(r+y) f(y) [2 g(r/2+y) - g(r+y) - g(y)] dy dtau,
/// with f and g linearly interpolated at off-grid arguments, node sums in y,
/// and the trapezoid rule in tau. The factor 2 folds the +r and -r
/// contributions, so the full-line density of the derivative is half of this.
double frechet_dM(const ForwardTrajectory& trajectory, const AdjointTrajectory& adjoint, double r,
                  const KernelBasis& basis);

/// Coefficient m receives the integral over [-B, B] of the piecewise-constant
/// reconstruction of `pointwise` (sampled at r = n*step, cells of width step)
/// against the mirrored hat phi_m.
KernelGradient project_gradient(const std::function<double(double)>& pointwise,
                                const KernelBasis& basis, double step);

/// Pair sensitivity I_n = sum_k f_{k+n} f_k [2 g(x_k + n dx/2) - g_{k+n} - g_k] dx
/// of one frame, for n = 0 .. out.size()-1.
void pair_sensitivity(std::span<const double> f, std::span<const double> g, double dx,
                      std::span<double> out);

enum class AdjointStrategy {
  /// One backward solve per (f0, a): residual-weighted final data is injected
  /// at every measurement time during a single sweep from max(T).
  Accumulated,
  /// One backward solve per record, each starting at its own measurement time.
  PerRecord,
};

struct LossGradient {
  double loss = 0.0;
  KernelGradient gradient;
  std::size_t forward_solves = 0;
  std::size_t adjoint_solves = 0;
};

LossGradient loss_and_gradient(const InteractionKernel& kernel, const MeasurementDataset& dataset,
                               const SolverConfig& solver,
                               AdjointStrategy strategy = AdjointStrategy::Accumulated);

KernelGradient loss_gradient(const InteractionKernel& kernel, const MeasurementDataset& dataset,
                             const SolverConfig& solver,
                             AdjointStrategy strategy = AdjointStrategy::Accumulated);

/// Central differences of the full loss in each coefficient, with step
/// `relative_step * max(1, |Theta_m|)`. Costs 2 (basis size) loss evaluations.
std::vector<double> finite_difference_gradient(const InteractionKernel& kernel,
                                               const MeasurementDataset& dataset,
                                               const SolverConfig& solver,
                                               double relative_step = 1e-4);

/// ||a - b|| / ||b|| in the Euclidean norm.
double relative_l2_error(std::span<const double> a, std::span<const double> b);

/// CSV `r,grad` with one row per basis node.
void write_gradient_csv(std::ostream& out, const KernelGradient& gradient);

}  // namespace kinv
