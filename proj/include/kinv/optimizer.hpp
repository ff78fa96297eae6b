#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "kinv/gradient.hpp"
#include "kinv/kernel.hpp"
#include "kinv/measurement.hpp"

namespace kinv {

struct OptimizerConfig {
  double alpha = 0.01;
  double alpha_min = 0.003;
  double alpha_max = 0.05;
  int n_max = 1000;
  std::uint64_t seed = 1;
  /// Cap the doubled step size at alpha_max after a feasible step.
  bool cap_doubling = true;
  AdjointStrategy strategy = AdjointStrategy::Accumulated;

  void validate() const;
};

struct HistoryRow {
  int n = 0;
  double loss = 0.0;
  /// Multiplier applied to the descent direction in this iteration.
  double step = 0.0;
  double grad_norm = 0.0;
  /// ||Theta_n - Theta*|| / ||Theta*||; NaN when no truth was supplied.
  double rel_error = 0.0;

  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

struct OptimizerState {
  InteractionKernel iterate;
  double alpha;
  std::vector<HistoryRow> history;
};

enum class StepBranch {
  /// Tentative step feasible; alpha doubled.
  Doubled,
  /// Tentative step infeasible; the retry with the masked direction is feasible.
  RetryAccepted,
  /// Retry still infeasible; the clamped tentative iterate stands.
  RetryRejected,
  /// Zero gradient; iterate unchanged.
  Converged,
};

struct StepResult {
  OptimizerState state;
  StepBranch branch;
  /// Step multiplier that produced the new iterate (alpha_n or alpha*_n).
  double applied_step = 0.0;
  /// Descent direction after masking.
  std::vector<double> direction;
};

/// Coefficients drawn i.i.d. uniform on (0, 1) from a seeded generator.
InteractionKernel init_kernel(const KernelBasis& basis, std::uint64_t seed);

/// One pass of the adaptive projected step: normalized tentative step, double
/// alpha when feasible, otherwise halve alpha, mask the offending directions,
/// clamp, and retry with the renormalized (alpha_max-capped) step.
StepResult descent_step(const OptimizerState& state, const KernelGradient& gradient,
                        const OptimizerConfig& config);

double relative_error(const InteractionKernel& estimate, const InteractionKernel& truth);

using ProgressCallback = std::function<void(const HistoryRow&)>;

/// Alternates loss_and_gradient and descent_step for n_max iterations (or until
/// the gradient vanishes). History rows 0..n_max hold the loss of each iterate.
OptimizerState run_inference(const MeasurementDataset& dataset, const OptimizerConfig& config,
                             const SolverConfig& solver,
                             const std::optional<InteractionKernel>& truth = std::nullopt,
                             std::optional<InteractionKernel> initial = std::nullopt,
                             const ProgressCallback& progress = {});

/// CSV `n,loss,alpha,grad_norm,rel_error`.
void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& history);
std::vector<HistoryRow> read_history_csv(std::istream& in);

}  // namespace kinv
