#include "kinv/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "kinv/error.hpp"
#include "kinv/io.hpp"

namespace kinv {

namespace {

double euclidean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

}  // namespace

void OptimizerConfig::validate() const {
  if (!(alpha_min > 0.0 && alpha_min <= alpha && alpha <= alpha_max)) {
    throw InvalidArgument("optimizer: require 0 < alpha_min <= alpha <= alpha_max");
  }
  if (n_max < 1) throw InvalidArgument("optimizer: n_max must be at least 1");
}

InteractionKernel init_kernel(const KernelBasis& basis, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> coeffs(basis.size());
  for (double& c : coeffs) {
    do {
      c = unit(rng);
    } while (c <= 0.0);
  }
  return InteractionKernel(basis, std::move(coeffs));
}

StepResult descent_step(const OptimizerState& state, const KernelGradient& gradient,
                        const OptimizerConfig& config) {
  const auto& theta = state.iterate.coeffs();
  if (gradient.coeffs.size() != theta.size()) {
    throw InvalidArgument("descent_step: gradient length does not match the iterate");
  }
  std::vector<double> r = gradient.coeffs;
  const double norm = euclidean(r);
  if (norm == 0.0) {
    return {state, StepBranch::Converged, 0.0, std::move(r)};
  }

  double alpha = state.alpha;
  const double step = std::max(alpha, alpha / norm);
  std::vector<double> tentative(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) tentative[i] = theta[i] - step * r[i];

  OptimizerState next{state.iterate, alpha, state.history};
  if (min_of(tentative) >= 0.0) {
    alpha *= 2.0;
    if (config.cap_doubling) alpha = std::min(alpha, config.alpha_max);
    next.alpha = alpha;
    next.iterate = InteractionKernel(state.iterate.basis(), std::move(tentative));
    return {std::move(next), StepBranch::Doubled, step, std::move(r)};
  }

  alpha = std::max(alpha / 2.0, config.alpha_min);
  std::vector<double> clamped(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (tentative[i] < 0.0) r[i] = 0.0;
    clamped[i] = std::max(tentative[i], 0.0);
  }
  next.alpha = alpha;
  const double masked_norm = euclidean(r);
  // With every direction masked the retry reproduces Theta_n, which is feasible.
  const double retry_step =
      masked_norm > 0.0 ? std::min(config.alpha_max, std::max(alpha, alpha / masked_norm))
                        : config.alpha_max;
  std::vector<double> retry(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) retry[i] = theta[i] - retry_step * r[i];
  if (min_of(retry) >= 0.0) {
    next.iterate = InteractionKernel(state.iterate.basis(), std::move(retry));
    return {std::move(next), StepBranch::RetryAccepted, retry_step, std::move(r)};
  }
  next.iterate = InteractionKernel(state.iterate.basis(), std::move(clamped));
  return {std::move(next), StepBranch::RetryRejected, step, std::move(r)};
}

double relative_error(const InteractionKernel& estimate, const InteractionKernel& truth) {
  const auto& a = estimate.coeffs();
  const auto& b = truth.coeffs();
  if (a.size() != b.size()) throw InvalidArgument("relative_error: kernel bases differ");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  if (den == 0.0) throw InvalidArgument("relative_error: reference kernel is zero");
  return std::sqrt(num / den);
}

OptimizerState run_inference(const MeasurementDataset& dataset, const OptimizerConfig& config,
                             const SolverConfig& solver,
                             const std::optional<InteractionKernel>& truth,
                             std::optional<InteractionKernel> initial,
                             const ProgressCallback& progress) {
  config.validate();
  if (dataset.records.empty()) throw InvalidArgument("run_inference: dataset has no records");
  if (!initial) {
    if (!truth && !dataset.generator.kernel) {
      throw InvalidArgument("run_inference: need an initial kernel or a basis to draw one on");
    }
    const auto& basis = truth ? truth->basis() : dataset.generator.kernel->basis();
    initial = init_kernel(basis, config.seed);
  }

  OptimizerState state{*initial, config.alpha, {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int n = 0;; ++n) {
    const auto lg = loss_and_gradient(state.iterate, dataset, solver, config.strategy);
    HistoryRow row{n, lg.loss, 0.0, lg.gradient.norm(),
                   truth ? relative_error(state.iterate, *truth) : nan};
    if (n == config.n_max) {
      state.history.push_back(row);
      if (progress) progress(row);
      break;
    }
    auto result = descent_step(state, lg.gradient, config);
    row.step = result.applied_step;
    result.state.history.push_back(row);
    if (progress) progress(row);
    state = std::move(result.state);
    if (result.branch == StepBranch::Converged) break;
  }
  return state;
}

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& history) {
  out << "n,loss,alpha,grad_norm,rel_error\n";
  for (const auto& row : history) {
    out << row.n << ',' << format_real(row.loss) << ',' << format_real(row.step) << ','
        << format_real(row.grad_norm) << ',' << format_real(row.rel_error) << '\n';
  }
}

std::vector<HistoryRow> read_history_csv(std::istream& in) {
  const auto table = read_csv(in, {"n", "loss", "alpha", "grad_norm", "rel_error"});
  std::vector<HistoryRow> rows;
  rows.reserve(table.size());
  for (const auto& cells : table) {
    rows.push_back({static_cast<int>(cells[0]), cells[1], cells[2], cells[3], cells[4]});
  }
  return rows;
}

}  // namespace kinv
