#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kinv/density.hpp"
#include "kinv/forward.hpp"
#include "kinv/kernel.hpp"
#include "kinv/measurement.hpp"
#include "kinv/optimizer.hpp"

namespace kinv {

/// Ground-truth kernel of a synthetic experiment: either the nodal
/// interpolation of 1_{|r| < bound}, or explicit coefficients.
struct TrueKernelSpec {
  std::optional<double> confidence_bound;
  std::vector<double> coeffs;

  InteractionKernel build(const KernelBasis& basis) const;
};

/// Measurement times given either explicitly or as step * {0..count-1}.
struct TimeSet {
  std::optional<double> step;
  std::size_t count = 0;
  std::vector<double> explicit_times;

  std::vector<double> expand() const;
};

struct ExperimentConfig {
  std::string name;
  OpinionGrid grid{-1.0, 1.0, 0.02};
  double kernel_half_width = 1.0;
  double dr = 0.19;
  double dt_sub = 0.01;
  double t_end = 20.0;

  std::vector<double> thresholds;
  TimeSet times;
  std::vector<DensitySpec> specs;
  TrueKernelSpec true_kernel;
  /// Finer resolutions for data generation; the inference resolution when unset.
  std::optional<double> generation_dx;
  std::optional<double> generation_dt;
  NoiseConfig noise;

  OptimizerConfig optimizer;

  std::string dataset_path = "dataset.jsonl";
  std::string output_dir = "out";

  KernelBasis basis() const { return KernelBasis(kernel_half_width, dr); }
  SolverConfig solver() const { return SolverConfig{grid, dt_sub}; }
  SolverConfig generation_solver() const;
  InteractionKernel truth() const { return true_kernel.build(basis()); }

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
/// Schema-checked parse; unknown keys and wrong types raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Built-in experiments: fig1-F1..fig1-F4 (growing family of uniform initial
/// densities) and fig2-A1..fig2-A4 (growing threshold set). ConfigError for
/// unknown names.
ExperimentConfig preset(std::string_view name);

}  // namespace kinv
