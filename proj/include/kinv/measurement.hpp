#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kinv/density.hpp"
#include "kinv/forward.hpp"
#include "kinv/kernel.hpp"

namespace kinv {

/// Cumulative mass of f at or below threshold a, with fractional weighting of
/// the cell that straddles a.
double measure_M(const OpinionGrid& grid, std::span<const double> f, double a);
double measure_M(const OpinionDensity& f, double a);
double measure_M(const ForwardTrajectory& trajectory, double a, double t);

struct MeasurementRecord {
  std::size_t f0_id = 0;
  double a = 0.0;
  double t = 0.0;
  double value = 0.0;

  friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

/// Provenance of a synthetic dataset.
struct GeneratorInfo {
  std::optional<InteractionKernel> kernel;
  std::optional<SolverConfig> solver;
  double noise_amplitude = 0.0;
  std::uint64_t noise_seed = 0;
};

struct MeasurementDataset {
  std::vector<DensitySpec> specs;
  std::vector<double> thresholds;
  std::vector<double> times;
  std::vector<MeasurementRecord> records;
  GeneratorInfo generator;

  /// Throws InvalidArgument unless every record key is unique, drawn from the
  /// declared sets, and the record count is |A| |T| |F|.
  void validate() const;
};

struct NoiseConfig {
  double amplitude = 0.0;
  std::uint64_t seed = 0;
};

/// One forward solve per spec under `true_kernel`; fills every (f0, a, t) record.
MeasurementDataset generate_dataset(const InteractionKernel& true_kernel,
                                    const std::vector<DensitySpec>& specs,
                                    const std::vector<double>& thresholds,
                                    const std::vector<double>& times, const SolverConfig& solver,
                                    const NoiseConfig& noise = {});

/// Mean of 1/2 (M_theta - M*)^2 over all records, with fresh forward solves.
double loss(const InteractionKernel& kernel, const MeasurementDataset& dataset,
            const SolverConfig& solver);

/// Records of one initial density grouped by threshold, in dataset order.
struct RecordGroup {
  std::size_t f0_id = 0;
  double a = 0.0;
  std::vector<std::size_t> record_indices;
};

std::vector<RecordGroup> group_records(const MeasurementDataset& dataset);

/// Largest measurement time of the dataset (the forward horizon).
double horizon(const MeasurementDataset& dataset);

}  // namespace kinv
