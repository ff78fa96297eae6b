#include "kinv/measurement.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "kinv/adjoint.hpp"
#include "kinv/error.hpp"

namespace kinv {

double measure_M(const OpinionGrid& grid, std::span<const double> f, double a) {
  if (f.size() != grid.size()) throw InvalidArgument("measure_M: density does not match grid");
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double lo = grid.cell_lo(i);
    if (a <= lo) break;
    const double hi = grid.cell_hi(i);
    const double w = a >= hi ? 1.0 : (a - lo) / (hi - lo);
    total += w * f[i];
  }
  return total * grid.dx();
}

double measure_M(const OpinionDensity& f, double a) { return measure_M(f.grid(), f.values(), a); }

double measure_M(const ForwardTrajectory& trajectory, double a, double t) {
  return measure_M(trajectory.grid(), trajectory.frame(trajectory.index_of(t)), a);
}

void MeasurementDataset::validate() const {
  if (specs.empty() || thresholds.empty() || times.empty()) {
    throw InvalidArgument("dataset: specs, thresholds, and times must be nonempty");
  }
  std::set<std::tuple<std::size_t, double, double>> keys;
  const std::set<double> a_set(thresholds.begin(), thresholds.end());
  const std::set<double> t_set(times.begin(), times.end());
  for (const auto& r : records) {
    if (r.f0_id >= specs.size()) {
      std::ostringstream msg;
      msg << "dataset: record refers to f0_id " << r.f0_id << " but only " << specs.size()
          << " specs exist";
      throw InvalidArgument(msg.str());
    }
    if (!a_set.contains(r.a)) throw InvalidArgument("dataset: record threshold not in threshold set");
    if (!t_set.contains(r.t)) throw InvalidArgument("dataset: record time not in time set");
    if (!(r.value >= 0.0 && r.value <= 1.0)) {
      throw InvalidArgument("dataset: record value outside [0, 1]");
    }
    if (!keys.emplace(r.f0_id, r.a, r.t).second) {
      throw InvalidArgument("dataset: duplicate (f0_id, a, t) record");
    }
  }
  if (records.size() != specs.size() * a_set.size() * t_set.size() ||
      a_set.size() != thresholds.size() || t_set.size() != times.size()) {
    throw InvalidArgument("dataset: record count differs from |A| |T| |F|");
  }
}

double horizon(const MeasurementDataset& dataset) {
  if (dataset.times.empty()) throw InvalidArgument("dataset has no measurement times");
  return *std::max_element(dataset.times.begin(), dataset.times.end());
}

MeasurementDataset generate_dataset(const InteractionKernel& true_kernel,
                                    const std::vector<DensitySpec>& specs,
                                    const std::vector<double>& thresholds,
                                    const std::vector<double>& times, const SolverConfig& solver,
                                    const NoiseConfig& noise) {
  MeasurementDataset ds;
  ds.specs = specs;
  ds.thresholds = thresholds;
  ds.times = times;
  ds.generator.kernel = true_kernel;
  ds.generator.solver = solver;
  ds.generator.noise_amplitude = noise.amplitude;
  ds.generator.noise_seed = noise.seed;
  const double t_end = horizon(ds);

  std::mt19937_64 rng(noise.seed);
  std::uniform_real_distribution<double> jitter(-noise.amplitude, noise.amplitude);

  for (std::size_t id = 0; id < specs.size(); ++id) {
    const auto f0 = realize_density(specs[id], solver.grid);
    const auto traj = solve_forward(f0, true_kernel, t_end, solver.dt_sub);
    for (double a : thresholds) {
      for (double t : times) {
        double value = measure_M(traj, a, t);
        if (noise.amplitude > 0.0) value = std::clamp(value + jitter(rng), 0.0, 1.0);
        ds.records.push_back({id, a, t, std::clamp(value, 0.0, 1.0)});
      }
    }
  }
  return ds;
}

double loss(const InteractionKernel& kernel, const MeasurementDataset& dataset,
            const SolverConfig& solver) {
  if (dataset.records.empty()) throw InvalidArgument("loss: dataset has no records");
  const double t_end = horizon(dataset);
  std::map<std::size_t, ForwardTrajectory> solves;
  double total = 0.0;
  for (const auto& r : dataset.records) {
    auto it = solves.find(r.f0_id);
    if (it == solves.end()) {
      const auto f0 = realize_density(dataset.specs.at(r.f0_id), solver.grid);
      it = solves.emplace(r.f0_id, solve_forward(f0, kernel, t_end, solver.dt_sub)).first;
    }
    const double residual = measure_M(it->second, r.a, r.t) - r.value;
    total += 0.5 * residual * residual;
  }
  return total / static_cast<double>(dataset.records.size());
}

std::vector<RecordGroup> group_records(const MeasurementDataset& dataset) {
  std::vector<RecordGroup> groups;
  std::map<std::pair<std::size_t, double>, std::size_t> lookup;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& r = dataset.records[i];
    auto [it, inserted] = lookup.try_emplace({r.f0_id, r.a}, groups.size());
    if (inserted) groups.push_back({r.f0_id, r.a, {}});
    groups[it->second].record_indices.push_back(i);
  }
  return groups;
}

}  // namespace kinv
