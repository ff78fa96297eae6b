#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "kinv/density.hpp"
#include "kinv/forward.hpp"
#include "kinv/kernel.hpp"
#include "kinv/measurement.hpp"

namespace kinv {

/// Shortest decimal text that parses back to the same double; "nan" for NaN.
std::string format_real(double value);
double parse_real(const std::string& text);

/// Numeric CSV with a fixed header row. Throws IoError on header mismatch,
/// ragged rows, or unparsable cells.
std::vector<std::vector<double>> read_csv(std::istream& in,
                                          const std::vector<std::string>& headers);

nlohmann::json grid_to_json(const OpinionGrid& grid);
OpinionGrid grid_from_json(const nlohmann::json& j);

nlohmann::json spec_to_json(const DensitySpec& spec);
DensitySpec spec_from_json(const nlohmann::json& j);

nlohmann::json kernel_to_json(const InteractionKernel& kernel);
InteractionKernel kernel_from_json(const nlohmann::json& j);

/// CSV `r,theta` over the basis nodes.
void write_kernel_csv(std::ostream& out, const InteractionKernel& kernel);
InteractionKernel read_kernel_csv(std::istream& in);

/// JSON Lines: a header object describing the dataset, then one object per record.
void write_dataset(std::ostream& out, const MeasurementDataset& dataset);
MeasurementDataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const MeasurementDataset& dataset);
MeasurementDataset load_dataset(const std::filesystem::path& path);

}  // namespace kinv
