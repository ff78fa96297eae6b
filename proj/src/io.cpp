#include "kinv/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "kinv/error.hpp"

namespace kinv {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

template <typename T>
T field(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) {
    throw IoError(std::string(where) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string(where) + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

double parse_real(const std::string& text) {
  if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [end, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || end != last) throw IoError("cannot parse number '" + text + "'");
  return value;
}

std::vector<std::vector<double>> read_csv(std::istream& in,
                                          const std::vector<std::string>& headers) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV input");
  strip_cr(line);
  if (split(line) != headers) throw IoError("unexpected CSV header '" + line + "'");
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != headers.size()) {
      throw IoError("CSV line " + std::to_string(line_no) + " has " +
                    std::to_string(cells.size()) + " fields, expected " +
                    std::to_string(headers.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_real(c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json grid_to_json(const OpinionGrid& grid) {
  return json{{"x_min", grid.x_min()}, {"x_max", grid.x_max()}, {"dx", grid.dx()}};
}

OpinionGrid grid_from_json(const json& j) {
  return OpinionGrid(field<double>(j, "x_min", "grid"), field<double>(j, "x_max", "grid"),
                     field<double>(j, "dx", "grid"));
}

json spec_to_json(const DensitySpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return {{"type", "uniform"}, {"half_width", s.half_width}, {"center", s.center}};
        } else if constexpr (std::is_same_v<T, IndicatorPair>) {
          return {{"type", "indicator_pair"}, {"a0", s.a0}, {"c", s.c}, {"w", s.w}};
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return {{"type", "point_mass"}, {"x0", s.x0}};
        } else {
          return {{"type", "tabulated"}, {"grid", grid_to_json(s.grid)}, {"values", s.values}};
        }
      },
      spec);
}

DensitySpec spec_from_json(const json& j) {
  const auto type = field<std::string>(j, "type", "density");
  if (type == "uniform") {
    return Uniform{field<double>(j, "half_width", "uniform"),
                   j.contains("center") ? field<double>(j, "center", "uniform") : 0.0};
  }
  if (type == "indicator_pair") {
    return IndicatorPair{field<double>(j, "a0", "indicator_pair"),
                         field<double>(j, "c", "indicator_pair"),
                         field<double>(j, "w", "indicator_pair")};
  }
  if (type == "point_mass") return PointMass{field<double>(j, "x0", "point_mass")};
  if (type == "tabulated") {
    return Tabulated{grid_from_json(field<json>(j, "grid", "tabulated")),
                     field<std::vector<double>>(j, "values", "tabulated")};
  }
  throw IoError("unknown density type '" + type + "'");
}

json kernel_to_json(const InteractionKernel& kernel) {
  return json{{"dr", kernel.basis().dr()},
              {"half_width", kernel.basis().half_width()},
              {"coeffs", kernel.coeffs()}};
}

InteractionKernel kernel_from_json(const json& j) {
  KernelBasis basis(field<double>(j, "half_width", "kernel"), field<double>(j, "dr", "kernel"));
  return InteractionKernel(basis, field<std::vector<double>>(j, "coeffs", "kernel"));
}

void write_kernel_csv(std::ostream& out, const InteractionKernel& kernel) {
  out << "r,theta\n";
  for (std::size_t m = 0; m < kernel.basis().size(); ++m) {
    out << format_real(kernel.basis().node(m)) << ',' << format_real(kernel.coeffs()[m]) << '\n';
  }
}

InteractionKernel read_kernel_csv(std::istream& in) {
  const auto rows = read_csv(in, {"r", "theta"});
  if (rows.size() < 2) throw IoError("kernel CSV needs at least two nodes");
  const double dr = rows[1][0];
  KernelBasis basis(rows.back()[0], dr);
  if (basis.size() != rows.size()) throw IoError("kernel CSV nodes are not evenly spaced");
  std::vector<double> coeffs;
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (std::abs(rows[m][0] - basis.node(m)) > 1e-9 * dr) {
      throw IoError("kernel CSV nodes are not evenly spaced");
    }
    coeffs.push_back(rows[m][1]);
  }
  return InteractionKernel(basis, std::move(coeffs));
}

void write_dataset(std::ostream& out, const MeasurementDataset& dataset) {
  json specs = json::array();
  for (const auto& s : dataset.specs) specs.push_back(spec_to_json(s));
  json generator{{"noise_amplitude", dataset.generator.noise_amplitude},
                 {"noise_seed", dataset.generator.noise_seed}};
  if (dataset.generator.kernel) generator["kernel"] = kernel_to_json(*dataset.generator.kernel);
  if (dataset.generator.solver) {
    generator["solver"] = {{"grid", grid_to_json(dataset.generator.solver->grid)},
                           {"dt_sub", dataset.generator.solver->dt_sub}};
  }
  json header{{"format", "kinv-dataset"},
              {"version", 1},
              {"specs", specs},
              {"thresholds", dataset.thresholds},
              {"times", dataset.times},
              {"record_count", dataset.records.size()},
              {"generator", generator}};
  out << header.dump() << '\n';
  for (const auto& r : dataset.records) {
    out << json{{"f0_id", r.f0_id}, {"a", r.a}, {"t", r.t}, {"value", r.value}}.dump() << '\n';
  }
}

MeasurementDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed dataset header: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != "kinv-dataset") {
    throw IoError("not a kinv dataset (missing format tag)");
  }
  MeasurementDataset data;
  for (const auto& s : field<json>(header, "specs", "dataset")) data.specs.push_back(spec_from_json(s));
  data.thresholds = field<std::vector<double>>(header, "thresholds", "dataset");
  data.times = field<std::vector<double>>(header, "times", "dataset");
  const auto gen = field<json>(header, "generator", "dataset");
  data.generator.noise_amplitude = gen.value("noise_amplitude", 0.0);
  data.generator.noise_seed = gen.value("noise_seed", std::uint64_t{0});
  if (gen.contains("kernel")) data.generator.kernel = kernel_from_json(gen["kernel"]);
  if (gen.contains("solver")) {
    data.generator.solver = SolverConfig{grid_from_json(field<json>(gen["solver"], "grid", "solver")),
                                         field<double>(gen["solver"], "dt_sub", "solver")};
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError("malformed record on line " + std::to_string(line_no) + ": " + e.what());
    }
    data.records.push_back({field<std::size_t>(j, "f0_id", "record"), field<double>(j, "a", "record"),
                            field<double>(j, "t", "record"), field<double>(j, "value", "record")});
  }
  const auto expected = field<std::size_t>(header, "record_count", "dataset");
  if (expected != data.records.size()) {
    throw IoError("dataset declares " + std::to_string(expected) + " records but holds " +
                  std::to_string(data.records.size()));
  }
  try {
    data.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("invalid dataset: ") + e.what());
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const MeasurementDataset& dataset) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_dataset(out, dataset);
  if (!out) throw IoError("failed writing " + path.string());
}

MeasurementDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_dataset(in);
}

}  // namespace kinv
