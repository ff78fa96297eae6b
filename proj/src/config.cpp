#include "kinv/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "kinv/error.hpp"
#include "kinv/io.hpp"

namespace kinv {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  require(j.is_object(), where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    require(allowed.count(key) > 0, "unknown key '" + key + "' in " + where);
  }
}

const json& member(const json& j, const std::string& where, const char* key) {
  require(j.contains(key), where + ": missing required key '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where, const char* key) {
  const auto& v = member(j, where, key);
  require(v.is_number(), where + "." + key + " must be a number");
  return v.get<double>();
}

std::uint64_t unsigned_int(const json& v, const std::string& what) {
  require(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0),
          what + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::vector<double> numbers(const json& v, const std::string& what) {
  require(v.is_array(), what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    require(x.is_number(), what + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::string strategy_name(AdjointStrategy s) {
  return s == AdjointStrategy::PerRecord ? "per_record" : "accumulated";
}

}  // namespace

InteractionKernel TrueKernelSpec::build(const KernelBasis& basis) const {
  if (confidence_bound) return InteractionKernel::confidence_bound(basis, *confidence_bound);
  return InteractionKernel(basis, coeffs);
}

std::vector<double> TimeSet::expand() const {
  if (!step) return explicit_times;
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = *step * static_cast<double>(k);
  return out;
}

SolverConfig ExperimentConfig::generation_solver() const {
  return SolverConfig{OpinionGrid(grid.x_min(), grid.x_max(), generation_dx.value_or(grid.dx())),
                      generation_dt.value_or(dt_sub)};
}

void ExperimentConfig::validate() const {
  try {
    const auto b = basis();
    truth();
    generation_solver();
    substep_count(t_end, dt_sub);
    (void)b;
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  require(t_end > 0.0, "solver.t_end must be positive");
  require(!thresholds.empty(), "dataset.thresholds must not be empty");
  require(!specs.empty(), "dataset.initial_densities must not be empty");
  for (double a : thresholds) {
    require(a > grid.x_min() && a < grid.x_max(),
            "threshold " + format_real(a) + " lies outside the opinion grid");
  }
  const auto ts = times.expand();
  require(!ts.empty(), "dataset.times must not be empty");
  for (double t : ts) {
    require(t >= 0.0 && t <= t_end * (1.0 + 1e-12),
            "time " + format_real(t) + " lies outside [0, t_end]");
  }
  const auto gen = generation_solver();
  for (const auto& spec : specs) {
    try {
      realize_density(spec, grid);
      realize_density(spec, gen.grid);
    } catch (const Error& e) {
      throw ConfigError(std::string("initial density ") + describe(spec) + ": " + e.what());
    }
  }
  require(noise.amplitude >= 0.0, "dataset.noise.amplitude must be nonnegative");
  try {
    optimizer.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

json config_to_json(const ExperimentConfig& c) {
  json times;
  if (c.times.step) {
    times = {{"step", *c.times.step}, {"count", c.times.count}};
  } else {
    times = c.times.explicit_times;
  }
  json truth;
  if (c.true_kernel.confidence_bound) {
    truth = {{"type", "confidence_bound"}, {"bound", *c.true_kernel.confidence_bound}};
  } else {
    truth = {{"type", "coefficients"}, {"coeffs", c.true_kernel.coeffs}};
  }
  json specs = json::array();
  for (const auto& s : c.specs) specs.push_back(spec_to_json(s));
  json generation = json::object();
  if (c.generation_dx) generation["dx"] = *c.generation_dx;
  if (c.generation_dt) generation["dt_sub"] = *c.generation_dt;

  return json{
      {"name", c.name},
      {"grid", grid_to_json(c.grid)},
      {"kernel_basis", {{"half_width", c.kernel_half_width}, {"dr", c.dr}}},
      {"solver", {{"dt_sub", c.dt_sub}, {"t_end", c.t_end}}},
      {"dataset",
       {{"thresholds", c.thresholds},
        {"times", times},
        {"initial_densities", specs},
        {"true_kernel", truth},
        {"generation", generation},
        {"noise", {{"amplitude", c.noise.amplitude}, {"seed", c.noise.seed}}}}},
      {"optimizer",
       {{"alpha", c.optimizer.alpha},
        {"alpha_min", c.optimizer.alpha_min},
        {"alpha_max", c.optimizer.alpha_max},
        {"n_max", c.optimizer.n_max},
        {"seed", c.optimizer.seed},
        {"cap_doubling", c.optimizer.cap_doubling},
        {"adjoint_strategy", strategy_name(c.optimizer.strategy)}}},
      {"paths", {{"dataset", c.dataset_path}, {"output_dir", c.output_dir}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, "config", {"name", "grid", "kernel_basis", "solver", "dataset", "optimizer", "paths"});
  ExperimentConfig c;
  if (j.contains("name")) {
    require(j["name"].is_string(), "name must be a string");
    c.name = j["name"].get<std::string>();
  }

  const auto& g = member(j, "config", "grid");
  check_keys(g, "grid", {"x_min", "x_max", "dx"});
  try {
    c.grid = OpinionGrid(number(g, "grid", "x_min"), number(g, "grid", "x_max"),
                         number(g, "grid", "dx"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }

  const auto& kb = member(j, "config", "kernel_basis");
  check_keys(kb, "kernel_basis", {"half_width", "dr"});
  c.kernel_half_width = number(kb, "kernel_basis", "half_width");
  c.dr = number(kb, "kernel_basis", "dr");

  const auto& s = member(j, "config", "solver");
  check_keys(s, "solver", {"dt_sub", "t_end"});
  c.dt_sub = number(s, "solver", "dt_sub");
  c.t_end = number(s, "solver", "t_end");

  const auto& d = member(j, "config", "dataset");
  check_keys(d, "dataset",
             {"thresholds", "times", "initial_densities", "true_kernel", "generation", "noise"});
  c.thresholds = numbers(member(d, "dataset", "thresholds"), "dataset.thresholds");
  const auto& t = member(d, "dataset", "times");
  if (t.is_object()) {
    check_keys(t, "dataset.times", {"step", "count"});
    c.times.step = number(t, "dataset.times", "step");
    c.times.count = unsigned_int(member(t, "dataset.times", "count"), "dataset.times.count");
  } else {
    c.times.explicit_times = numbers(t, "dataset.times");
  }
  const auto& specs = member(d, "dataset", "initial_densities");
  require(specs.is_array(), "dataset.initial_densities must be an array");
  for (const auto& spec : specs) {
    try {
      c.specs.push_back(spec_from_json(spec));
    } catch (const IoError& e) {
      throw ConfigError(std::string("dataset.initial_densities: ") + e.what());
    }
  }
  const auto& tk = member(d, "dataset", "true_kernel");
  require(tk.is_object() && tk.contains("type") && tk["type"].is_string(),
          "dataset.true_kernel needs a string 'type'");
  const auto type = tk["type"].get<std::string>();
  if (type == "confidence_bound") {
    check_keys(tk, "dataset.true_kernel", {"type", "bound"});
    c.true_kernel.confidence_bound = number(tk, "dataset.true_kernel", "bound");
  } else if (type == "coefficients") {
    check_keys(tk, "dataset.true_kernel", {"type", "coeffs"});
    c.true_kernel.coeffs = numbers(member(tk, "dataset.true_kernel", "coeffs"),
                                   "dataset.true_kernel.coeffs");
  } else {
    throw ConfigError("unknown true_kernel type '" + type + "'");
  }
  if (d.contains("generation")) {
    const auto& gen = d["generation"];
    check_keys(gen, "dataset.generation", {"dx", "dt_sub"});
    if (gen.contains("dx")) c.generation_dx = number(gen, "dataset.generation", "dx");
    if (gen.contains("dt_sub")) c.generation_dt = number(gen, "dataset.generation", "dt_sub");
  }
  if (d.contains("noise")) {
    const auto& n = d["noise"];
    check_keys(n, "dataset.noise", {"amplitude", "seed"});
    c.noise.amplitude = number(n, "dataset.noise", "amplitude");
    if (n.contains("seed")) c.noise.seed = unsigned_int(n["seed"], "dataset.noise.seed");
  }

  const auto& o = member(j, "config", "optimizer");
  check_keys(o, "optimizer",
             {"alpha", "alpha_min", "alpha_max", "n_max", "seed", "cap_doubling", "adjoint_strategy"});
  c.optimizer.alpha = number(o, "optimizer", "alpha");
  c.optimizer.alpha_min = number(o, "optimizer", "alpha_min");
  c.optimizer.alpha_max = number(o, "optimizer", "alpha_max");
  c.optimizer.n_max = static_cast<int>(unsigned_int(member(o, "optimizer", "n_max"), "optimizer.n_max"));
  c.optimizer.seed = unsigned_int(member(o, "optimizer", "seed"), "optimizer.seed");
  if (o.contains("cap_doubling")) {
    require(o["cap_doubling"].is_boolean(), "optimizer.cap_doubling must be a boolean");
    c.optimizer.cap_doubling = o["cap_doubling"].get<bool>();
  }
  if (o.contains("adjoint_strategy")) {
    require(o["adjoint_strategy"].is_string(), "optimizer.adjoint_strategy must be a string");
    const auto name = o["adjoint_strategy"].get<std::string>();
    if (name == "accumulated") {
      c.optimizer.strategy = AdjointStrategy::Accumulated;
    } else if (name == "per_record") {
      c.optimizer.strategy = AdjointStrategy::PerRecord;
    } else {
      throw ConfigError("unknown adjoint_strategy '" + name + "'");
    }
  }

  if (j.contains("paths")) {
    const auto& p = j["paths"];
    check_keys(p, "paths", {"dataset", "output_dir"});
    if (p.contains("dataset")) {
      require(p["dataset"].is_string(), "paths.dataset must be a string");
      c.dataset_path = p["dataset"].get<std::string>();
    }
    if (p.contains("output_dir")) {
      require(p["output_dir"].is_string(), "paths.output_dir must be a string");
      c.output_dir = p["output_dir"].get<std::string>();
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << config_to_json(config).dump(2) << '\n';
}

std::vector<std::string> preset_names() {
  return {"fig1-F1", "fig1-F2", "fig1-F3", "fig1-F4", "fig2-A1", "fig2-A2", "fig2-A3", "fig2-A4"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  c.times.step = 0.2;
  c.times.count = 101;
  c.true_kernel.confidence_bound = 0.36;
  c.dataset_path = "dataset.jsonl";
  c.output_dir = "out/" + c.name;

  const auto family = name.substr(0, std::min<std::size_t>(name.size(), 6));
  std::size_t size = 0;
  if (name.size() == 7 && name[6] >= '1' && name[6] <= '4') size = static_cast<std::size_t>(name[6] - '0');

  if (family == "fig1-F" && size > 0) {
    const double widths[] = {1.0, 0.9, 0.8, 0.7};
    for (std::size_t i = 0; i < size; ++i) c.specs.push_back(Uniform{widths[i], 0.0});
    c.thresholds = {-1.0 / 3.0};
  } else if (family == "fig2-A" && size > 0) {
    c.specs = {Uniform{1.0, 0.0}};
    const double a0 = 1.0 / (3.0 * static_cast<double>(size));
    for (std::size_t k = 1; k <= size; ++k) c.thresholds.push_back(static_cast<double>(k) * a0 - 1.0);
  } else {
    std::ostringstream msg;
    msg << "unknown preset '" << name << "'; available:";
    for (const auto& p : preset_names()) msg << ' ' << p;
    throw ConfigError(msg.str());
  }
  c.validate();
  return c;
}

}  // namespace kinv
