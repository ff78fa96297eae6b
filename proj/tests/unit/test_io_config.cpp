#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "kinv/config.hpp"
#include "kinv/error.hpp"
#include "kinv/io.hpp"

using namespace kinv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "kinv_unit_io";
  fs::create_directories(dir);
  return dir / name;
}

nlohmann::json golden(const std::string& name) {
  std::ifstream in(std::string(KINV_GOLDEN_DIR) + "/" + name + ".json");
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_SUITE("io_config") {

TEST_CASE("reals round-trip through text") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, 6.02e23, 0.34655127253911339}) {
    CHECK(parse_real(format_real(v)) == v);
  }
  CHECK(std::isnan(parse_real(format_real(std::numeric_limits<double>::quiet_NaN()))));
  CHECK(format_real(0.2) == "0.2");
  CHECK_THROWS_AS(parse_real("0.2x"), IoError);
  CHECK_THROWS_AS(parse_real(""), IoError);
}

TEST_CASE("csv reader checks the header and the column count") {
  std::istringstream good("a,b\n1,2\n3,4\n");
  auto rows = read_csv(good, {"a", "b"});
  CHECK(rows == std::vector<std::vector<double>>{{1, 2}, {3, 4}});
  std::istringstream wrong("a,c\n1,2\n");
  CHECK_THROWS_AS(read_csv(wrong, {"a", "b"}), IoError);
  std::istringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(read_csv(ragged, {"a", "b"}), IoError);
}

TEST_CASE("density specs round-trip through JSON") {
  const OpinionGrid g(-1.0, 1.0, 0.5);
  std::vector<DensitySpec> specs{Uniform{0.7, 0.1}, IndicatorPair{-1.0 / 3.0, 0.2, 0.05},
                                 PointMass{0.25}, Tabulated{g, {0.1, 0.2, 0.3, 0.2, 0.1}}};
  for (const auto& s : specs) {
    const auto j = spec_to_json(s);
    CHECK(spec_to_json(spec_from_json(j)) == j);
  }
  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"type", "gaussian"}}), IoError);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"type", "uniform"}}), IoError);
}

TEST_CASE("kernel csv and json round-trip") {
  KernelBasis b(1.0, 0.19);
  InteractionKernel k(b, {0.1, 1.0 / 3.0, 0.0, 2.0, 1e-9, 0.5, 0.25});
  std::stringstream csv;
  write_kernel_csv(csv, k);
  CHECK(csv.str().rfind("r,theta\n", 0) == 0);
  auto back = read_kernel_csv(csv);
  CHECK(back.coeffs() == k.coeffs());
  CHECK(back.basis() == k.basis());
  auto again = kernel_from_json(kernel_to_json(k));
  CHECK(again.coeffs() == k.coeffs());
  std::istringstream uneven("r,theta\n0,1\n0.19,1\n0.5,0\n");
  CHECK_THROWS_AS(read_kernel_csv(uneven), IoError);
}

TEST_CASE("dataset reader rejects malformed input") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_dataset(empty), IoError);
  std::istringstream foreign("{\"format\":\"other\"}\n");
  CHECK_THROWS_AS(read_dataset(foreign), IoError);
  CHECK_THROWS_AS(load_dataset(scratch("does_not_exist.jsonl")), IoError);

  KernelBasis b(1.0, 0.19);
  auto ds = generate_dataset(InteractionKernel::confidence_bound(b, 0.36), {Uniform{1.0, 0.0}},
                             {-1.0 / 3.0}, {0.0, 0.2}, SolverConfig{});
  std::stringstream buf;
  write_dataset(buf, ds);
  std::string text = buf.str();
  std::istringstream truncated(text.substr(0, text.rfind('{')));
  CHECK_THROWS_AS(read_dataset(truncated), IoError);

  const auto path = scratch("ds.jsonl");
  save_dataset(path, ds);
  CHECK(load_dataset(path).records == ds.records);
}

TEST_CASE("presets match the golden files") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    CHECK(config_to_json(preset(name)) == golden(name));
  }
  CHECK(preset_names().size() == 8);
  CHECK_THROWS_AS(preset("fig3-Z9"), ConfigError);
}

TEST_CASE("preset contents") {
  auto f4 = preset("fig1-F4");
  CHECK(f4.specs.size() == 4);
  CHECK(f4.thresholds == std::vector<double>{-1.0 / 3.0});
  const auto times = f4.times.expand();
  REQUIRE(times.size() == 101);
  CHECK(times.front() == 0.0);
  CHECK(times.back() == 20.0);
  for (std::size_t k = 0; k < times.size(); ++k) CHECK(times[k] == 0.2 * static_cast<double>(k));
  CHECK(f4.truth().coeffs() == std::vector<double>{1, 1, 0, 0, 0, 0, 0});
  CHECK(f4.optimizer.alpha == 0.01);
  CHECK(f4.optimizer.alpha_min == 0.003);
  CHECK(f4.optimizer.alpha_max == 0.05);
  CHECK(f4.optimizer.n_max == 1000);

  auto a2 = preset("fig2-A2");
  CHECK(a2.specs.size() == 1);
  REQUIRE(a2.thresholds.size() == 2);
  CHECK(a2.thresholds[0] == doctest::Approx(1.0 / 6.0 - 1.0));
  CHECK(a2.thresholds[1] == doctest::Approx(2.0 / 6.0 - 1.0));
}

TEST_CASE("config round-trips through JSON and files") {
  auto cfg = preset("fig2-A4");
  cfg.generation_dx = 0.01;
  cfg.generation_dt = 0.005;
  cfg.noise = {1e-3, 17};
  cfg.optimizer.strategy = AdjointStrategy::PerRecord;
  cfg.optimizer.cap_doubling = false;
  const auto j = config_to_json(cfg);
  CHECK(config_to_json(config_from_json(j)) == j);
  const auto path = scratch("cfg.json");
  save_config(path, cfg);
  CHECK(config_to_json(load_config(path)) == j);
  CHECK(cfg.generation_solver().grid.dx() == 0.01);
  CHECK(cfg.generation_solver().dt_sub == 0.005);
}

TEST_CASE("config parser is strict") {
  auto j = config_to_json(preset("fig1-F1"));
  auto extra = j;
  extra["solver"]["dt"] = 0.01;
  CHECK_THROWS_AS(config_from_json(extra), ConfigError);
  auto typed = j;
  typed["optimizer"]["n_max"] = "many";
  CHECK_THROWS_AS(config_from_json(typed), ConfigError);
  auto bad_alpha = j;
  bad_alpha["optimizer"]["alpha"] = 1.0;
  CHECK_THROWS_AS(config_from_json(bad_alpha), ConfigError);
  auto wide = j;
  wide["dataset"]["initial_densities"][0]["half_width"] = 1.5;
  CHECK_THROWS_AS(config_from_json(wide), ConfigError);
  auto late = j;
  late["solver"]["t_end"] = 10.0;
  CHECK_THROWS_AS(config_from_json(late), ConfigError);
  auto strategy = j;
  strategy["optimizer"]["adjoint_strategy"] = "sometimes";
  CHECK_THROWS_AS(config_from_json(strategy), ConfigError);

  const auto path = scratch("broken.json");
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_config(path), ConfigError);
  CHECK_THROWS_AS(load_config(scratch("missing.json")), IoError);
}

}  // TEST_SUITE
