#include "kinv/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kinv/config.hpp"
#include "kinv/error.hpp"
#include "kinv/gradient.hpp"
#include "kinv/io.hpp"
#include "kinv/optimizer.hpp"
#include "kinv/theory.hpp"

namespace kinv {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string preset;
  std::string config;
  std::optional<int> iters;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> dt;
  std::optional<double> dx;
  std::size_t stride = 0;
  double fd_step = 1e-4;
};

class MissingFile : public IoError {
 public:
  using IoError::IoError;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

ExperimentConfig resolve_config(const Options& o) {
  if (o.preset.empty() == o.config.empty()) {
    throw UsageError("exactly one of --preset or --config is required");
  }
  ExperimentConfig c;
  if (!o.preset.empty()) {
    c = preset(o.preset);
  } else {
    if (!fs::exists(o.config)) throw MissingFile("config file not found: " + o.config);
    c = load_config(o.config);
  }
  if (o.iters) c.optimizer.n_max = *o.iters;
  if (o.seed) c.optimizer.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.dt) c.dt_sub = *o.dt;
  if (o.dx) {
    try {
      c.grid = OpinionGrid(c.grid.x_min(), c.grid.x_max(), *o.dx);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("--dx: ") + e.what());
    }
  }
  c.validate();
  return c;
}

fs::path dataset_file(const ExperimentConfig& c) {
  const fs::path p(c.dataset_path);
  return p.is_absolute() ? p : fs::path(c.output_dir) / p;
}

fs::path output_file(const ExperimentConfig& c, const std::string& name) {
  fs::create_directories(c.output_dir);
  return fs::path(c.output_dir) / name;
}

MeasurementDataset make_dataset(const ExperimentConfig& c) {
  return generate_dataset(c.truth(), c.specs, c.thresholds, c.times.expand(), c.generation_solver(),
                          c.noise);
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot write " + path.string());
  writer(file);
  if (!file) throw IoError("failed writing " + path.string());
}

int cmd_gen_data(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto data = make_dataset(c);
  const auto path = dataset_file(c);
  save_dataset(path, data);
  out << "wrote " << data.records.size() << " records (" << data.thresholds.size()
      << " thresholds x " << data.times.size() << " times x " << data.specs.size()
      << " initial densities) to " << path.string() << '\n';
  return kExitOk;
}

void check_matches(const MeasurementDataset& data, const ExperimentConfig& c, const fs::path& path) {
  if (data.thresholds != c.thresholds || data.times != c.times.expand() ||
      data.specs.size() != c.specs.size()) {
    throw ConfigError("dataset " + path.string() +
                      " does not match the configured thresholds, times, or densities; "
                      "rerun gen-data");
  }
}

int cmd_infer(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto path = dataset_file(c);
  MeasurementDataset data;
  if (fs::exists(path)) {
    data = load_dataset(path);
    check_matches(data, c, path);
    out << "loaded " << data.records.size() << " records from " << path.string() << '\n';
  } else {
    data = make_dataset(c);
    save_dataset(path, data);
    out << "generated " << data.records.size() << " records into " << path.string() << '\n';
  }

  const auto truth = c.truth();
  const auto start = std::chrono::steady_clock::now();
  auto progress = [&](const HistoryRow& row) {
    if (row.n % 100 == 0 || row.n == c.optimizer.n_max) {
      out << "n=" << row.n << " loss=" << format_real(row.loss)
          << " rel_error=" << format_real(row.rel_error) << '\n'
          << std::flush;
    }
  };
  const auto state = run_inference(data, c.optimizer, c.solver(), truth, std::nullopt, progress);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_file(output_file(c, "history.csv"), [&](std::ostream& f) { write_history_csv(f, state.history); });
  write_file(output_file(c, "kernel.csv"), [&](std::ostream& f) { write_kernel_csv(f, state.iterate); });
  const auto& last = state.history.back();
  nlohmann::json summary{{"name", c.name},
                         {"iterations", last.n},
                         {"final_loss", last.loss},
                         {"final_rel_error", last.rel_error},
                         {"final_alpha", state.alpha},
                         {"seed", c.optimizer.seed},
                         {"records", data.records.size()},
                         {"elapsed_seconds", elapsed},
                         {"kernel", kernel_to_json(state.iterate)}};
  write_file(output_file(c, "summary.json"), [&](std::ostream& f) { f << summary.dump(2) << '\n'; });
  out << "final loss " << format_real(last.loss) << ", relative error "
      << format_real(last.rel_error) << " after " << last.n << " iterations; outputs in "
      << c.output_dir << '\n';
  return kExitOk;
}

int cmd_check_gradient(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto solver = c.solver();
  const auto data = generate_dataset(c.truth(), c.specs, c.thresholds, c.times.expand(), solver);
  const auto kernel = init_kernel(c.basis(), c.optimizer.seed);
  const auto adjoint = loss_gradient(kernel, data, solver, c.optimizer.strategy);
  const auto fd = finite_difference_gradient(kernel, data, solver, o.fd_step);
  const double error = relative_l2_error(adjoint.coeffs, fd);

  out << std::setw(8) << "r" << std::setw(26) << "adjoint" << std::setw(26) << "finite_diff" << '\n';
  for (std::size_t m = 0; m < fd.size(); ++m) {
    out << std::setw(8) << format_real(c.basis().node(m)) << std::setw(26)
        << format_real(adjoint.coeffs[m]) << std::setw(26) << format_real(fd[m]) << '\n';
  }
  if (o.out) {
    write_file(output_file(c, "gradient.csv"), [&](std::ostream& f) { write_gradient_csv(f, adjoint); });
  }
  out << "relative_error " << format_real(error) << " (dt_sub " << format_real(c.dt_sub) << ", dx "
      << format_real(c.grid.dx()) << ")\n";
  return kExitOk;
}

int cmd_verify_theory(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  TheorySuiteConfig suite;
  suite.B = 1.0;
  suite.a0 = c.thresholds.front();
  const auto reports = run_theory_suite(c.truth(), suite);
  const auto path = output_file(c, "theory_report.jsonl");
  write_file(path, [&](std::ostream& f) { write_theory_report(f, reports); });
  bool all = true;
  for (const auto& r : reports) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.quantity << " closed=" << format_real(r.closed_form)
        << " solver=" << format_real(r.solver) << " rel=" << format_real(r.rel_error)
        << " tol=" << format_real(r.tolerance) << '\n';
  }
  out << reports.size() << " checks written to " << path.string() << '\n';
  return all ? kExitOk : kExitCheckFailed;
}

int cmd_forward(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto truth = c.truth();
  std::size_t stride = o.stride;
  if (stride == 0) {
    stride = c.times.step ? std::max<std::size_t>(1, substep_count(*c.times.step, c.dt_sub)) : 1;
  }
  for (std::size_t i = 0; i < c.specs.size(); ++i) {
    const auto f0 = realize_density(c.specs[i], c.grid);
    const auto traj = solve_forward(f0, truth, c.t_end, c.dt_sub);
    const auto path = output_file(c, "trajectory_f" + std::to_string(i) + ".csv");
    write_file(path, [&](std::ostream& f) { write_trajectory_csv(f, traj, stride); });
    out << "wrote " << path.string() << " (" << describe(c.specs[i]) << ")\n";
  }
  return kExitOk;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--preset", o.preset, "Built-in experiment (fig1-F1..4, fig2-A1..4)");
  cmd->add_option("--config", o.config, "Experiment configuration file (JSON)");
  cmd->add_option("--iters", o.iters, "Override optimizer n_max")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "Override the seed of the initial kernel");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--dt", o.dt, "Override dt_sub")->check(CLI::PositiveNumber);
  cmd->add_option("--dx", o.dx, "Override the opinion grid spacing")->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel inference for kinetic opinion dynamics", "kinv"};
  app.require_subcommand(1);
  Options o;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic measurement dataset");
  auto* infer = app.add_subcommand("infer", "Recover the interaction kernel by projected descent");
  auto* check = app.add_subcommand("check-gradient", "Compare adjoint and finite-difference gradients");
  auto* theory = app.add_subcommand("verify-theory", "Run the Fredholm identity checks");
  auto* forward = app.add_subcommand("forward", "Solve the forward problem and export trajectories");
  for (auto* cmd : {gen, infer, check, theory, forward}) add_common(cmd, o);
  check->add_option("--fd-step", o.fd_step, "Relative finite-difference step")->check(CLI::PositiveNumber);
  forward->add_option("--stride", o.stride, "Export every stride-th substep");

  if (!args.empty() && !args[0].empty() && args[0][0] != '-' &&
      app.get_subcommand_no_throw(args[0]) == nullptr) {
    err << "kinv: unknown subcommand '" << args[0]
        << "'; expected one of gen-data, infer, check-gradient, verify-theory, forward\n";
    return kExitUsage;
  }

  std::vector<const char*> argv{"kinv"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "kinv: " << e.what() << '\n';
    if (args.empty() || e.get_name() == "RequiredError") err << "usage: kinv {gen-data|infer|check-gradient|verify-theory|forward} [options]\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o, out);
    if (infer->parsed()) return cmd_infer(o, out);
    if (check->parsed()) return cmd_check_gradient(o, out);
    if (theory->parsed()) return cmd_verify_theory(o, out);
    return cmd_forward(o, out);
  } catch (const UsageError& e) {
    err << "kinv: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MissingFile& e) {
    err << "kinv: " << e.what() << '\n';
    return kExitMissingFile;
  } catch (const ConfigError& e) {
    err << "kinv: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "kinv: " << e.what() << '\n';
    return kExitMissingFile;
  } catch (const InstabilityError& e) {
    err << "kinv: numerical instability: " << e.what() << '\n';
    return kExitInstability;
  } catch (const std::exception& e) {
    err << "kinv: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace kinv
