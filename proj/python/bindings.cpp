#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "kinv/adjoint.hpp"
#include "kinv/cli.hpp"
#include "kinv/config.hpp"
#include "kinv/density.hpp"
#include "kinv/error.hpp"
#include "kinv/forward.hpp"
#include "kinv/gradient.hpp"
#include "kinv/io.hpp"
#include "kinv/measurement.hpp"
#include "kinv/optimizer.hpp"
#include "kinv/theory.hpp"

namespace py = pybind11;
using namespace kinv;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> stacked(std::size_t rows, std::size_t cols,
                            const std::function<std::span<const double>(std::size_t)>& row) {
  py::array_t<double> out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  double* p = out.mutable_data();
  for (std::size_t i = 0; i < rows; ++i) {
    auto r = row(i);
    std::copy(r.begin(), r.end(), p + i * cols);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_kinv, m) {
  m.doc() = "Kernel inference for binary-compromise opinion dynamics";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<InstabilityError>(m, "InstabilityError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<OpinionGrid>(m, "OpinionGrid")
      .def(py::init<double, double, double>(), py::arg("x_min"), py::arg("x_max"), py::arg("dx"))
      .def_property_readonly("x_min", &OpinionGrid::x_min)
      .def_property_readonly("x_max", &OpinionGrid::x_max)
      .def_property_readonly("dx", &OpinionGrid::dx)
      .def("__len__", &OpinionGrid::size)
      .def("nodes",
           [](const OpinionGrid& g) {
             std::vector<double> x(g.size());
             for (std::size_t i = 0; i < x.size(); ++i) x[i] = g.node(i);
             return to_array(x);
           })
      .def("__eq__", [](const OpinionGrid& a, const OpinionGrid& b) { return a == b; })
      .def("__repr__", [](const OpinionGrid& g) {
        std::ostringstream s;
        s << "OpinionGrid(" << g.x_min() << ", " << g.x_max() << ", " << g.dx() << ")";
        return s.str();
      });

  py::class_<KernelBasis>(m, "KernelBasis")
      .def(py::init<double, double>(), py::arg("half_width"), py::arg("dr"))
      .def_property_readonly("dr", &KernelBasis::dr)
      .def_property_readonly("half_width", &KernelBasis::half_width)
      .def("__len__", &KernelBasis::size)
      .def("nodes", [](const KernelBasis& b) {
        std::vector<double> r(b.size());
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = b.node(i);
        return to_array(r);
      });

  py::class_<InteractionKernel>(m, "InteractionKernel")
      .def(py::init<KernelBasis, std::vector<double>>(), py::arg("basis"), py::arg("coeffs"))
      .def_static("zero", &InteractionKernel::zero)
      .def_static("constant", &InteractionKernel::constant)
      .def_static("confidence_bound", &InteractionKernel::confidence_bound, py::arg("basis"),
                  py::arg("bound"))
      .def_property_readonly("basis", &InteractionKernel::basis)
      .def_property_readonly("coeffs",
                             [](const InteractionKernel& k) { return to_array(k.coeffs()); })
      .def("__call__", &InteractionKernel::operator(), py::arg("r"))
      .def("average", &InteractionKernel::average);

  py::class_<Uniform>(m, "Uniform")
      .def(py::init<double, double>(), py::arg("half_width") = 1.0, py::arg("center") = 0.0)
      .def_readwrite("half_width", &Uniform::half_width)
      .def_readwrite("center", &Uniform::center);
  py::class_<IndicatorPair>(m, "IndicatorPair")
      .def(py::init<double, double, double>(), py::arg("a0"), py::arg("c"), py::arg("w"))
      .def_readwrite("a0", &IndicatorPair::a0)
      .def_readwrite("c", &IndicatorPair::c)
      .def_readwrite("w", &IndicatorPair::w);
  py::class_<PointMass>(m, "PointMass")
      .def(py::init<double>(), py::arg("x0"))
      .def_readwrite("x0", &PointMass::x0);
  py::class_<Tabulated>(m, "Tabulated")
      .def(py::init<OpinionGrid, std::vector<double>>(), py::arg("grid"), py::arg("values"))
      .def_readonly("grid", &Tabulated::grid)
      .def_readonly("values", &Tabulated::values);
  m.def("describe", &describe);

  py::class_<OpinionDensity>(m, "OpinionDensity")
      .def(py::init<OpinionGrid, std::vector<double>>(), py::arg("grid"), py::arg("values"))
      .def_property_readonly("grid", &OpinionDensity::grid)
      .def_property_readonly("values", [](const OpinionDensity& f) { return to_array(f.values()); })
      .def("mass", &OpinionDensity::mass)
      .def("first_moment", &OpinionDensity::first_moment);
  m.def("realize_density", &realize_density, py::arg("spec"), py::arg("grid"));

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init([](OpinionGrid grid, double dt_sub) { return SolverConfig{grid, dt_sub}; }),
           py::arg("grid") = OpinionGrid(-1.0, 1.0, 0.02), py::arg("dt_sub") = 0.01)
      .def_readwrite("grid", &SolverConfig::grid)
      .def_readwrite("dt_sub", &SolverConfig::dt_sub);

  py::class_<ForwardTrajectory>(m, "ForwardTrajectory")
      .def_property_readonly("grid", &ForwardTrajectory::grid)
      .def_property_readonly("dt", &ForwardTrajectory::dt)
      .def_property_readonly("final_time", &ForwardTrajectory::final_time)
      .def("__len__", &ForwardTrajectory::frame_count)
      .def("frame", [](const ForwardTrajectory& t, std::size_t i) { return to_array(t.frame(i)); })
      .def("frames",
           [](const ForwardTrajectory& t) {
             return stacked(t.frame_count(), t.grid().size(),
                            [&](std::size_t i) { return t.frame(i); });
           })
      .def("density", &ForwardTrajectory::density)
      .def("index_of", &ForwardTrajectory::index_of);
  m.def("collision_rate",
        [](const OpinionDensity& f, const InteractionKernel& k) {
          return to_array(collision_rate(f, k));
        });
  m.def("solve_forward", &solve_forward, py::arg("f0"), py::arg("kernel"), py::arg("t_end"),
        py::arg("dt_sub"), py::call_guard<py::gil_scoped_release>());

  py::class_<AdjointTrajectory>(m, "AdjointTrajectory")
      .def_property_readonly("threshold", &AdjointTrajectory::threshold)
      .def_property_readonly("final_time", &AdjointTrajectory::final_time)
      .def("__len__", &AdjointTrajectory::frame_count)
      .def("frame", [](const AdjointTrajectory& t, std::size_t i) { return to_array(t.frame(i)); })
      .def("frames", [](const AdjointTrajectory& t) {
        return stacked(t.frame_count(), t.grid().size(),
                       [&](std::size_t i) { return t.frame(i); });
      });
  m.def("solve_adjoint", &solve_adjoint, py::arg("a"), py::arg("trajectory"), py::arg("kernel"),
        py::arg("t"), py::call_guard<py::gil_scoped_release>());

  m.def("measure_M", py::overload_cast<const OpinionDensity&, double>(&measure_M), py::arg("f"),
        py::arg("a"));
  m.def("measure_M", py::overload_cast<const ForwardTrajectory&, double, double>(&measure_M),
        py::arg("trajectory"), py::arg("a"), py::arg("t"));

  py::class_<MeasurementRecord>(m, "MeasurementRecord")
      .def_readonly("f0_id", &MeasurementRecord::f0_id)
      .def_readonly("a", &MeasurementRecord::a)
      .def_readonly("t", &MeasurementRecord::t)
      .def_readonly("value", &MeasurementRecord::value);
  py::class_<NoiseConfig>(m, "NoiseConfig")
      .def(py::init([](double amplitude, std::uint64_t seed) { return NoiseConfig{amplitude, seed}; }),
           py::arg("amplitude") = 0.0, py::arg("seed") = 0)
      .def_readwrite("amplitude", &NoiseConfig::amplitude)
      .def_readwrite("seed", &NoiseConfig::seed);
  py::class_<MeasurementDataset>(m, "MeasurementDataset")
      .def_readonly("specs", &MeasurementDataset::specs)
      .def_readonly("thresholds", &MeasurementDataset::thresholds)
      .def_readonly("times", &MeasurementDataset::times)
      .def_readonly("records", &MeasurementDataset::records)
      .def("validate", &MeasurementDataset::validate)
      .def("__len__", [](const MeasurementDataset& d) { return d.records.size(); });
  m.def("generate_dataset", &generate_dataset, py::arg("true_kernel"), py::arg("specs"),
        py::arg("thresholds"), py::arg("times"), py::arg("solver"), py::arg("noise") = NoiseConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("loss", &loss, py::arg("kernel"), py::arg("dataset"), py::arg("solver"),
        py::call_guard<py::gil_scoped_release>());
  m.def("save_dataset", &save_dataset);
  m.def("load_dataset", &load_dataset);

  py::enum_<AdjointStrategy>(m, "AdjointStrategy")
      .value("Accumulated", AdjointStrategy::Accumulated)
      .value("PerRecord", AdjointStrategy::PerRecord);
  py::class_<KernelGradient>(m, "KernelGradient")
      .def_readonly("basis", &KernelGradient::basis)
      .def_property_readonly("coeffs", [](const KernelGradient& g) { return to_array(g.coeffs); })
      .def("norm", &KernelGradient::norm);
  py::class_<LossGradient>(m, "LossGradient")
      .def_readonly("loss", &LossGradient::loss)
      .def_readonly("gradient", &LossGradient::gradient)
      .def_readonly("forward_solves", &LossGradient::forward_solves)
      .def_readonly("adjoint_solves", &LossGradient::adjoint_solves);
  m.def("loss_and_gradient", &loss_and_gradient, py::arg("kernel"), py::arg("dataset"),
        py::arg("solver"), py::arg("strategy") = AdjointStrategy::Accumulated,
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "finite_difference_gradient",
      [](const InteractionKernel& k, const MeasurementDataset& d, const SolverConfig& s,
         double step) { return to_array(finite_difference_gradient(k, d, s, step)); },
      py::arg("kernel"), py::arg("dataset"), py::arg("solver"), py::arg("relative_step") = 1e-4);

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &OptimizerConfig::alpha)
      .def_readwrite("alpha_min", &OptimizerConfig::alpha_min)
      .def_readwrite("alpha_max", &OptimizerConfig::alpha_max)
      .def_readwrite("n_max", &OptimizerConfig::n_max)
      .def_readwrite("seed", &OptimizerConfig::seed)
      .def_readwrite("cap_doubling", &OptimizerConfig::cap_doubling)
      .def_readwrite("strategy", &OptimizerConfig::strategy)
      .def("validate", &OptimizerConfig::validate);
  py::class_<HistoryRow>(m, "HistoryRow")
      .def_readonly("n", &HistoryRow::n)
      .def_readonly("loss", &HistoryRow::loss)
      .def_readonly("step", &HistoryRow::step)
      .def_readonly("grad_norm", &HistoryRow::grad_norm)
      .def_readonly("rel_error", &HistoryRow::rel_error);
  py::class_<OptimizerState>(m, "OptimizerState")
      .def_readonly("iterate", &OptimizerState::iterate)
      .def_readonly("alpha", &OptimizerState::alpha)
      .def_readonly("history", &OptimizerState::history);
  m.def("init_kernel", &init_kernel, py::arg("basis"), py::arg("seed"));
  m.def("relative_error", &relative_error, py::arg("estimate"), py::arg("truth"));
  m.def("run_inference", &run_inference, py::arg("dataset"), py::arg("config"), py::arg("solver"),
        py::arg("truth") = std::nullopt, py::arg("initial") = std::nullopt,
        py::arg("progress") = ProgressCallback{});

  py::class_<FredholmCheckReport>(m, "FredholmCheckReport")
      .def_readonly("quantity", &FredholmCheckReport::quantity)
      .def_readonly("closed_form", &FredholmCheckReport::closed_form)
      .def_readonly("solver", &FredholmCheckReport::solver)
      .def_readonly("abs_error", &FredholmCheckReport::abs_error)
      .def_readonly("rel_error", &FredholmCheckReport::rel_error)
      .def_readonly("tolerance", &FredholmCheckReport::tolerance)
      .def_readonly("passed", &FredholmCheckReport::passed);
  m.def("eval_hat", &eval_hat);
  m.def("eval_k", &eval_k, py::arg("y"), py::arg("f0"), py::arg("a0"));
  m.def("eval_G", &eval_G, py::arg("a"), py::arg("y"), py::arg("B"));
  m.def("hat_identity_constant", &hat_identity_constant);
  m.def("mu_fredholm", &mu_fredholm, py::arg("kernel"), py::arg("f0"), py::arg("a0"));
  m.def("mu_forward", &mu_forward, py::arg("kernel"), py::arg("f0"), py::arg("a0"),
        py::arg("dt_probe"), py::arg("grid"), py::call_guard<py::gil_scoped_release>());
  m.def("run_theory_suite", [](const InteractionKernel& k) {
    py::gil_scoped_release release;
    return run_theory_suite(k);
  });

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("name", &ExperimentConfig::name)
      .def_readwrite("grid", &ExperimentConfig::grid)
      .def_readwrite("dt_sub", &ExperimentConfig::dt_sub)
      .def_readwrite("thresholds", &ExperimentConfig::thresholds)
      .def_readwrite("specs", &ExperimentConfig::specs)
      .def_readwrite("optimizer", &ExperimentConfig::optimizer)
      .def_readwrite("noise", &ExperimentConfig::noise)
      .def("times", [](const ExperimentConfig& c) { return c.times.expand(); })
      .def("basis", &ExperimentConfig::basis)
      .def("solver", &ExperimentConfig::solver)
      .def("generation_solver", &ExperimentConfig::generation_solver)
      .def("truth", &ExperimentConfig::truth)
      .def("validate", &ExperimentConfig::validate)
      .def("to_json", [](const ExperimentConfig& c) { return config_to_json(c).dump(); });
  m.def("preset", [](const std::string& name) { return preset(name); });
  m.def("preset_names", &preset_names);
  m.def("load_config", &load_config);
  m.def("config_from_json",
        [](const std::string& text) { return config_from_json(nlohmann::json::parse(text)); });

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
