#include "kinv/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "kinv/error.hpp"
#include "kinv/forward.hpp"
#include "kinv/measurement.hpp"

namespace kinv {

namespace {

constexpr std::array<double, 5> kGaussNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                            0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights{0.2369268850561891, 0.4786286704993665,
                                              0.5688888888888889, 0.4786286704993665,
                                              0.2369268850561891};

double gauss(const std::function<double(double)>& fn, double lo, double hi) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double total = 0.0;
  for (std::size_t i = 0; i < kGaussNodes.size(); ++i) {
    total += kGaussWeights[i] * fn(mid + half * kGaussNodes[i]);
  }
  return total * half;
}

}  // namespace

double hat_identity_constant(double w) { return 1.0 / (4.0 * w); }

double eval_hat(double y, double c, double w) {
  if (!(w > 0.0)) throw InvalidArgument("eval_hat: w must be positive");
  return std::max(1.0 - std::abs((y - 2.0 * c) / w), 0.0);
}

double integrate_piecewise(const std::function<double(double)>& fn, double lo, double hi,
                           std::vector<double> breakpoints) {
  if (!(hi > lo)) return 0.0;
  const double eps = 1e-14 * std::max(1.0, hi - lo);
  breakpoints.erase(std::remove_if(breakpoints.begin(), breakpoints.end(),
                                   [&](double b) { return !(b > lo + eps && b < hi - eps); }),
                    breakpoints.end());
  breakpoints.push_back(lo);
  breakpoints.push_back(hi);
  std::sort(breakpoints.begin(), breakpoints.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (breakpoints[i + 1] - breakpoints[i] > eps) total += gauss(fn, breakpoints[i], breakpoints[i + 1]);
  }
  return total;
}

double eval_k(double y, const DensitySpec& f0, double a0) {
  if (y < 0.0) throw InvalidArgument("eval_k: y must be nonnegative");
  if (y == 0.0) return 0.0;
  const auto breaks = density_breakpoints(f0);
  std::vector<double> xs;
  for (double b : breaks) {
    xs.push_back(b - a0 + y);
    xs.push_back(b - a0);
    xs.push_back(a0 - b);
    xs.push_back(a0 + y - b);
  }
  // Pairs straddling a0 at distance y: those whose midpoint stays left of a0
  // gain mass below the threshold, the others lose it.
  auto integrand = [&](double x) {
    return density_value(f0, a0 - y + x) * density_value(f0, a0 + x) -
           density_value(f0, a0 - x) * density_value(f0, a0 + y - x);
  };
  return integrate_piecewise(integrand, 0.0, 0.5 * y, std::move(xs));
}

std::vector<double> k_breakpoints(const DensitySpec& f0, double a0) {
  const auto breaks = density_breakpoints(f0);
  std::vector<double> ys;
  for (double b : breaks) {
    ys.push_back(std::abs(a0 - b));
    ys.push_back(2.0 * std::abs(a0 - b));
    for (double b2 : breaks) {
      ys.push_back(std::abs(b2 - b));
      ys.push_back(std::abs(2.0 * a0 - b - b2));
    }
  }
  ys.erase(std::remove_if(ys.begin(), ys.end(), [](double y) { return !(y > 0.0); }), ys.end());
  return ys;
}

double mu_fredholm(const InteractionKernel& kernel, const DensitySpec& f0, double a0) {
  const auto& basis = kernel.basis();
  auto ys = k_breakpoints(f0, a0);
  for (std::size_t m = 0; m < basis.size(); ++m) ys.push_back(basis.node(m));
  auto integrand = [&](double y) { return kernel(y) * eval_k(y, f0, a0); };
  return 2.0 * integrate_piecewise(integrand, 0.0, basis.half_width(), std::move(ys));
}

double initial_rate_probe(const InteractionKernel& kernel, const DensitySpec& f0, double a,
                          const OpinionGrid& grid, double dt_probe) {
  if (!(dt_probe > 0.0)) throw InvalidArgument("initial rate probe: dt_probe must be positive");
  const auto density = realize_density(f0, grid);
  const double m0 = measure_M(density, a);
  auto difference = [&](double h) {
    const auto traj = solve_forward(density, kernel, h, h);
    return (measure_M(grid, traj.frame(1), a) - m0) / h;
  };
  return 2.0 * difference(0.5 * dt_probe) - difference(dt_probe);
}

double mu_forward(const InteractionKernel& kernel, const DensitySpec& f0, double a0,
                  double dt_probe, const OpinionGrid& grid) {
  return initial_rate_probe(kernel, f0, a0, grid, dt_probe);
}

double eval_G(double a, double y, double B) {
  if (!(B > 0.0)) throw InvalidArgument("eval_G: B must be positive");
  if (!(a > 0.0 && a < B)) {
    std::ostringstream msg;
    msg << "eval_G: a = " << a << " must lie in (0, " << B << ")";
    throw InvalidArgument(msg.str());
  }
  if (y < 0.0 || y > B) throw InvalidArgument("eval_G: y must lie in [0, B]");
  const double gap = B - a;
  if (a <= 0.5 * B) return (y > gap && y < B) ? 1.0 : 0.0;
  if (y > gap && y < 2.0 * gap) return 1.0;
  if (y > 2.0 * gap && y < B) return -1.0;
  return 0.0;
}

double relative_discrepancy(double x, double y, double floor) {
  return std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor});
}

FredholmCheckReport dnu_da_check(const InteractionKernel& kernel, double a, double B,
                                 const OpinionGrid& grid, double dt_probe, double da,
                                 double tolerance) {
  if (!(da > 0.0)) throw InvalidArgument("dnu_da_check: da must be positive");
  const auto& basis = kernel.basis();
  std::vector<double> ys{B - a, 2.0 * (B - a)};
  for (std::size_t m = 0; m < basis.size(); ++m) ys.push_back(basis.node(m));
  const double closed =
      integrate_piecewise([&](double y) { return kernel(y) * eval_G(a, y, B); }, 0.0, B, ys) /
      (2.0 * B * B);

  const DensitySpec uniform = Uniform{B, 0.0};
  const double up = initial_rate_probe(kernel, uniform, a + da, grid, dt_probe);
  const double down = initial_rate_probe(kernel, uniform, a - da, grid, dt_probe);
  const double solver = (up - down) / (2.0 * da);

  FredholmCheckReport report;
  std::ostringstream name;
  name << "dnu_da(a=" << a << ", B=" << B << ")";
  report.quantity = name.str();
  report.closed_form = closed;
  report.solver = solver;
  report.abs_error = std::abs(closed - solver);
  report.rel_error = relative_discrepancy(closed, solver);
  report.tolerance = tolerance;
  report.passed = report.rel_error <= tolerance;
  return report;
}

std::vector<std::pair<double, double>> indicator_decomposition(double c, double B) {
  if (!(c > 0.0 && c < B)) throw InvalidArgument("indicator_decomposition: need 0 < c < B");
  std::vector<std::pair<double, double>> terms;
  double coeff = 1.0;
  double level = c;
  // 1_{(c,B)} = G(B-c, .) + 2 * 1_{(2c,B)} while c < B/2.
  while (level < 0.5 * B) {
    terms.emplace_back(B - level, coeff);
    coeff *= 2.0;
    level *= 2.0;
  }
  terms.emplace_back(B - level, coeff);
  return terms;
}

std::vector<FredholmCheckReport> run_theory_suite(const InteractionKernel& kernel,
                                                  const TheorySuiteConfig& config) {
  std::vector<FredholmCheckReport> reports;
  auto add = [&](std::string name, double closed, double solver, double err, double rel,
                 double tol) {
    reports.push_back({std::move(name), closed, solver, err, rel, tol, rel <= tol});
  };

  // Hat-basis identity, worst case over sampled y. For the unit-mass pair
  // (plateaus 1/(2w)) the constant is 1/(4w); k is quadratic in f0, so
  // plateaus of height 2/w give the 4/w form.
  for (double c : config.lattice_c) {
    for (double w : config.lattice_w) {
      const IndicatorPair pair{config.a0, c, w};
      double worst = 0.0;
      double at_closed = 0.0;
      double at_solver = 0.0;
      for (int i = 0; i <= 200; ++i) {
        const double y = 2.0 * (c + w) * i / 200.0;
        const double closed = hat_identity_constant(w) * eval_hat(y, c, w);
        const double quad = eval_k(y, pair, config.a0);
        if (std::abs(closed - quad) >= worst) {
          worst = std::abs(closed - quad);
          at_closed = closed;
          at_solver = quad;
        }
      }
      std::ostringstream name;
      name << "hat_identity(c=" << c << ", w=" << w << ")";
      add(name.str(), at_closed, at_solver, worst, worst, 1e-6);
    }
  }

  // Fredholm representation of mu against the solver's initial rate.
  for (double c : config.lattice_c) {
    for (double w : config.lattice_w) {
      const IndicatorPair pair{config.a0, c, w};
      const double closed = mu_fredholm(kernel, pair, config.a0);
      const double solver = mu_forward(kernel, pair, config.a0, config.dt_probe, config.probe_grid);
      std::ostringstream name;
      name << "mu(c=" << c << ", w=" << w << ")";
      add(name.str(), closed, solver, std::abs(closed - solver),
          relative_discrepancy(closed, solver), 1e-3);
    }
  }

  // Symmetric initial data about a0: k vanishes and m stays at one half.
  {
    const Uniform symmetric{0.5, config.a0};
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) worst = std::max(worst, std::abs(eval_k(0.02 * i, symmetric, config.a0)));
    add("k_symmetric_vanishes", 0.0, worst, worst, worst, 1e-10);
    const double mu = mu_fredholm(kernel, symmetric, config.a0);
    add("mu_symmetric_vanishes", 0.0, mu, std::abs(mu), std::abs(mu), 1e-10);
  }

  // Indicator decompositions, compared away from breakpoints.
  for (double frac : {0.75, 0.375, 0.125}) {
    const double c = frac * config.B;
    const auto terms = indicator_decomposition(c, config.B);
    std::vector<double> breaks{c};
    for (const auto& [a, coeff] : terms) {
      breaks.push_back(config.B - a);
      breaks.push_back(2.0 * (config.B - a));
    }
    const double band = config.B * 1e-3;
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double y = config.B * i / 1000.0;
      bool near_break = y < band || y > config.B - band;
      for (double b : breaks) near_break = near_break || std::abs(y - b) < band;
      if (near_break) continue;
      double sum = 0.0;
      for (const auto& [a, coeff] : terms) sum += coeff * eval_G(a, y, config.B);
      const double target = (y > c && y < config.B) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(sum - target));
    }
    std::ostringstream name;
    name << "indicator_decomposition(c=" << frac << "B)";
    add(name.str(), 0.0, worst, worst, worst, 0.0);
  }

  for (double a : config.nu_thresholds) {
    reports.push_back(dnu_da_check(kernel, a * config.B, config.B, config.nu_grid, config.dt_probe,
                                   config.nu_grid.dx()));
  }
  return reports;
}

void write_theory_report(std::ostream& out, const std::vector<FredholmCheckReport>& reports) {
  for (const auto& r : reports) {
    nlohmann::json j{{"quantity", r.quantity},   {"closed_form", r.closed_form},
                     {"solver", r.solver},       {"abs_error", r.abs_error},
                     {"rel_error", r.rel_error}, {"tolerance", r.tolerance},
                     {"passed", r.passed}};
    out << j.dump() << '\n';
  }
}

}  // namespace kinv
