#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "kinv/density.hpp"
#include "kinv/grid.hpp"
#include "kinv/kernel.hpp"

namespace kinv {

/// Triangular hat of half-width w centered at 2c: max(1 - |(y - 2c)/w|, 0).
double eval_hat(double y, double c, double w);

/// Integral of `fn` over [lo, hi], split at every breakpoint inside the interval
/// and integrated with 5-point Gauss-Legendre on each smooth piece.
double integrate_piecewise(const std::function<double(double)>& fn, double lo, double hi,
                           std::vector<double> breakpoints);

/// k(y; IndicatorPair{a0, c, w}) / h_{2c,w}(y) for w <= c, i.e. 1/(4w).
double hat_identity_constant(double w);

/// Fredholm kernel k(y; f0) = int_0^{y/2} [f0(a0-y+x) f0(a0+x) - f0(a0-x) f0(a0+y-x)] dx,
/// so that dm/dt(0) = 2 int_0^inf theta(y) k(y) dy for m(t) = M(a0, t).
double eval_k(double y, const DensitySpec& f0, double a0);

/// Locations in y >= 0 where k(y; f0) may fail to be smooth.
std::vector<double> k_breakpoints(const DensitySpec& f0, double a0);

/// Initial rate of the left-wing fraction, 2 int_0^inf theta(y) k(y; f0) dy.
double mu_fredholm(const InteractionKernel& kernel, const DensitySpec& f0, double a0);

/// Time-derivative probe of M(a, t) at t = 0 from the forward solver:
/// Richardson extrapolation of one-sided differences over dt_probe and dt_probe/2.
double initial_rate_probe(const InteractionKernel& kernel, const DensitySpec& f0, double a,
                          const OpinionGrid& grid, double dt_probe);

/// Same quantity as mu_fredholm, computed with the forward solver.
double mu_forward(const InteractionKernel& kernel, const DensitySpec& f0, double a0,
                  double dt_probe, const OpinionGrid& grid);

/// Closed form of G(a, y) for the uniform density on (-B, B).
double eval_G(double a, double y, double B);

struct FredholmCheckReport {
  std::string quantity;
  double closed_form = 0.0;
  double solver = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Relative discrepancy |x - y| / max(|x|, |y|, floor).
double relative_discrepancy(double x, double y, double floor = 1e-8);

/// Compares (1/2B^2) int theta(y) G(a, y) dy with the central difference in a
/// (step da) of nu(a) = dM(a, 0; Uniform{B})/dt from the solver.
FredholmCheckReport dnu_da_check(const InteractionKernel& kernel, double a, double B,
                                 const OpinionGrid& grid, double dt_probe, double da,
                                 double tolerance = 1e-2);

/// Coefficients of 1_{(c, B)} in terms of G(a_i, .): pairs (a_i, coefficient_i).
std::vector<std::pair<double, double>> indicator_decomposition(double c, double B);

struct TheorySuiteConfig {
  double B = 1.0;
  double a0 = -1.0 / 3.0;
  /// Grid for the solver-based probes; fine enough that spatial error stays below 1e-3.
  OpinionGrid probe_grid{-1.0, 1.0, 0.0005};
  double dt_probe = 1e-3;
  std::vector<double> lattice_c{0.06, 0.09, 0.12, 0.15, 0.18};
  /// Widths stay below every c so the two plateaus sit on either side of a0.
  std::vector<double> lattice_w{0.015, 0.02, 0.03, 0.04, 0.05};
  std::vector<double> nu_thresholds{0.5, 0.65, 0.7, 0.75, 0.8, 0.9};
  OpinionGrid nu_grid{-1.0, 1.0, 0.0025};
};

/// Every identity check: hat basis, Fredholm/solver consistency, indicator
/// decompositions, and the dnu/da Fredholm integral.
std::vector<FredholmCheckReport> run_theory_suite(const InteractionKernel& kernel,
                                                  const TheorySuiteConfig& config = {});

/// One JSON object per line.
void write_theory_report(std::ostream& out, const std::vector<FredholmCheckReport>& reports);

}  // namespace kinv
