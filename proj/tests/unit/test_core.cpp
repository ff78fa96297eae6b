#include <cmath>
#include <limits>

#include "doctest.h"
#include "kinv/density.hpp"
#include "kinv/error.hpp"
#include "kinv/grid.hpp"
#include "kinv/kernel.hpp"
#include "oracles.hpp"

using namespace kinv;

TEST_SUITE("core_types") {

TEST_CASE("grid nodes and half cells at the ends") {
  OpinionGrid g(-1.0, 1.0, 0.02);
  CHECK(g.size() == 101);
  CHECK(g.node(0) == -1.0);
  CHECK(g.node(100) == 1.0);
  CHECK(g.node(50) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g.cell_lo(0) == -1.0);
  CHECK(g.cell_hi(0) == doctest::Approx(-0.99));
  CHECK(g.cell_hi(100) == 1.0);
  CHECK(g.mirror(3) == 97);
}

TEST_CASE("grid rejects non-integer spans and tiny grids") {
  CHECK_THROWS_AS(OpinionGrid(-1.0, 1.0, 0.03), InvalidArgument);
  CHECK_THROWS_AS(OpinionGrid(0.0, 1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(OpinionGrid(0.0, 1.0, -0.1), InvalidArgument);
  CHECK_NOTHROW(OpinionGrid(0.0, 1.0, 0.1));
}

TEST_CASE("kernel basis covers the requested half width") {
  KernelBasis b(1.0, 0.19);
  CHECK(b.size() == 7);
  CHECK(b.half_width() == doctest::Approx(1.14));
  KernelBasis exact(0.95, 0.19);
  CHECK(exact.size() == 6);
  CHECK(exact.half_width() == doctest::Approx(0.95));
}

TEST_CASE("eval_kernel examples") {
  KernelBasis b(1.0, 0.19);
  auto ones = InteractionKernel::constant(b, 1.0);
  CHECK(eval_kernel(ones, 0.05) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eval_kernel(ones, b.half_width() + 1.0) == 0.0);
  std::vector<double> c(7, 0.0);
  c[1] = 1.0;
  InteractionKernel step(b, c);
  CHECK(eval_kernel(step, 0.285) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("kernel is exactly symmetric and Lipschitz") {
  KernelBasis b(1.0, 0.19);
  InteractionKernel k(b, oracle::random_vector(b.size(), 3));
  double max_coeff = 0.0;
  for (double v : k.coeffs()) max_coeff = std::max(max_coeff, v);
  const double eps = 1e-4;
  for (int i = -1300; i <= 1300; ++i) {
    const double r = i * 1e-3;
    CHECK(k(r) == k(-r));
    // The support ends with a jump unless the last coefficient is zero.
    if (std::abs(r) + eps < b.half_width()) {
      CHECK(std::abs(k(r + eps) - k(r)) <= max_coeff / b.dr() * eps * (1 + 1e-9));
    }
  }
}

TEST_CASE("kernel rejects negative or non-finite coefficients") {
  KernelBasis b(1.0, 0.19);
  std::vector<double> c(7, 1.0);
  c[2] = -0.1;
  CHECK_THROWS_AS(InteractionKernel(b, c), InvalidArgument);
  c[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(InteractionKernel(b, c), InvalidArgument);
  CHECK_THROWS_AS(InteractionKernel(b, std::vector<double>(6, 1.0)), InvalidArgument);
}

TEST_CASE("confidence bound kernel interpolates the indicator at the nodes") {
  KernelBasis b(1.0, 0.19);
  auto k = InteractionKernel::confidence_bound(b, 0.36);
  CHECK(k.coeffs() == std::vector<double>{1, 1, 0, 0, 0, 0, 0});
}

TEST_CASE("kernel average matches dense quadrature") {
  KernelBasis b(1.0, 0.19);
  InteractionKernel k(b, oracle::random_vector(b.size(), 11));
  for (auto [lo, hi] : {std::pair{-0.3, 0.05}, {0.1, 0.9}, {1.0, 1.3}, {-1.2, 1.2}}) {
    // Midpoint sums on each side of the support edges, where theta jumps.
    const double B = b.half_width();
    double integral = 0.0;
    for (auto [a, c] : {std::pair{lo, std::min(hi, -B)}, {std::max(lo, -B), std::min(hi, B)}, {std::max(lo, B), hi}}) {
      if (c <= a) continue;
      const int n = 200000;
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k(a + (i + 0.5) * (c - a) / n);
      integral += s * (c - a) / n;
    }
    CHECK(k.average(lo, hi) == doctest::Approx(integral / (hi - lo)).epsilon(1e-8));
  }
}

TEST_CASE("hat integrals give the mirrored hat areas") {
  KernelBasis b(1.0, 0.19);
  const double big = 10.0;
  CHECK(b.hat_integral(0, -big, big) == doctest::Approx(0.19));
  for (std::size_t m = 1; m + 1 < b.size(); ++m) {
    CHECK(b.hat_integral(m, -big, big) == doctest::Approx(0.38));
  }
  CHECK(b.hat_integral(6, -big, big) == doctest::Approx(0.19));
}

TEST_CASE("pair weights are cell means of the kernel") {
  OpinionGrid g(-1.0, 1.0, 0.02);
  KernelBasis b(1.0, 0.19);
  InteractionKernel k(b, oracle::random_vector(b.size(), 5));
  DistanceCellMap map(g, b);
  const auto w = map.pair_weights(k.coeffs());
  REQUIRE(w.size() == g.size());
  for (std::size_t n = 0; n < w.size(); ++n) {
    const double lo = n * 0.02 - 0.01;
    const double hi = n * 0.02 + 0.01;
    CHECK(w[n] == doctest::Approx(k.average(lo, hi)).epsilon(1e-12));
  }
}

}  // TEST_SUITE

TEST_SUITE("density") {

TEST_CASE("uniform density realizes to one half") {
  OpinionGrid g(-1.0, 1.0, 0.02);
  auto f = realize_density(Uniform{1.0, 0.0}, g);
  // End nodes own half cells, so they carry half the plateau value.
  for (std::size_t i = 1; i + 1 < f.size(); ++i) CHECK(f[i] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(f[f.size() - 1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(f.mass() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("point mass on a node fills one cell") {
  OpinionGrid g(-1.0, 1.0, 0.02);
  auto f = realize_density(PointMass{0.2}, g);
  int nonzero = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] != 0.0) {
      ++nonzero;
      CHECK(g.node(i) == doctest::Approx(0.2));
      CHECK(f[i] == doctest::Approx(1.0 / 0.02).epsilon(1e-12));
    }
  }
  CHECK(nonzero == 1);
}

TEST_CASE("point mass between nodes keeps mass and mean") {
  OpinionGrid g(-1.0, 1.0, 0.02);
  auto f = realize_density(PointMass{0.205}, g);
  CHECK(f.mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.first_moment() == doctest::Approx(0.205).epsilon(1e-13));
}

TEST_CASE("indicator pair has plateaus of 1/(2w)") {
  OpinionGrid g(-1.0, 1.0, 0.02);
  const IndicatorPair spec{-1.0 / 3.0, 0.3, 0.1};
  auto f = realize_density(spec, g);
  CHECK(f.mass() == doctest::Approx(1.0).epsilon(1e-12));
  // Direct quadrature of the analytic density over both plateaus.
  double mass = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) mass += density_value(spec, -1.0 + (i + 0.5) * 2.0 / n) * 2.0 / n;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  double top = 0.0;
  for (double v : f.values()) top = std::max(top, v);
  CHECK(top == doctest::Approx(5.0).epsilon(1e-12));
  for (double v : f.values()) CHECK((v == 0.0 || v <= 5.0 + 1e-12));
}

TEST_CASE("realization is idempotent") {
  OpinionGrid g(-1.0, 1.0, 0.02);
  for (const DensitySpec& spec : {DensitySpec{Uniform{0.7, 0.1}}, DensitySpec{IndicatorPair{-1.0 / 3.0, 0.2, 0.05}}}) {
    auto once = realize_density(spec, g);
    auto twice = realize_density(Tabulated{g, std::vector<double>(once.values().begin(), once.values().end())}, g);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-15));
  }
}

TEST_CASE("support outside the grid names the offending bound") {
  OpinionGrid g(-1.0, 1.0, 0.02);
  try {
    realize_density(Uniform{1.2, 0.0}, g);
    FAIL("expected rejection");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("lower") != std::string::npos);
  }
  try {
    realize_density(Uniform{0.5, 0.7}, g);
    FAIL("expected rejection");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("upper") != std::string::npos);
  }
}

TEST_CASE("tabulated values on another grid are rejected") {
  OpinionGrid g(-1.0, 1.0, 0.02);
  OpinionGrid other(-1.0, 1.0, 0.04);
  CHECK_THROWS_AS(realize_density(Tabulated{other, std::vector<double>(other.size(), 0.5)}, g),
                  InvalidArgument);
}

}  // TEST_SUITE
