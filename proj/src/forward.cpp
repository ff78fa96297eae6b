#include "kinv/forward.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "kinv/error.hpp"
#include "kinv/io.hpp"

namespace kinv {

namespace {

constexpr double kNegativeTolerance = 1e-8;

void check_size(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    std::ostringstream msg;
    msg << what << ": expected " << n << " values on the grid, got " << v.size();
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

CollisionOperator::CollisionOperator(const OpinionGrid& grid, const InteractionKernel& kernel)
    : CollisionOperator(grid, DistanceCellMap(grid, kernel.basis()).pair_weights(kernel.coeffs())) {}

CollisionOperator::CollisionOperator(const OpinionGrid& grid, std::vector<double> pair_weights)
    : grid_(grid), theta_(std::move(pair_weights)) {
  if (theta_.size() != grid_.size()) {
    throw InvalidArgument("CollisionOperator: need one pair weight per node distance");
  }
  for (std::size_t n = 0; n < theta_.size(); ++n) {
    if (theta_[n] != 0.0) reach_ = n;
  }
}

void CollisionOperator::bilinear(std::span<const double> u, std::span<const double> v,
                                 std::span<double> out) const {
  // Ordered pairs (j, k) and (k, j) share the deposit pattern, so each
  // unordered pair at distance d carries q = theta_d (u_j v_k + u_k v_j).
  const std::size_t n = grid_.size();
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> q(n);
  for (std::size_t d = 1; d <= reach_; ++d) {
    const double theta = theta_[d];
    if (theta == 0.0) continue;
    const std::size_t len = n - d;
    for (std::size_t j = 0; j < len; ++j) q[j] = theta * (u[j] * v[j + d] + u[j + d] * v[j]);
    for (std::size_t j = 0; j < len; ++j) out[j] -= q[j];
    for (std::size_t j = 0; j < len; ++j) out[j + d] -= q[j];
    deposit_midpoints(q, d, out);
  }
  for (double& o : out) o *= grid_.dx();
}

void CollisionOperator::deposit_midpoints(std::span<const double> q, std::size_t d,
                                          std::span<double> out) {
  // +2q at the midpoint of (j, j+d), split between two nodes when d is odd.
  const std::size_t len = out.size() - d;
  const std::size_t half = d / 2;
  if (d % 2 == 0) {
    for (std::size_t j = 0; j < len; ++j) out[j + half] += 2.0 * q[j];
  } else {
    for (std::size_t j = 0; j < len; ++j) out[j + half] += q[j];
    for (std::size_t j = 0; j < len; ++j) out[j + half + 1] += q[j];
  }
}

void CollisionOperator::rate(std::span<const double> f, std::span<double> out) const {
  const std::size_t n = grid_.size();
  check_size(f, n, "collision rate");
  check_size(out, n, "collision rate output");
  std::fill(out.begin(), out.end(), 0.0);
  // Unordered pairs j < k: the two ordered fluxes give q = 2 theta f_j f_k dx^2,
  // +2q at the midpoint and -q at each endpoint.
  std::vector<double> q(n);
  for (std::size_t d = 1; d <= reach_; ++d) {
    const double theta = theta_[d];
    if (theta == 0.0) continue;
    const std::size_t len = n - d;
    for (std::size_t j = 0; j < len; ++j) q[j] = 2.0 * theta * f[j] * f[j + d];
    for (std::size_t j = 0; j < len; ++j) out[j] -= q[j];
    for (std::size_t j = 0; j < len; ++j) out[j + d] -= q[j];
    deposit_midpoints(q, d, out);
  }
  for (double& o : out) o *= grid_.dx();
}

void CollisionOperator::linearized(std::span<const double> f, std::span<const double> h,
                                   std::span<double> out) const {
  const std::size_t n = grid_.size();
  check_size(f, n, "linearized collision rate");
  check_size(h, n, "linearized collision rate");
  check_size(out, n, "linearized collision rate output");
  std::vector<double> tmp(n);
  bilinear(h, f, out);
  bilinear(f, h, tmp);
  for (std::size_t i = 0; i < n; ++i) out[i] += tmp[i];
}

void CollisionOperator::adjoint(std::span<const double> g, std::span<const double> f,
                                std::span<double> out) const {
  const std::size_t n = grid_.size();
  check_size(g, n, "adjoint rate");
  check_size(f, n, "adjoint rate");
  check_size(out, n, "adjoint rate output");
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> c(n);
  for (std::size_t d = 1; d <= reach_; ++d) {
    const double theta = theta_[d];
    if (theta == 0.0) continue;
    const std::size_t len = n - d;
    const std::size_t half = d / 2;
    if (d % 2 == 0) {
      for (std::size_t j = 0; j < len; ++j) c[j] = theta * (2.0 * g[j + half] - g[j] - g[j + d]);
    } else {
      for (std::size_t j = 0; j < len; ++j) {
        c[j] = theta * (g[j + half] + g[j + half + 1] - g[j] - g[j + d]);
      }
    }
    for (std::size_t j = 0; j < len; ++j) out[j] += f[j + d] * c[j];
    for (std::size_t j = 0; j < len; ++j) out[j + d] += f[j] * c[j];
  }
  const double scale = 2.0 * grid_.dx();
  for (double& o : out) o *= scale;
}

std::vector<double> collision_rate(const OpinionDensity& f, const InteractionKernel& kernel) {
  CollisionOperator op(f.grid(), kernel);
  std::vector<double> out(f.size());
  op.rate(f.values(), out);
  return out;
}

namespace {

// Advances `f` in place by one RK4 step; `k1` must hold rate(f) on entry.
void rk4_step(const CollisionOperator& op, std::vector<double>& f, std::span<const double> k1,
              double dt) {
  const std::size_t n = f.size();
  std::vector<double> stage(n), k2(n), k3(n), k4(n);
  for (std::size_t i = 0; i < n; ++i) stage[i] = f[i] + 0.5 * dt * k1[i];
  op.rate(stage, k2);
  for (std::size_t i = 0; i < n; ++i) stage[i] = f[i] + 0.5 * dt * k2[i];
  op.rate(stage, k3);
  for (std::size_t i = 0; i < n; ++i) stage[i] = f[i] + dt * k3[i];
  op.rate(stage, k4);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }

  double lowest = 0.0;
  bool clamped = false;
  for (double& v : f) {
    if (v < 0.0) {
      lowest = std::min(lowest, v);
      v = 0.0;
      clamped = true;
    }
  }
  if (lowest < -kNegativeTolerance) {
    std::ostringstream msg;
    msg << "forward step produced f = " << lowest << " < -1e-8; reduce dt_sub (currently "
        << dt << ")";
    throw InstabilityError(msg.str());
  }
  if (clamped) {
    const double mass = grid_mass(op.grid(), f);
    for (double& v : f) v /= mass;
  }
}

}  // namespace

OpinionDensity step(const OpinionDensity& f, const InteractionKernel& kernel, double dt_sub) {
  if (!(dt_sub > 0.0)) throw InvalidArgument("step: dt_sub must be positive");
  CollisionOperator op(f.grid(), kernel);
  std::vector<double> values(f.values().begin(), f.values().end());
  std::vector<double> k1(values.size());
  op.rate(values, k1);
  rk4_step(op, values, k1, dt_sub);
  return OpinionDensity(f.grid(), std::move(values));
}

ForwardTrajectory::ForwardTrajectory(OpinionGrid grid, double dt, std::vector<double> frames,
                                     std::vector<double> rates)
    : grid_(grid), dt_(dt), count_(0), frames_(std::move(frames)), rates_(std::move(rates)) {
  const std::size_t n = grid_.size();
  if (frames_.empty() || frames_.size() % n != 0 || rates_.size() != frames_.size()) {
    throw InvalidArgument("ForwardTrajectory: frame storage does not match the grid");
  }
  count_ = frames_.size() / n;
}

std::span<const double> ForwardTrajectory::frame(std::size_t i) const {
  const std::size_t n = grid_.size();
  return std::span<const double>(frames_).subspan(i * n, n);
}

std::span<const double> ForwardTrajectory::rate(std::size_t i) const {
  const std::size_t n = grid_.size();
  return std::span<const double>(rates_).subspan(i * n, n);
}

OpinionDensity ForwardTrajectory::density(std::size_t i) const {
  auto f = frame(i);
  return OpinionDensity(grid_, std::vector<double>(f.begin(), f.end()));
}

std::vector<double> ForwardTrajectory::midpoint(std::size_t i) const {
  if (i + 1 >= count_) throw InvalidArgument("ForwardTrajectory::midpoint: no following frame");
  auto f0 = frame(i);
  auto f1 = frame(i + 1);
  auto r0 = rate(i);
  auto r1 = rate(i + 1);
  std::vector<double> out(f0.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = 0.5 * (f0[k] + f1[k]) + 0.125 * dt_ * (r0[k] - r1[k]);
  }
  return out;
}

std::size_t ForwardTrajectory::index_of(double t) const {
  const double s = t / dt_;
  const double rounded = std::round(s);
  if (std::abs(s - rounded) > 1e-9 * std::max(1.0, rounded) || rounded < 0.0 ||
      rounded > static_cast<double>(count_ - 1)) {
    std::ostringstream msg;
    msg << "time " << t << " is not a substep of the trajectory (dt = " << dt_
        << ", final time " << final_time() << ")";
    throw InvalidArgument(msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

std::size_t substep_count(double t_end, double dt_sub) {
  if (!(dt_sub > 0.0)) throw InvalidArgument("dt_sub must be positive");
  if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be nonnegative");
  const double s = t_end / dt_sub;
  const double rounded = std::round(s);
  if (std::abs(s - rounded) > 1e-9 * std::max(1.0, rounded)) {
    std::ostringstream msg;
    msg << "t_end = " << t_end << " is not an integer multiple of dt_sub = " << dt_sub;
    throw InvalidArgument(msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

ForwardTrajectory solve_forward(const OpinionDensity& f0, const InteractionKernel& kernel,
                                double t_end, double dt_sub) {
  const std::size_t steps = substep_count(t_end, dt_sub);
  const OpinionGrid& grid = f0.grid();
  const std::size_t n = grid.size();
  CollisionOperator op(grid, kernel);

  std::vector<double> frames((steps + 1) * n);
  std::vector<double> rates((steps + 1) * n);
  std::vector<double> f(f0.values().begin(), f0.values().end());
  std::copy(f.begin(), f.end(), frames.begin());
  op.rate(f, std::span<double>(rates).subspan(0, n));
  for (std::size_t s = 0; s < steps; ++s) {
    rk4_step(op, f, std::span<const double>(rates).subspan(s * n, n), dt_sub);
    std::copy(f.begin(), f.end(), frames.begin() + static_cast<std::ptrdiff_t>((s + 1) * n));
    op.rate(f, std::span<double>(rates).subspan((s + 1) * n, n));
  }
  return ForwardTrajectory(grid, dt_sub, std::move(frames), std::move(rates));
}

void write_trajectory_csv(std::ostream& out, const ForwardTrajectory& trajectory,
                          std::size_t frame_stride) {
  if (frame_stride == 0) throw InvalidArgument("write_trajectory_csv: stride must be positive");
  out << "t,x,f\n";
  const auto& grid = trajectory.grid();
  for (std::size_t i = 0; i < trajectory.frame_count(); i += frame_stride) {
    auto f = trajectory.frame(i);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      out << format_real(trajectory.time(i)) << ',' << format_real(grid.node(k)) << ','
          << format_real(f[k]) << '\n';
    }
  }
}

}  // namespace kinv
