#include "mesozeta/dirichlet.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mesozeta/errors.hpp"
#include "prime_sum_kernel.hpp"

namespace mesozeta {

namespace {

void require_finite(double tau, double h) {
  if (!std::isfinite(tau) || !std::isfinite(h)) {
    throw std::invalid_argument("tau and h must be finite");
  }
}

auto dirichlet_unit(const PrimeRange& range, double tau, double h) {
  return [&range, tau, h](std::size_t i) {
    return std::polar(1.0, -detail::dirichlet_phase(tau, h, range.logp[i]));
  };
}

}  // namespace

HGrid::HGrid(double center, double half_width, double spacing)
    : center_(center), half_width_(half_width), spacing_(spacing) {
  if (!std::isfinite(center) || !std::isfinite(half_width) || half_width < 0) {
    throw std::invalid_argument("HGrid: half-width must be finite and >= 0");
  }
  if (!(spacing > 0) || !std::isfinite(spacing)) {
    throw std::invalid_argument("HGrid: spacing must be > 0");
  }
  // The relative slack keeps e.g. 0.3/0.1 from flooring to 2.
  const double ratio = half_width / spacing;
  if (ratio > 1e12) throw ResourceError("HGrid: too many points");
  half_count_ = static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-12)));
}

double HGrid::point(std::size_t i) const {
  return center_ + (static_cast<double>(i) - static_cast<double>(half_count_)) * spacing_;
}

std::vector<double> HGrid::points() const {
  std::vector<double> pts(size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = point(i);
  return pts;
}

std::string_view to_string(WalkKind kind) {
  switch (kind) {
    case WalkKind::S: return "S";
    case WalkKind::S_tilde_real: return "S_tilde_real";
    case WalkKind::shifted: return "shifted";
    case WalkKind::gaussian: return "gaussian";
    case WalkKind::model: return "model";
  }
  return "?";
}

void WalkTrajectory::validate() const {
  if (times.size() != values.size()) throw std::invalid_argument("trajectory: size mismatch");
  if (!imag.empty() && imag.size() != values.size()) {
    throw std::invalid_argument("trajectory: imag size mismatch");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i])) {
      throw std::invalid_argument("trajectory: non-finite entry");
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw std::invalid_argument("trajectory: times not strictly increasing");
    }
    if (kind == WalkKind::shifted && times[i] == 0.0 && values[i] != 0.0) {
      throw std::invalid_argument("trajectory: shifted walk must vanish at time 0");
    }
  }
}

std::vector<double> WalkTrajectory::increments() const {
  std::vector<double> inc(values.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    inc[i] = values[i] - prev;
    prev = values[i];
  }
  return inc;
}

double eval_range(const PrimeRange& range, double tau, double h) {
  require_finite(tau, h);
  return detail::sum_terms_real(range.inv_sqrt, dirichlet_unit(range, tau, h));
}

std::complex<double> eval_range_tilde(const PrimeRange& range, double tau, double h) {
  require_finite(tau, h);
  return detail::sum_terms(range.inv_sqrt, dirichlet_unit(range, tau, h));
}

double eval_S(const PrimeTable& table, double k, double tau, double h) {
  return eval_range(table.slice(0, table.count_up_to_scale(k)), tau, h);
}

std::complex<double> eval_S_tilde(const PrimeTable& table, double k, double tau, double h) {
  return eval_range_tilde(table.slice(0, table.count_up_to_scale(k)), tau, h);
}

double eval_shifted(const PrimeTable& table, double k, double t_theta, double tau, double h) {
  if (!(k >= 0)) throw std::invalid_argument("eval_shifted: k must be >= 0");
  require_finite(tau, h);
  if (k == 0) return 0.0;
  return eval_range(table.primes_in_scale(t_theta, t_theta + k), tau, h);
}

std::vector<double> eval_range_grid(const PrimeRange& range, double tau, const HGrid& grid,
                                    const GridOptions& options) {
  require_finite(tau, grid.center());
  check_memory_budget(grid.size() * sizeof(double), "grid of " + std::to_string(grid.size()) + " points");
  std::vector<double> out(grid.size(), 0.0);
  auto unit_at = [&range, tau](std::size_t i, double h) {
    return std::polar(1.0, -detail::dirichlet_phase(tau, h, range.logp[i]));
  };
  auto point = [&grid](std::size_t j) { return grid.point(j); };
  detail::parallel_grid(out.size(), options.workers, [&](std::size_t b, std::size_t e) {
    detail::grid_sum(range.inv_sqrt, range.logp, grid.spacing(), b, e, point, unit_at, out.data() + b);
  });
  return out;
}

std::vector<double> eval_grid(const PrimeTable& table, double k, double tau, const HGrid& grid,
                              const GridOptions& options) {
  return eval_range_grid(table.slice(0, table.count_up_to_scale(k)), tau, grid, options);
}

namespace {

// Accumulates the complex prime sum up to each requested time in one pass.
WalkTrajectory accumulate_trajectory(const PrimeTable& table, std::span<const double> times,
                                     double base_scale, double tau, double h, bool keep_imag) {
  require_finite(tau, h);
  WalkTrajectory traj;
  traj.times.assign(times.begin(), times.end());
  traj.values.resize(times.size());
  if (keep_imag) traj.imag.resize(times.size());
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("trajectory times must ascend");
  }
  std::size_t cursor = table.count_up_to_scale(base_scale);
  std::complex<double> running = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double scale = std::isinf(base_scale) ? times[i] : base_scale + times[i];
    const std::size_t next = std::max(cursor, table.count_up_to_scale(scale));
    if (next > cursor) {
      running += eval_range_tilde(table.slice(cursor, next), tau, h);
      cursor = next;
    }
    traj.values[i] = running.real();
    if (keep_imag) traj.imag[i] = running.imag();
  }
  return traj;
}

}  // namespace

WalkTrajectory walk_trajectory(const PrimeTable& table, std::span<const double> times, double tau,
                               double h) {
  WalkTrajectory traj = accumulate_trajectory(table, times, -std::numeric_limits<double>::infinity(),
                                              tau, h, true);
  traj.kind = WalkKind::S;
  traj.origin = {tau, h, 0.0, 0.0};
  return traj;
}

WalkTrajectory shifted_trajectory(const PrimeTable& table, std::span<const double> times,
                                  double t_theta, double tau, double h) {
  if (!times.empty() && times.front() < 0) throw std::invalid_argument("shifted times must be >= 0");
  WalkTrajectory traj = accumulate_trajectory(table, times, t_theta, tau, h, true);
  traj.kind = WalkKind::shifted;
  traj.origin = {tau, h, 0.0, t_theta};
  return traj;
}

}  // namespace mesozeta
