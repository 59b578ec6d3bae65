#include "mesozeta/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mesozeta/errors.hpp"

namespace mesozeta {

namespace {

void fill_derived(BarrierSpec& s) {
  if (!(s.theta > -1 && s.theta <= 0)) throw std::invalid_argument("theta must lie in (-1, 0]");
  if (!(s.t > 0)) throw std::invalid_argument("t must be > 0");
  s.t_prime = s.t * (1 + s.theta);
  s.t_theta = std::fabs(s.theta) * s.t;
  s.t0 = s.t_prime / 2;
  s.t1 = s.t_prime - s.s_const * std::log(s.t_prime);
  if (!(s.t_prime > 0)) throw std::invalid_argument("t(1+theta) must be > 0");
}

void require_curve_domain(const BarrierSpec& s, double k) {
  if (std::isnan(k) || k < 1 || k >= s.t_prime) {
    throw DomainError("barrier curves are defined for 1 <= k < t(1+theta)");
  }
}

// Value of the walk at the last sample <= k (0 before the first sample).
double value_at_or_before(std::span<const double> times, std::span<const double> vals, double k) {
  const auto it = std::upper_bound(times.begin(), times.end(), k);
  if (it == times.begin()) return 0.0;
  return vals[static_cast<std::size_t>(it - times.begin()) - 1];
}

// Standard normal mass of [a, b] with a, b >= 0 or symmetric use, computed
// from erfc so far tails keep their relative accuracy.
double normal_mass(double a, double b) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  if (a >= 0) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  if (b <= 0) return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  return 1.0 - 0.5 * (std::erfc(-a * kInvSqrt2) + std::erfc(b * kInvSqrt2));
}

double cell_fraction_below(double x, double eta, double b) {
  if (b == kPlusInf) return 1.0;
  return std::clamp((b - (x - 0.5 * eta)) / eta, 0.0, 1.0);
}

double cell_fraction_within(double x, double eta, double lo, double hi) {
  const double a = std::max(lo, x - 0.5 * eta);
  const double b = std::min(hi, x + 0.5 * eta);
  return b > a ? (b - a) / eta : 0.0;
}

// Cell-mass propagation on the lattice start + i*eta.
double propagate(std::span<const double> barrier, double start, double lo, double hi,
                 std::span<const double> vars, double eta, double ks) {
  double total_var = 0.0;
  for (double v : vars) total_var += v;
  const double spread = ks * std::sqrt(total_var);
  double top = start, bottom = start;
  for (double b : barrier) {
    if (std::isfinite(b)) {
      top = std::max(top, b);
      bottom = std::min(bottom, b);
    }
  }
  if (std::isfinite(lo)) top = std::max(top, lo);
  if (std::isfinite(hi)) bottom = std::min(bottom, hi);
  const auto i_lo = static_cast<long>(std::floor((bottom - spread - start) / eta));
  const auto i_hi = static_cast<long>(std::ceil((top + spread - start) / eta));
  const auto cells = static_cast<std::size_t>(i_hi - i_lo + 1);
  check_memory_budget(2 * cells * sizeof(double), "ballot DP grid");

  std::vector<double> mass(cells, 0.0), next(cells, 0.0), w;
  const auto origin = static_cast<std::size_t>(-i_lo);
  mass[origin] = 1.0;
  auto x_of = [&](std::size_t i) { return start + (static_cast<double>(i_lo) + static_cast<double>(i)) * eta; };

  // occupied index range, to skip empty cells
  std::size_t first = origin, last = origin;
  for (std::size_t j = 0; j < barrier.size(); ++j) {
    const double sd = std::sqrt(vars[j]);
    const auto half = sd > 0 ? static_cast<std::size_t>(std::ceil(ks * sd / eta)) : 0;
    w.assign(2 * half + 1, 0.0);
    if (sd > 0) {
      for (std::size_t d = 0; d <= half; ++d) {
        const double a = (static_cast<double>(d) - 0.5) / (sd / eta);
        const double b = (static_cast<double>(d) + 0.5) / (sd / eta);
        w[half + d] = w[half - d] = normal_mass(a, b);
      }
    } else {
      w[0] = 1.0;
    }
    std::fill(next.begin(), next.end(), 0.0);
    const std::size_t new_first = first > half ? first - half : 0;
    const std::size_t new_last = std::min(cells - 1, last + half);
    for (std::size_t src = first; src <= last; ++src) {
      const double m = mass[src];
      if (m == 0.0) continue;
      const std::size_t d0 = src >= half ? 0 : half - src;
      const std::size_t d1 = std::min(2 * half, cells - 1 + half - src);
      double* dst = next.data() + (src + d0 - half);
      const double* wk = w.data() + d0;
      const std::size_t len = d1 - d0 + 1;
#pragma GCC ivdep
      for (std::size_t d = 0; d < len; ++d) dst[d] = std::fma(m, wk[d], dst[d]);
    }
    // Cut at the barrier. The surviving part of a straddling cell has its
    // centroid below the node; sharing it with the node underneath keeps that
    // first moment, which makes the scheme second order in eta.
    const double b = barrier[j];
    if (j + 1 == barrier.size()) {
      // last step: barrier and window together, cutting each cell once
      const double top = std::min(hi, b);
      double p = 0.0;
      for (std::size_t i = new_first; i <= new_last; ++i) {
        p += next[i] * cell_fraction_within(x_of(i), eta, lo, top);
      }
      return p;
    }
    if (b != kPlusInf) {
      for (std::size_t i = new_first; i <= new_last; ++i) {
        const double f = cell_fraction_below(x_of(i), eta, b);
        if (f == 1.0) continue;
        const double kept = next[i] * f;
        next[i] = 0.0;
        if (kept == 0.0) continue;
        const double shift = 0.5 * (1.0 - f);  // centroid offset in cells
        next[i] += kept * (1.0 - shift);
        if (i > 0) next[i - 1] += kept * shift;
      }
    }
    mass.swap(next);
    first = new_first;
    last = new_last;
  }
  return 0.0;  // unreachable: barrier is non-empty
}

}  // namespace

std::optional<double> BarrierSpec::schedule(int ell) const {
  if (ell < 1) throw std::invalid_argument("schedule index must be >= 1");
  double v = t_prime;
  for (int i = 0; i < ell; ++i) {
    if (!(v > 0)) return std::nullopt;
    v = std::log(v);
  }
  if (!(v > 0)) return std::nullopt;
  return t_prime - s_const * v;
}

std::vector<double> BarrierSpec::block_boundaries() const {
  std::vector<double> b = {0.0, t0};
  for (int ell = 1;; ++ell) {
    const auto tl = schedule(ell);
    if (!tl) break;
    if (*tl > b.back() && *tl < t_prime) b.push_back(*tl);
  }
  b.push_back(t_prime);
  return b;
}

BarrierSpec make_max_spec(double t, double theta, double y, double s_const) {
  if (!(y >= 1)) throw std::invalid_argument("y must be >= 1");
  BarrierSpec s;
  s.mode = BarrierMode::max_barrier;
  s.t = t;
  s.theta = theta;
  s.y = y;
  s.s_const = s_const;
  fill_derived(s);
  return s;
}

double default_partial_s_const(double alpha) {
  if (!(alpha > 0 && alpha < 2)) throw std::invalid_argument("alpha must lie in (0, 2)");
  return 2e6 / (alpha * alpha * (2 - alpha) * (2 - alpha));
}

BarrierSpec make_partial_spec(double t, double theta, double A, double alpha,
                              std::optional<double> s_const, double log_coef) {
  if (!(A >= 1)) throw std::invalid_argument("A must be >= 1");
  BarrierSpec s;
  s.mode = BarrierMode::partial_barrier;
  s.t = t;
  s.theta = theta;
  s.A = A;
  s.alpha = alpha;
  s.s_const = s_const ? *s_const : default_partial_s_const(alpha);
  s.log_coef = log_coef;
  if (!(alpha > 0 && alpha < 2)) throw std::invalid_argument("alpha must lie in (0, 2)");
  fill_derived(s);
  return s;
}

double centering_m(const BarrierSpec& spec, double k) {
  if (!(k >= 0)) throw DomainError("centering needs k >= 0");
  const double tp = spec.t_prime;
  return k * (1.0 - 0.75 * std::log(tp) / tp);
}

double upper_barrier_U(const BarrierSpec& spec, double k) {
  require_curve_domain(spec, k);
  if (k < spec.y / 4) return kPlusInf;
  if (k < spec.t0) return spec.y + spec.log_coef * std::log(k);
  return spec.y + spec.log_coef * std::log(spec.t_prime - k);
}

double lower_barrier_L(const BarrierSpec& spec, double k) {
  require_curve_domain(spec, k);
  if (k < spec.y / 4) return kMinusInf;
  if (k < spec.t0) return spec.y - spec.lower_coef * k;
  return spec.y - spec.lower_coef * (spec.t_prime - k);
}

double partial_barrier_UA(const BarrierSpec& spec, double k) {
  if (!(k >= 0) || k > spec.t1) throw DomainError("U_A is defined for 0 <= k <= t1");
  return spec.A + centering_m(spec, k) + spec.log_coef * std::log(spec.t_prime - k);
}

unsigned EventFlags::bits() const {
  return (A ? 1u : 0u) | (B ? 2u : 0u) | (C ? 4u : 0u) | (G_A ? 8u : 0u) | (window ? 16u : 0u);
}

EventFlags check_events(const WalkTrajectory& traj, const BarrierSpec& spec,
                        std::optional<WindowQuery> window) {
  traj.validate();
  EventFlags f;
  const std::span<const double> times = traj.times, vals = traj.values, imag = traj.imag;
  const bool complex_walk = !imag.empty();

  for (std::size_t i = 0; i < times.size(); ++i) {
    const double k = times[i], s = vals[i];
    if (k >= 1 && k < spec.t_prime) {
      const double m = centering_m(spec, k);
      if (f.B && !(s <= m + upper_barrier_U(spec, k))) {
        f.B = false;
        f.B_first = k;
      }
      if (f.C && !(s > m + lower_barrier_L(spec, k))) {
        f.C = false;
        f.C_first = k;
      }
    }
    if (k >= 0 && k <= spec.t1 && f.G_A && !(s <= partial_barrier_UA(spec, k))) {
      f.G_A = false;
      f.G_A_first = k;
    }
  }

  const std::vector<double> blocks = spec.block_boundaries();
  for (std::size_t b = 1; b < blocks.size() && f.A; ++b) {
    const double lo = blocks[b - 1], hi = blocks[b];
    const double bound = spec.increment_coef * (hi - lo);
    const double base_re = value_at_or_before(times, vals, lo);
    const double base_im = complex_walk ? value_at_or_before(times, imag, lo) : 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!(times[i] > lo && times[i] <= hi)) continue;
      const double d_im = complex_walk ? imag[i] - base_im : 0.0;
      if (!(std::hypot(vals[i] - base_re, d_im) <= bound)) {
        f.A = false;
        f.A_first = times[i];
        break;
      }
    }
  }

  if (window) {
    const auto tl = spec.schedule(window->ell);
    if (!tl || times.empty() || times.front() > *tl) {
      f.window = false;
    } else {
      const double s = value_at_or_before(times, vals, *tl);
      f.window = s > window->v && s <= window->v + 1;
    }
  }
  return f;
}

BallotResult ballot_dp(std::span<const double> barrier, double start, double lo, double hi,
                       std::span<const double> step_variances, const BallotOptions& options) {
  if (barrier.empty()) throw std::invalid_argument("ballot_dp needs n >= 1");
  if (step_variances.size() != barrier.size()) {
    throw std::invalid_argument("one variance per step is required");
  }
  if (!(options.eta > 0) || !std::isfinite(options.eta)) throw std::invalid_argument("eta must be > 0");
  if (!std::isfinite(start)) throw std::invalid_argument("start must be finite");
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) throw std::invalid_argument("bad terminal window");
  for (double b : barrier) {
    if (std::isnan(b) || b == kMinusInf) throw std::invalid_argument("barrier values must be > -inf");
  }
  for (double v : step_variances) {
    if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument("step variances must be >= 0");
  }
  BallotResult r;
  r.eta = options.eta;
  r.coarse = propagate(barrier, start, lo, hi, step_variances, options.eta, options.kernel_sigmas);
  r.fine = propagate(barrier, start, lo, hi, step_variances, options.eta / 2, options.kernel_sigmas);
  r.probability = r.fine + (r.fine - r.coarse) / 3;
  r.error = std::fabs(r.fine - r.coarse) / 3;
  const double tol = options.relative_tolerance ? options.tolerance * std::fabs(r.probability)
                                                : options.tolerance;
  r.too_coarse = r.error > tol;
  return r;
}

BallotResult ballot_dp(std::span<const double> barrier, double start, double lo, double hi,
                       const BallotOptions& options) {
  const std::vector<double> vars(barrier.size(), 0.5);
  return ballot_dp(barrier, start, lo, hi, vars, options);
}

double ballot_asymptotic(double A, double V, double t1, double t_prime, double log_coef) {
  if (!(t1 > 0) || !(t_prime > t1)) throw DomainError("ballot_asymptotic needs 0 < t1 < t'");
  const double ua = A + t1 * (1.0 - 0.75 * std::log(t_prime) / t_prime) +
                    log_coef * std::log(t_prime - t1);
  return A * (ua - V * (t1 / t_prime)) / t1 * std::exp(-V * V / t_prime) / std::sqrt(t_prime);
}

}  // namespace mesozeta
