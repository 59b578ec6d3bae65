#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mesozeta/dirichlet.hpp"

namespace mesozeta {

inline constexpr double kPlusInf = std::numeric_limits<double>::infinity();
inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

enum class BarrierMode { max_barrier, partial_barrier };

// Curves and constants of the barrier scheme. Construct with make_max_spec or
// make_partial_spec; the derived times are filled in there.
struct BarrierSpec {
  BarrierMode mode = BarrierMode::max_barrier;
  double t = 0.0;       // log log T
  double theta = 0.0;   // in (-1, 0]
  double y = 1.0;       // max-barrier level, >= 1
  double A = 1.0;       // partial-barrier level, >= 1
  double alpha = 1.0;   // V / t', in (0, 2) for the large-deviation scheme
  double s_const = 1e6;     // the schedule constant
  double log_coef = 1e3;    // coefficient of the log in U_y and U_A
  double lower_coef = 20.0; // slope of the lower barrier L_y
  double increment_coef = 1e3;  // A-event bound per unit of scale

  // derived
  double t_prime = 0.0;  // t(1+theta)
  double t_theta = 0.0;  // |theta| t
  double t0 = 0.0;       // t'/2
  double t1 = 0.0;       // t' - s_const log t'

  // Schedule t_l = t' - s_const * log_l(t'), l >= 1 (iterated logarithm).
  // Returns nullopt once log_l(t') is undefined or <= 0.
  std::optional<double> schedule(int ell) const;
  // Block boundaries for the A-event: 0, t0, then every schedule point in
  // (t0, t'), then t'.
  std::vector<double> block_boundaries() const;
};

// Max scheme: s_const defaults to 1e6.
BarrierSpec make_max_spec(double t, double theta, double y, double s_const = 1e6);
// Theorem-1.5 scheme: s_const defaults to 2e6 / (alpha^2 (2 - alpha)^2).
BarrierSpec make_partial_spec(double t, double theta, double A, double alpha,
                              std::optional<double> s_const = std::nullopt,
                              double log_coef = 1e3);

double default_partial_s_const(double alpha);

// k (1 - (3/4) log t'/t').
double centering_m(const BarrierSpec& spec, double k);

// U_y(k) for 1 <= k < t'. +infinity (L: -infinity) for k < y/4; where two
// branches overlap (y/4 <= k <= ceil(y/4), and k = t0) the later one applies.
// Throws DomainError outside [1, t').
double upper_barrier_U(const BarrierSpec& spec, double k);
double lower_barrier_L(const BarrierSpec& spec, double k);

// U_A(k) = A + m(k) + log_coef log(t' - k), 0 <= k <= t1.
double partial_barrier_UA(const BarrierSpec& spec, double k);

struct EventFlags {
  bool A = true;    // increment bound on every block
  bool B = true;    // below m + U_y
  bool C = true;    // above m + L_y
  bool G_A = true;  // below U_A up to t1
  bool window = true;
  // first sampled time at which each predicate fails (NaN when it holds)
  double A_first = std::numeric_limits<double>::quiet_NaN();
  double B_first = std::numeric_limits<double>::quiet_NaN();
  double C_first = std::numeric_limits<double>::quiet_NaN();
  double G_A_first = std::numeric_limits<double>::quiet_NaN();

  // bit 0 A, 1 B, 2 C, 3 G_A, 4 window
  unsigned bits() const;
};

// Window membership test: walk value at the last sample <= t_ell lies in (v, v+1].
struct WindowQuery {
  int ell = 1;
  double v = 0.0;
};

// Evaluates the predicates at the trajectory's sampled times only. The
// trajectory is the shifted walk (times measured from t_theta). B and C are
// checked where the curves are defined (1 <= k < t'); G_A on 0 <= k <= t1.
// The A-event uses the complex walk when imaginary parts are present.
EventFlags check_events(const WalkTrajectory& traj, const BarrierSpec& spec,
                        std::optional<WindowQuery> window = std::nullopt);

struct BallotResult {
  double probability = 0.0;  // Richardson extrapolation of the two grids
  double coarse = 0.0;       // at step eta
  double fine = 0.0;         // at step eta/2
  double error = 0.0;        // |fine - coarse| / 3
  double eta = 0.0;
  bool too_coarse = false;   // error above the requested tolerance
};

struct BallotOptions {
  double eta = 0.02;
  double tolerance = kPlusInf;  // absolute
  bool relative_tolerance = false;
  double kernel_sigmas = 12.0;
};

// P(W_j <= barrier[j-1] for j = 1..n, W_n in [lo, hi]) for the walk W_0 =
// start with independent centered Gaussian steps of the given variances.
// barrier entries may be +infinity; lo/hi may be infinite.
BallotResult ballot_dp(std::span<const double> barrier, double start, double lo, double hi,
                       std::span<const double> step_variances, const BallotOptions& options = {});
// Same with every step of variance 1/2.
BallotResult ballot_dp(std::span<const double> barrier, double start, double lo, double hi,
                       const BallotOptions& options = {});

// A (U_A(t1) - V t1/t') / t1 * e^{-V^2/t'} / sqrt(t'), with
// U_A(t1) = A + t1 (1 - (3/4) log t'/t') + log_coef log(t' - t1).
double ballot_asymptotic(double A, double V, double t1, double t_prime, double log_coef = 1e3);

}  // namespace mesozeta
