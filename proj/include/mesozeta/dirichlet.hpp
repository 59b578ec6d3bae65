#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mesozeta/primes.hpp"

namespace mesozeta {

// Evenly spaced h-points symmetric about `center`:
//   h_i = center + (i - n) * spacing,  i = 0..2n,  n = floor(half_width / spacing).
class HGrid {
 public:
  HGrid(double center, double half_width, double spacing);

  double center() const { return center_; }
  double half_width() const { return half_width_; }
  double spacing() const { return spacing_; }
  std::size_t half_count() const { return half_count_; }
  std::size_t size() const { return 2 * half_count_ + 1; }
  double point(std::size_t i) const;
  std::vector<double> points() const;

 private:
  double center_;
  double half_width_;
  double spacing_;
  std::size_t half_count_;
};

enum class WalkKind { S, S_tilde_real, shifted, gaussian, model };

std::string_view to_string(WalkKind kind);

struct WalkOrigin {
  double tau_or_seed = 0.0;
  double h = 0.0;
  double theta = 0.0;
  double t = 0.0;
};

// Values of a walk at ascending scale times. `imag` is either empty or holds
// the imaginary parts of the complex walk at the same times.
struct WalkTrajectory {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> imag;
  WalkKind kind = WalkKind::S;
  WalkOrigin origin;

  // Throws std::invalid_argument if the invariants do not hold.
  void validate() const;
  // values[i] - values[i-1] (with values[-1] = 0).
  std::vector<double> increments() const;
};

struct GridOptions {
  unsigned workers = 1;
};

// S_k(h) = sum_{log p <= e^k} Re(p^{-1/2-i(tau+h)} + p^{-1-2i(tau+h)}/2).
double eval_S(const PrimeTable& table, double k, double tau, double h);

// The complex sum whose real part is eval_S (bit-identically).
std::complex<double> eval_S_tilde(const PrimeTable& table, double k, double tau, double h);

// S_{t_theta + k}(h) - S_{t_theta}(h), summed directly over
// e^{t_theta} < log p <= e^{t_theta + k}.
double eval_shifted(const PrimeTable& table, double k, double t_theta, double tau, double h);

// The same sums over an explicit prime range.
double eval_range(const PrimeRange& range, double tau, double h);
std::complex<double> eval_range_tilde(const PrimeRange& range, double tau, double h);

// eval_S at every grid point, by rotation recurrence.
std::vector<double> eval_grid(const PrimeTable& table, double k, double tau, const HGrid& grid,
                              const GridOptions& options = {});
std::vector<double> eval_range_grid(const PrimeRange& range, double tau, const HGrid& grid,
                                    const GridOptions& options = {});

// S_k(h) sampled at `times` (ascending). One pass over the primes.
WalkTrajectory walk_trajectory(const PrimeTable& table, std::span<const double> times,
                               double tau, double h);

// Shifted walk S_{t_theta+k} - S_{t_theta} at `times` (ascending, >= 0),
// with imaginary parts recorded.
WalkTrajectory shifted_trajectory(const PrimeTable& table, std::span<const double> times,
                                  double t_theta, double tau, double h);

}  // namespace mesozeta
