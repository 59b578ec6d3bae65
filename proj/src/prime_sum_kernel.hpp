#pragma once

// Shared evaluation core for prime sums of the form
//
//   sum_p  Re( z_p(h) / sqrt(p) + z_p(h)^2 / (2p) ),   z_p(h) = e^{i(c_p - h log p)}
//
// where the per-prime offset c_p is -tau*log p for the Dirichlet sums and the
// random angle for the Euler-product model. Summation runs over ascending
// primes in fixed blocks, identically for the pointwise and grid paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

namespace mesozeta::detail {

inline constexpr long double kTwoPiL = 6.283185307179586476925286766559005768L;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr std::size_t kPrimeBlock = 4096;
inline constexpr std::size_t kGridChunk = 2048;
inline constexpr std::size_t kLanes = 16;

// x*logp reduced into [0, 2pi) with an extended-precision product.
inline double reduce_phase(double x, double logp) {
  long double r = std::fmod(static_cast<long double>(x) * static_cast<long double>(logp), kTwoPiL);
  if (r < 0) r += kTwoPiL;
  return static_cast<double>(r);
}

// Phase psi with z = e^{-i psi}: psi = tau*log p + h*log p, reduced.
inline double dirichlet_phase(double tau, double h, double logp) {
  long double r = std::fmod(static_cast<long double>(tau) * static_cast<long double>(logp), kTwoPiL);
  r += static_cast<long double>(h) * static_cast<long double>(logp);
  r = std::fmod(r, kTwoPiL);
  if (r < 0) r += kTwoPiL;
  return static_cast<double>(r);
}

struct Weights {
  double a;  // p^{-1/2}
  double b;  // 1/(2p), formed as a*a/2 so every path rounds it identically
};

inline Weights prime_weights(double inv_sqrt) { return {inv_sqrt, 0.5 * inv_sqrt * inv_sqrt}; }

// a*z + b*z^2 for a unit complex z = x + iy.
inline std::complex<double> prime_term(Weights w, double x, double y) {
  const double re = std::fma(w.a, x, w.b * ((x - y) * (x + y)));
  const double im = std::fma(w.a, y, w.b * (2.0 * x * y));
  return {re, im};
}

// Complex sum over the primes, z_i = unit(i) (a std::complex<double> of modulus 1).
template <class UnitFn>
std::complex<double> sum_terms(std::span<const double> inv_sqrt, UnitFn unit) {
  double total_re = 0.0, total_im = 0.0;
  for (std::size_t b0 = 0; b0 < inv_sqrt.size(); b0 += kPrimeBlock) {
    const std::size_t b1 = std::min(inv_sqrt.size(), b0 + kPrimeBlock);
    double re = 0.0, im = 0.0;
    for (std::size_t i = b0; i < b1; ++i) {
      const std::complex<double> z = unit(i);
      const std::complex<double> t = prime_term(prime_weights(inv_sqrt[i]), z.real(), z.imag());
      re += t.real();
      im += t.imag();
    }
    total_re += re;
    total_im += im;
  }
  return {total_re, total_im};
}

// Real part only; bit-identical to sum_terms(...).real().
template <class UnitFn>
double sum_terms_real(std::span<const double> inv_sqrt, UnitFn unit) {
  double total = 0.0;
  for (std::size_t b0 = 0; b0 < inv_sqrt.size(); b0 += kPrimeBlock) {
    const std::size_t b1 = std::min(inv_sqrt.size(), b0 + kPrimeBlock);
    double re = 0.0;
    for (std::size_t i = b0; i < b1; ++i) {
      const std::complex<double> z = unit(i);
      re += prime_term(prime_weights(inv_sqrt[i]), z.real(), z.imag()).real();
    }
    total += re;
  }
  return total;
}

// Grid evaluation. For grid points h_j = point(j), j in [j_begin, j_end),
// out[j - j_begin] = sum over primes of Re(term(z_i(h_j))).
//
// unit_at(i, h) must return z_i(h) exactly; it is called once per prime per
// chunk. Inside a chunk z advances by the per-prime rotation e^{-i delta log p}
// in kLanes interleaved lanes, so every lane restarts from an exact phase at
// least every kGridChunk / kLanes steps.
template <class UnitAtFn, class PointFn>
void grid_sum(std::span<const double> inv_sqrt, std::span<const double> logp,
              double delta, std::size_t j_begin, std::size_t j_end, PointFn point,
              UnitAtFn unit_at, double* out) {
  alignas(64) double acc[kGridChunk];
  alignas(64) double block[kGridChunk];
  alignas(64) double xr[kLanes];
  alignas(64) double xi[kLanes];

  for (std::size_t c0 = j_begin; c0 < j_end; c0 += kGridChunk) {
    const std::size_t len = std::min(kGridChunk, j_end - c0);
    std::fill(acc, acc + len, 0.0);
    const double h_start = point(c0);

    for (std::size_t b0 = 0; b0 < inv_sqrt.size(); b0 += kPrimeBlock) {
      const std::size_t b1 = std::min(inv_sqrt.size(), b0 + kPrimeBlock);
      std::fill(block, block + len, 0.0);
      for (std::size_t i = b0; i < b1; ++i) {
        const Weights w = prime_weights(inv_sqrt[i]);
        const std::complex<double> z0 = unit_at(i, h_start);
        const double step = delta * logp[i];
        const std::complex<double> r(std::cos(step), -std::sin(step));
        std::complex<double> big = r;
        for (std::size_t s = 1; s < kLanes; s <<= 1) big *= big;
        std::complex<double> z = z0;
        for (std::size_t l = 0; l < kLanes; ++l) {
          xr[l] = z.real();
          xi[l] = z.imag();
          z *= r;
        }
        const double rr = big.real(), ri = big.imag();
        std::size_t m = 0;
        for (; m + kLanes <= len; m += kLanes) {
          double* dst = block + m;
#pragma GCC ivdep
          for (std::size_t l = 0; l < kLanes; ++l) {
            const double x = xr[l], y = xi[l];
            dst[l] += std::fma(w.a, x, w.b * ((x - y) * (x + y)));
            xr[l] = std::fma(x, rr, -(y * ri));
            xi[l] = std::fma(x, ri, y * rr);
          }
        }
        for (std::size_t l = 0; m + l < len; ++l) {
          const double x = xr[l], y = xi[l];
          block[m + l] += std::fma(w.a, x, w.b * ((x - y) * (x + y)));
        }
      }
      for (std::size_t j = 0; j < len; ++j) acc[j] += block[j];
    }
    std::copy(acc, acc + len, out + (c0 - j_begin));
  }
}

// Runs fn(begin, end) over [0, n) on up to `workers` threads. Splits fall on
// kGridChunk boundaries so grid_sum restarts at the same points whatever the
// worker count.
template <class Fn>
void parallel_grid(std::size_t n, unsigned workers, Fn fn) {
  const std::size_t chunks = (n + kGridChunk - 1) / kGridChunk;
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), chunks));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t per = (chunks + workers - 1) / workers * kGridChunk;
  std::vector<std::thread> pool;
  for (std::size_t b = 0; b < n; b += per) pool.emplace_back(fn, b, std::min(n, b + per));
  for (auto& th : pool) th.join();
}

}  // namespace mesozeta::detail
