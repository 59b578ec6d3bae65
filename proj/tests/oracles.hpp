// Independent reference computations for the tests. Nothing here shares code
// with the library.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace oracle {

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

inline std::vector<std::uint64_t> primes_up_to(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t k = 2; k <= n; ++k) {
    if (is_prime(k)) out.push_back(k);
  }
  return out;
}

// S_k(tau + h) summed directly in long double over the given primes.
// stored_logs: use log p rounded to double, as a prime table holds it. At
// large tau the rounding of log p alone moves the phase by ~tau * 1e-16.
inline double prime_sum(const std::vector<std::uint64_t>& primes, double k, double tau, double h,
                        bool stored_logs = false) {
  const long double bound = std::exp(static_cast<long double>(k));
  long double s = 0;
  for (std::uint64_t p : primes) {
    long double lp = std::log(static_cast<long double>(p));
    if (stored_logs) lp = static_cast<double>(std::log(static_cast<double>(p)));
    if (lp > bound) break;
    const long double ph = std::fmod(static_cast<long double>(tau) * lp, 2 * M_PIl) +
                           static_cast<long double>(h) * lp;
    s += std::cos(ph) / std::sqrt(static_cast<long double>(p)) +
         std::cos(2 * ph) / (2 * static_cast<long double>(p));
  }
  return static_cast<double>(s);
}

inline int mobius(std::uint64_t n) {
  int mu = 1;
  for (std::uint64_t p = 2; p <= n; ++p) {
    if (n % p) continue;
    n /= p;
    if (n % p == 0) return 0;
    mu = -mu;
  }
  return mu;
}

inline double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace oracle
