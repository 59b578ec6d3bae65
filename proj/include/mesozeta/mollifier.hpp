#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "mesozeta/models.hpp"
#include "mesozeta/primes.hpp"

namespace mesozeta {

int mobius_mu(std::uint64_t n);
int big_omega(std::uint64_t n);

struct MollifierTerm {
  std::uint64_t m = 1;
  double coef = 1.0;         // mu(m) / sqrt(m)
  int omega = 0;             // number of prime factors
  std::uint32_t parent = 0;  // index of m / p, where p is the largest prime factor of m
  std::uint32_t prime = 0;   // index of that p in the poly's prime list
};

// Sum over squarefree m built from the range primes, Omega(m) <= omega_bound,
// m <= m_limit, of mu(m) m^{-1/2} times a phase. Terms are sorted by m, so a
// parent always precedes its children.
struct MollifierPoly {
  double k_lo = 0.0;
  double k_hi = 0.0;
  int omega_bound = 0;
  std::uint64_t m_limit = std::numeric_limits<std::uint64_t>::max();
  std::size_t first = 0;  // table index of primes[0]
  std::vector<std::uint64_t> primes;
  std::vector<double> logp;
  std::vector<MollifierTerm> terms;

  // The terms again in depth-first order, for evaluation: a step's parent is
  // the latest step with omega one less.
  struct Step {
    double coef;
    std::uint32_t prime;
    std::uint32_t omega;
  };
  std::vector<Step> preorder;

  std::uint64_t max_m() const { return terms.empty() ? 1 : terms.back().m; }
  double coef_square_sum() const;
};

inline constexpr std::size_t kDefaultMollifierTermCap = std::size_t{1} << 24;

// Depth-first enumeration. Throws ResourceError above term_cap terms.
MollifierPoly build_mollifier(const PrimeRange& range, int omega_bound,
                              std::uint64_t m_limit = std::numeric_limits<std::uint64_t>::max(),
                              std::size_t term_cap = kDefaultMollifierTermCap);
// Range given as the scale interval (k_lo, k_hi].
MollifierPoly build_mollifier(const PrimeTable& table, double k_lo, double k_hi, int omega_bound,
                              std::uint64_t m_limit = std::numeric_limits<std::uint64_t>::max(),
                              std::size_t term_cap = kDefaultMollifierTermCap);

// sum coef(m) m^{-i(tau+h)}.
std::complex<double> eval_mollifier(const MollifierPoly& poly, double tau, double h);
// sum coef(m) Z_m m^{-ih}, Z_m the product of the model's Z_p over p | m.
// The model's table must be the one the poly was built from.
std::complex<double> eval_mollifier(const MollifierPoly& poly, const RandomEulerProduct& model,
                                    double h);

struct MollifierReport {
  std::size_t samples = 0;
  std::size_t a_event = 0;    // draws with |X~(k_hi) - X~(k_lo)| <= increment_coef (k_hi - k_lo)
  std::size_t satisfied = 0;  // of those, draws where the inequality holds
  double fraction = 0.0;      // satisfied / a_event (NaN when no draw qualifies)
  double worst_ratio = 0.0;   // max of lhs / rhs over qualifying draws
  double slack = 0.0;         // 1 + e^{-k_lo}
  double mean_abs2 = 0.0;     // sample mean of |M|^2 over all draws
  double se_abs2 = 0.0;
  double coef_square_sum = 0.0;
};

struct MollifierCheckOptions {
  std::uint64_t seed = 0;
  double increment_coef = 1e3;
  double error_coef = 1e5;
  unsigned workers = 1;
};

// Over `samples` model draws (substreams of options.seed), checks
//   e^{-(X(k_hi) - X(k_lo))} <= (1 + e^{-k_lo}) |M| + e^{-error_coef (k_hi - k_lo)}
// at h = 0, where X is the model walk restricted to the poly's primes.
MollifierReport check_mollifier_inequality(const PrimeTable& table, const MollifierPoly& poly,
                                           std::size_t samples,
                                           const MollifierCheckOptions& options = {});

}  // namespace mesozeta
