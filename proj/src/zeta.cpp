#include "mesozeta/zeta.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/math/special_functions/bernoulli.hpp>

#include "mesozeta/dirichlet.hpp"
#include "mesozeta/errors.hpp"
#include "rs_coefficients.hpp"

namespace mesozeta {

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279502884L;
constexpr long double kTwoPiL = 2 * kPiL;

long double reduce(long double x) {
  long double r = std::fmod(x, kTwoPiL);
  if (r < 0) r += kTwoPiL;
  return r;
}

// theta(t) in extended precision; callers reduce mod 2pi as needed.
long double theta_ext(double t) {
  const long double tl = t;
  const long double t2 = 1.0L / (tl * tl);
  const long double main = tl / 2 * std::log(tl / kTwoPiL) - tl / 2 - kPiL / 8;
  const long double corr = (1.0L / 48 + t2 * (7.0L / 5760 + t2 * (31.0L / 80640))) / tl;
  return main + corr;
}

double horner(std::span<const double> c, double x) {
  double s = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) s = s * x + c[i];
  return s;
}

// Gabcke's bounds for 1..4 correction terms (valid for t >= 200; used as the
// reported estimate for all t >= 50).
constexpr std::array<double, 4> kGabckeConst = {0.127, 0.053, 0.011, 0.031};
constexpr std::array<double, 4> kGabckeExp = {-0.75, -1.25, -1.75, -2.25};

}  // namespace

double rs_theta(double t) {
  if (!(t >= 1)) throw DomainError("rs_theta: asymptotic series needs t >= 1");
  return static_cast<double>(theta_ext(t));
}

ZetaSample zeta_riemann_siegel(double t, int terms) {
  if (!(t >= 50)) throw DomainError("Riemann-Siegel needs t >= 50; use the Euler-Maclaurin path");
  if (terms < 1 || terms > 4) throw std::invalid_argument("Riemann-Siegel terms must be 1..4");
  const long double theta = theta_ext(t);
  const long double theta_r = reduce(theta);
  const double a = std::sqrt(t / (2 * std::acos(-1.0)));
  const auto n_main = static_cast<std::size_t>(a);
  const long double tl = t;

  double sum = 0.0;
  for (std::size_t n = 1; n <= n_main; ++n) {
    const long double ph = theta_r - reduce(tl * std::log(static_cast<long double>(n)));
    sum += std::cos(static_cast<double>(ph)) / std::sqrt(static_cast<double>(n));
  }
  sum *= 2.0;

  const double x = (a - static_cast<double>(n_main)) - 0.5;
  const std::array<std::span<const double>, 4> cs = {
      std::span<const double>(detail::kRsC0), std::span<const double>(detail::kRsC1),
      std::span<const double>(detail::kRsC2), std::span<const double>(detail::kRsC3)};
  double corr = 0.0, scale = 1.0;
  for (int k = 0; k < terms; ++k) {
    corr += horner(cs[k], x) * scale;
    scale /= a;
  }
  const double sign = (n_main % 2 == 1) ? 1.0 : -1.0;  // (-1)^(N-1)
  const double remainder = sign * corr / std::sqrt(a);

  ZetaSample s;
  s.t = t;
  s.theta = static_cast<double>(theta);
  s.z = sum + remainder;
  s.abs_zeta = std::fabs(s.z);
  s.error = kGabckeConst[terms - 1] * std::pow(t, kGabckeExp[terms - 1]);
  return s;
}

std::size_t em_default_terms(double t) {
  return static_cast<std::size_t>(std::fabs(t) / 3.0) + 30;
}

EulerMaclaurinResult zeta_euler_maclaurin(double sigma, double t, std::size_t terms,
                                          int max_order) {
  if (!std::isfinite(sigma) || !std::isfinite(t)) throw std::invalid_argument("s must be finite");
  if (terms < 1) throw std::invalid_argument("Euler-Maclaurin needs at least one term");
  if (sigma == 1.0 && t == 0.0) throw DomainError("zeta has a pole at s = 1");
  const std::complex<double> s(sigma, t);
  const double big_n = static_cast<double>(terms);
  const long double tl = t;

  // sum_{n<N} n^{-s}, phases reduced in extended precision
  double re = 0.0, im = 0.0;
  for (std::size_t n = 1; n < terms; ++n) {
    const long double ln = std::log(static_cast<long double>(n));
    const double mag = std::exp(-sigma * static_cast<double>(ln));
    const double ph = static_cast<double>(reduce(-tl * ln));
    re += mag * std::cos(ph);
    im += mag * std::sin(ph);
  }
  const long double lnN = std::log(static_cast<long double>(big_n));
  const std::complex<double> n_pow_ms =
      std::polar(std::exp(-sigma * static_cast<double>(lnN)), static_cast<double>(reduce(-tl * lnN)));
  std::complex<double> value(re, im);
  value += n_pow_ms * big_n / (s - 1.0);
  value += 0.5 * n_pow_ms;

  // T_k = B_{2k}/(2k)! * P_k with P_k = s(s+1)...(s+2k-2) N^{1-s-2k}, updated
  // as a ratio so large |s| does not overflow
  std::complex<double> pk = s * n_pow_ms / big_n;
  double fact = 2.0;  // (2k)!
  double prev = std::numeric_limits<double>::infinity();
  int order = 0;
  double bound = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_order + 1; ++k) {
    const std::complex<double> term = (boost::math::bernoulli_b2n<double>(k) / fact) * pk;
    const double mag = std::abs(term);
    if (k == max_order + 1 || !(mag < prev) || mag == 0.0) {
      // `term` is the first omitted correction
      const double m2 = 2.0 * order + 1.0;
      const double denom = sigma + m2;
      bound = denom > 0 ? std::abs(s + m2) / denom * mag : std::numeric_limits<double>::infinity();
      break;
    }
    value += term;
    order = k;
    prev = mag;
    pk *= (s + (2.0 * k - 1.0)) * (s + 2.0 * k) / (big_n * big_n);
    fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
  }
  return {value, bound, terms, order};
}

ZetaSample hardy_z(double t) {
  if (t >= 50) return zeta_riemann_siegel(t);
  const auto em = zeta_euler_maclaurin(0.5, t, em_default_terms(t));
  ZetaSample s;
  s.t = t;
  if (t >= 1) {
    s.theta = rs_theta(t);
    s.z = (std::polar(1.0, static_cast<double>(reduce(theta_ext(t)))) * em.value).real();
  } else {
    s.z = em.value.real();  // theta is not tracked this low; only |Z| is meaningful
  }
  s.abs_zeta = std::abs(em.value);
  s.error = em.error_bound;
  return s;
}

double height_scale(double tau) {
  if (!(tau >= 1)) throw DomainError("height must be >= 1");
  double p = std::pow(10.0, std::floor(std::log10(tau)));
  if (p * 10 <= tau) p *= 10;
  if (p > tau) p /= 10;
  return p;
}

IntervalMax max_zeta_on_interval(double tau, double theta, double spacing, unsigned workers) {
  if (!(theta > -1 && theta <= 0)) throw std::invalid_argument("theta must lie in (-1, 0]");
  const double log_t = std::log(height_scale(tau));
  const HGrid grid(0.0, std::pow(log_t, theta), spacing);
  check_memory_budget(grid.size() * sizeof(double), "zeta grid");
  std::vector<double> vals(grid.size());
  auto work = [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) vals[i] = std::log(hardy_z(tau + grid.point(i)).abs_zeta);
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(vals.size())));
  if (workers == 1) {
    work(0, vals.size());
  } else {
    const std::size_t per = (vals.size() + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (std::size_t b = 0; b < vals.size(); b += per) {
      pool.emplace_back(work, b, std::min(vals.size(), b + per));
    }
    for (auto& th : pool) th.join();
  }
  IntervalMax r;
  r.grid_size = vals.size();
  r.max_log_abs = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i] > r.max_log_abs) {  // strict: first (smallest h) wins ties
      r.max_log_abs = vals[i];
      r.argmax_h = grid.point(i);
    }
  }
  return r;
}

}  // namespace mesozeta
