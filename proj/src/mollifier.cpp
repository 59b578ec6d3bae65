#include "mesozeta/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "mesozeta/errors.hpp"
#include "prime_sum_kernel.hpp"

namespace mesozeta {

int mobius_mu(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("mobius_mu needs n >= 1");
  int sign = 1;
  for (std::uint64_t p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    if (n % p != 0) continue;
    n /= p;
    if (n % p == 0) return 0;
    sign = -sign;
  }
  return n > 1 ? -sign : sign;
}

int big_omega(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("big_omega needs n >= 1");
  int count = 0;
  for (std::uint64_t p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    while (n % p == 0) {
      n /= p;
      ++count;
    }
  }
  return count + (n > 1 ? 1 : 0);
}

double MollifierPoly::coef_square_sum() const {
  double s = 0.0;
  for (const auto& t : terms) s += t.coef * t.coef;
  return s;
}

MollifierPoly build_mollifier(const PrimeRange& range, int omega_bound, std::uint64_t m_limit,
                              std::size_t term_cap) {
  if (omega_bound < 0) throw std::invalid_argument("omega bound must be >= 0");
  if (m_limit < 1) throw std::invalid_argument("m_limit must be >= 1");
  MollifierPoly poly;
  poly.omega_bound = omega_bound;
  poly.m_limit = m_limit;
  poly.first = range.first;
  poly.primes.assign(range.primes.begin(), range.primes.end());
  poly.logp.assign(range.logp.begin(), range.logp.end());
  if (!range.empty()) {
    poly.k_lo = std::log(range.logp.front());
    poly.k_hi = std::log(range.logp.back());
  }

  // Children of a term use primes above its largest factor, so every
  // squarefree m is reached once. Primes are ascending: stop at the first
  // one that overflows m_limit.
  std::vector<MollifierTerm> out;
  out.push_back({1, 1.0, 0, 0, 0});
  struct Frame {
    std::uint32_t term;
    std::size_t next_prime;
  };
  std::vector<Frame> stack{{0, 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const MollifierTerm parent = out[f.term];
    if (parent.omega >= omega_bound || f.next_prime >= poly.primes.size()) {
      stack.pop_back();
      continue;
    }
    const std::size_t i = f.next_prime++;
    const std::uint64_t p = poly.primes[i];
    if (p > m_limit / parent.m) {
      stack.pop_back();
      continue;
    }
    if (out.size() >= term_cap) {
      throw ResourceError("mollifier has more than " + std::to_string(term_cap) + " terms");
    }
    const std::uint64_t m = parent.m * p;
    out.push_back({m, -parent.coef / std::sqrt(static_cast<double>(p)), parent.omega + 1, f.term,
                   static_cast<std::uint32_t>(i)});
    stack.push_back({static_cast<std::uint32_t>(out.size() - 1), i + 1});
  }
  check_memory_budget(out.size() * (sizeof(MollifierTerm) * 2 + sizeof(MollifierPoly::Step)),
                      "mollifier terms");
  poly.preorder.reserve(out.size());
  for (const auto& t : out) {
    poly.preorder.push_back({t.coef, t.prime, static_cast<std::uint32_t>(t.omega)});
  }

  // sort by m and remap parents
  std::vector<std::uint32_t> order(out.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return out[a].m < out[b].m; });
  std::vector<std::uint32_t> pos(out.size());
  for (std::size_t j = 0; j < order.size(); ++j) pos[order[j]] = static_cast<std::uint32_t>(j);
  poly.terms.resize(out.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    MollifierTerm t = out[order[j]];
    t.parent = pos[t.parent];
    poly.terms[j] = t;
  }
  return poly;
}

MollifierPoly build_mollifier(const PrimeTable& table, double k_lo, double k_hi, int omega_bound,
                              std::uint64_t m_limit, std::size_t term_cap) {
  MollifierPoly poly = build_mollifier(table.primes_in_scale(k_lo, k_hi), omega_bound, m_limit, term_cap);
  poly.k_lo = k_lo;
  poly.k_hi = k_hi;
  return poly;
}

namespace {

// sum coef(m) prod_{p|m} unit[p], walking the enumeration tree.
std::complex<double> sum_over_terms(const MollifierPoly& poly,
                                    const std::vector<std::complex<double>>& unit) {
  std::vector<std::complex<double>> phase(static_cast<std::size_t>(poly.omega_bound) + 1);
  phase[0] = 1.0;
  // four accumulators; the order is fixed, so results do not depend on anything else
  double re[4] = {0, 0, 0, 0}, im[4] = {0, 0, 0, 0};
  const std::size_t n = poly.preorder.size();
  for (std::size_t j = 0; j < n; ++j) {
    const auto& st = poly.preorder[j];
    if (st.omega > 0) {
      const auto a = phase[st.omega - 1];
      const auto b = unit[st.prime];
      phase[st.omega] = {a.real() * b.real() - a.imag() * b.imag(),
                         a.real() * b.imag() + a.imag() * b.real()};
    }
    re[j & 3] += st.coef * phase[st.omega].real();
    im[j & 3] += st.coef * phase[st.omega].imag();
  }
  return {(re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3])};
}

}  // namespace

std::complex<double> eval_mollifier(const MollifierPoly& poly, double tau, double h) {
  std::vector<std::complex<double>> unit(poly.primes.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    unit[i] = std::polar(1.0, -detail::dirichlet_phase(tau, h, poly.logp[i]));
  }
  return sum_over_terms(poly, unit);
}

std::complex<double> eval_mollifier(const MollifierPoly& poly, const RandomEulerProduct& model,
                                    double h) {
  if (poly.first + poly.primes.size() > model.table().size()) {
    throw std::invalid_argument("model table does not contain the mollifier's primes");
  }
  std::vector<std::complex<double>> unit(poly.primes.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    const double shift = h == 0.0 ? 0.0 : detail::reduce_phase(h, poly.logp[i]);
    unit[i] = model.unit(poly.first + i) * std::polar(1.0, -shift);
  }
  return sum_over_terms(poly, unit);
}

MollifierReport check_mollifier_inequality(const PrimeTable& table, const MollifierPoly& poly,
                                           std::size_t samples,
                                           const MollifierCheckOptions& options) {
  MollifierReport r;
  r.samples = samples;
  r.slack = 1.0 + std::exp(-poly.k_lo);
  r.coef_square_sum = poly.coef_square_sum();
  const PrimeRange range = table.slice(poly.first, poly.first + poly.primes.size());
  const double width = poly.k_hi - poly.k_lo;
  const double bound = options.increment_coef * width;
  const double additive = std::exp(-options.error_coef * width);

  struct Draw {
    double abs2;
    bool a_event;
    double ratio;
  };
  std::vector<Draw> draws(samples);
  auto work = [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const RandomEulerProduct model(table, derive_stream(options.seed, i));
      const double m_abs = std::abs(eval_mollifier(poly, model, 0.0));
      std::complex<double> x = 0.0;
      for (std::size_t j = 0; j < range.size(); ++j) {
        const auto z = model.unit(range.first + j);
        x += range.inv_sqrt[j] * z + 0.5 * range.inv_sqrt[j] * range.inv_sqrt[j] * z * z;
      }
      draws[i] = {m_abs * m_abs, std::abs(x) <= bound, std::exp(-x.real()) / (r.slack * m_abs + additive)};
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(std::max<std::size_t>(samples, 1))));
  if (workers == 1) {
    work(0, samples);
  } else {
    const std::size_t per = (samples + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (std::size_t b = 0; b < samples; b += per) pool.emplace_back(work, b, std::min(samples, b + per));
    for (auto& th : pool) th.join();
  }

  double sum = 0.0, sum2 = 0.0;
  for (const Draw& d : draws) {
    sum += d.abs2;
    sum2 += d.abs2 * d.abs2;
    if (!d.a_event) continue;
    ++r.a_event;
    if (d.ratio <= 1.0) ++r.satisfied;
    r.worst_ratio = std::max(r.worst_ratio, d.ratio);
  }
  const double n = static_cast<double>(samples);
  if (samples > 0) {
    r.mean_abs2 = sum / n;
    if (samples > 1) r.se_abs2 = std::sqrt(std::max(0.0, (sum2 - n * r.mean_abs2 * r.mean_abs2) / (n - 1)) / n);
  }
  r.fraction = r.a_event ? static_cast<double>(r.satisfied) / static_cast<double>(r.a_event)
                         : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace mesozeta
