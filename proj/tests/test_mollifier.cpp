#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mesozeta/errors.hpp"
#include "mesozeta/mollifier.hpp"
#include "oracles.hpp"

using namespace mesozeta;

TEST_CASE("Mobius and Omega") {
  CHECK(mobius_mu(1) == 1);
  CHECK(mobius_mu(6) == 1);
  CHECK(big_omega(6) == 2);
  CHECK(mobius_mu(4) == 0);
  CHECK(big_omega(4) == 2);
  CHECK(mobius_mu(30) == -1);
  CHECK(big_omega(30) == 3);
  CHECK(big_omega(1) == 0);
  CHECK_THROWS(mobius_mu(0));
  CHECK_THROWS(big_omega(0));
  for (std::uint64_t n = 1; n < 5000; ++n) CHECK(mobius_mu(n) == oracle::mobius(n));
}

TEST_CASE("hand enumerations") {
  const PrimeTable t(3, {2, 3});
  const PrimeRange r = t.primes_in_scale(-INFINITY, 5.0);
  const MollifierPoly one = build_mollifier(r, 1);
  REQUIRE(one.terms.size() == 3);
  CHECK(one.terms[0].m == 1);
  CHECK(one.terms[0].coef == 1.0);
  CHECK(one.terms[1].m == 2);
  CHECK(one.terms[1].coef == doctest::Approx(-1 / std::sqrt(2.0)));
  CHECK(one.terms[2].m == 3);
  CHECK(one.terms[2].coef == doctest::Approx(-1 / std::sqrt(3.0)));

  const MollifierPoly two = build_mollifier(r, 2);
  REQUIRE(two.terms.size() == 4);
  CHECK(two.terms[3].m == 6);
  CHECK(two.terms[3].coef == doctest::Approx(1 / std::sqrt(6.0)));
  CHECK(two.max_m() == 6);
  CHECK(two.coef_square_sum() == doctest::Approx(1 + 0.5 + 1.0 / 3 + 1.0 / 6));

  const MollifierPoly empty = build_mollifier(t.primes_in_scale(5.0, 6.0), 4);
  REQUIRE(empty.terms.size() == 1);
  CHECK(empty.terms[0].m == 1);
  CHECK(eval_mollifier(empty, 123.4, 0.5) == std::complex<double>(1.0, 0.0));

  // two-term case at tau = 0: 1 - 2^{-1/2}
  const MollifierPoly two_only = build_mollifier(t.primes_in_scale(-INFINITY, 5.0), 1, 2);
  REQUIRE(two_only.terms.size() == 2);
  const auto v = eval_mollifier(two_only, 0.0, 0.0);
  CHECK(v.real() == doctest::Approx(1 - std::sqrt(0.5)).epsilon(1e-15));
  CHECK(std::fabs(v.imag()) < 1e-16);
  // m^{-ih} at h = pi / log 2 turns -2^{-1/2} into +2^{-1/2}
  CHECK(eval_mollifier(two_only, 0.0, M_PI / std::log(2.0)).real() == doctest::Approx(1 + std::sqrt(0.5)));
}

TEST_CASE("term structure invariants") {
  const PrimeTable t = sieve_primes(400);
  const MollifierPoly poly = build_mollifier(t, 1.2, std::log(std::log(400.0)), 3, 200000);
  const std::set<std::uint64_t> in_range(poly.primes.begin(), poly.primes.end());
  for (std::size_t i = 0; i < poly.terms.size(); ++i) {
    const auto& term = poly.terms[i];
    if (i) CHECK(term.m > poly.terms[i - 1].m);
    CHECK(term.m <= 200000);
    CHECK(oracle::mobius(term.m) != 0);
    CHECK(term.omega == big_omega(term.m));
    CHECK(term.omega <= 3);
    CHECK(term.coef == doctest::Approx(oracle::mobius(term.m) / std::sqrt(double(term.m))).epsilon(1e-15));
    CHECK((term.coef > 0) == (term.omega % 2 == 0));
    std::uint64_t n = term.m;
    for (std::uint64_t p = 2; p * p <= n || n > 1; ++p) {
      if (p * p > n) p = n;
      if (n % p == 0) {
        CHECK(in_range.count(p) == 1);
        n /= p;
      }
    }
    if (i) {
      CHECK(poly.terms[term.parent].m * poly.primes[term.prime] == term.m);
      CHECK(term.parent < i);
    }
  }
  CHECK(poly.preorder.size() == poly.terms.size());
  // all admissible m <= 200000 are present
  std::size_t count = 0;
  for (std::uint64_t m = 1; m <= 200000; ++m) {
    if (oracle::mobius(m) == 0 || big_omega(m) > 3) continue;
    bool ok = true;
    std::uint64_t n = m;
    for (std::uint64_t p = 2; p * p <= n; ++p) {
      if (n % p == 0) ok &= in_range.count(p) == 1, n /= p;
    }
    if (n > 1) ok &= in_range.count(n) == 1;
    count += ok;
  }
  CHECK(count == poly.terms.size());
}

TEST_CASE("term counts are binomial sums") {
  const PrimeTable t = sieve_primes(100);
  const PrimeRange twelve = t.slice(3, 15);  // 12 primes
  REQUIRE(twelve.primes.size() == 12);
  for (int bound = 0; bound <= 12; ++bound) {
    std::uint64_t expect = 0;
    for (int j = 0; j <= bound; ++j) expect += oracle::binomial(12, j);
    CHECK(build_mollifier(twelve, bound).terms.size() == expect);
  }
  CHECK_THROWS_AS(build_mollifier(twelve, 12, std::numeric_limits<std::uint64_t>::max(), 100), ResourceError);
}

TEST_CASE("full Omega bound gives the Euler product") {
  const PrimeTable t = sieve_primes(60);
  for (std::size_t r : {1, 4, 9}) {
    const PrimeRange range = t.slice(2, 2 + r);
    const MollifierPoly poly = build_mollifier(range, 64);
    CHECK(poly.terms.size() == (std::size_t{1} << r));
    for (double tau : {0.0, 17.25, 4321.0}) {
      std::complex<long double> prod = 1;
      for (auto p : range.primes) {
        const long double lp = std::log(static_cast<long double>(p));
        prod *= 1.0L - std::polar(1.0L / std::sqrt(static_cast<long double>(p)), -tau * lp);
      }
      const auto v = eval_mollifier(poly, tau, 0.0);
      CHECK(std::abs(v - std::complex<double>(prod)) < 1e-12);
    }
  }
}

TEST_CASE("model evaluation") {
  const PrimeTable t = sieve_primes(60);
  const PrimeRange range = t.slice(0, 5);
  const MollifierPoly poly = build_mollifier(range, 2);
  const RandomEulerProduct model(t, 5150);
  for (double h : {0.0, 0.7}) {
    std::complex<double> direct = 0;
    for (const auto& term : poly.terms) {
      std::complex<double> z = 1;
      std::uint64_t n = term.m;
      for (std::size_t i = 0; i < 5; ++i) {
        if (n % t.primes()[i] == 0) z *= model.unit(i);
      }
      direct += term.coef * z * std::polar(1.0, -h * std::log(double(term.m)));
    }
    CHECK(std::abs(eval_mollifier(poly, model, h) - direct) < 1e-13);
  }

  // forced zero angles reproduce tau = 0
  const RandomEulerProduct zero(t, std::vector<double>(t.size(), 0.0));
  CHECK(std::abs(eval_mollifier(poly, zero, 0.3) - eval_mollifier(poly, 0.0, 0.3)) < 1e-13);
}

TEST_CASE("inequality by hand with forced angles") {
  // one prime (2), angle 0: X = 2^{-1/2} + 1/4, M = 1 - 2^{-1/2}
  const PrimeTable t(2, {2});
  const MollifierPoly poly = build_mollifier(t.primes_in_scale(-INFINITY, 1.0), 4);
  const RandomEulerProduct zero(t, std::vector<double>{0.0});
  const double x = model_eval_X(zero, 1.0, 0.0);
  const double m = std::abs(eval_mollifier(poly, zero, 0.0));
  CHECK(x == doctest::Approx(std::sqrt(0.5) + 0.25));
  CHECK(m == doctest::Approx(1 - std::sqrt(0.5)));
  // lhs 0.3840 against |M| 0.2929 times 1 + e^{-k_lo}: holds for k_lo <= 1.13
  const double lhs = std::exp(-x);
  CHECK(lhs <= (1 + std::exp(-1.0)) * m);
  CHECK_FALSE(lhs <= (1 + std::exp(-1.5)) * m);
}

TEST_CASE("orthonormality of the model phases") {
  const PrimeTable t = sieve_primes(100);
  const MollifierPoly poly = build_mollifier(t.primes_in_scale(-INFINITY, 2.0), 2);
  double s1 = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double a = std::norm(eval_mollifier(poly, RandomEulerProduct(t, derive_stream(88, i)), 0.0));
    s1 += a;
    s2 += a * a;
  }
  const double mean = s1 / n, se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::fabs(mean - poly.coef_square_sum()) < 3 * se);
}

TEST_CASE("inequality check report") {
  const PrimeTable t = sieve_primes(1000);
  const MollifierPoly poly = build_mollifier(t, 1.6, std::log(std::log(1000.0)), 2);
  MollifierCheckOptions o;
  o.seed = 3;
  const MollifierReport r = check_mollifier_inequality(t, poly, 400, o);
  CHECK(r.samples == 400);
  CHECK(r.a_event <= r.samples);
  CHECK(r.satisfied <= r.a_event);
  CHECK(r.fraction == doctest::Approx(double(r.satisfied) / double(r.a_event)));
  CHECK(r.slack == doctest::Approx(1 + std::exp(-1.6)));
  CHECK(r.coef_square_sum == poly.coef_square_sum());
  CHECK(std::fabs(r.mean_abs2 - r.coef_square_sum) < 3 * r.se_abs2);
  o.workers = 3;
  const MollifierReport r3 = check_mollifier_inequality(t, poly, 400, o);
  CHECK(r3.satisfied == r.satisfied);
  CHECK(r3.mean_abs2 == r.mean_abs2);
  CHECK(r3.worst_ratio == r.worst_ratio);
}
