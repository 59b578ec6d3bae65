#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mesozeta/dirichlet.hpp"
#include "mesozeta/experiments.hpp"
#include "mesozeta/models.hpp"

using namespace mesozeta;

namespace {

struct Moments {
  double n = 0, s1 = 0, s2 = 0;
  void add(double x) { n += 1, s1 += x, s2 += x * x; }
  double mean() const { return s1 / n; }
  double var() const { return s2 / n - mean() * mean(); }
  double se_mean() const { return std::sqrt(var() / n); }
};

const PrimeTable& table_1e4() {
  static const PrimeTable t = sieve_primes(10000);
  return t;
}

}  // namespace

TEST_CASE("stream derivation") {
  // reference splitmix64: first output from state 0
  CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
  // frozen vectors of this construction
  CHECK(derive_stream(2026, 7) == 0xfdde9421aa275f0eULL);
  CHECK(make_stream(2026, 7)() == 0x9cdf55bd97d82ab5ULL);
  CHECK(derive_stream(1, 0) != derive_stream(1, 1));
  CHECK(derive_stream(1, 0) != derive_stream(0, 1));

  Rng a = make_stream(5, 0), b = make_stream(5, 1), a2 = make_stream(5, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double xy = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = u(a);
    CHECK_EQ(x, u(a2));
    xy += x * u(b);
  }
  // E[xy] = 0, sd(xy) = 1/3
  CHECK(std::fabs(xy / n) < 3 * (1.0 / 3) / std::sqrt(double(n)));
}

TEST_CASE("angles are deterministic, keyed and uniform") {
  const PrimeTable& t = table_1e4();
  const RandomEulerProduct m(t, 99), same(t, 99), other(t, 100);
  std::vector<double> turns;
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(m.angle(i) == same.angle(i));
    CHECK(m.turn(i) >= 0.0);
    CHECK(m.turn(i) < 1.0);
    CHECK(m.angle(i) == doctest::Approx(2 * M_PI * m.turn(i)).epsilon(1e-15));
    const auto z = m.unit(i);
    CHECK(std::abs(z) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::arg(z * std::polar(1.0, -m.angle(i))) == doctest::Approx(0.0).epsilon(1e-12));
  }
  int equal = 0;
  for (std::size_t i = 0; i < t.size(); ++i) equal += m.turn(i) == other.turn(i);
  CHECK(equal == 0);

  const PrimeTable big = sieve_primes(2000000);
  for (std::size_t i = 0; i < big.size(); ++i) turns.push_back(RandomEulerProduct(big, 3).turn(i));
  const double d = ks_distance(turns, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(d < 1.63 / std::sqrt(double(turns.size())));  // 1% KS level
}

TEST_CASE("hand values with forced angles") {
  const PrimeTable two(2, {2});
  const RandomEulerProduct m(two, std::vector<double>{0.0});
  CHECK(m.forced());
  CHECK(model_eval_X(m, 5.0, 0.0) == doctest::Approx(0.957107).epsilon(1e-6));
  CHECK(model_eval_X(m, 5.0, 0.0) == eval_S(two, 5.0, 0.0, 0.0));
  CHECK(model_eval_X(m, -1.0, 0.0) == 0.0);

  // Z_2 = i: Re(i/sqrt2 + (-1)/4)
  const RandomEulerProduct quarter(two, std::vector<double>{M_PI / 2});
  CHECK(model_eval_X(quarter, 5.0, 0.0) == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(model_eval_X_tilde(quarter, 5.0, 0.0).imag() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));

  // zero angles reproduce the Dirichlet sum at tau = 0
  const PrimeTable& t = table_1e4();
  const RandomEulerProduct zero(t, std::vector<double>(t.size(), 0.0));
  for (double h : {0.0, 0.3, -0.77}) {
    CHECK(model_eval_X(zero, 2.2, h) == doctest::Approx(eval_S(t, 2.2, 0.0, h)).epsilon(1e-12));
  }
  CHECK_THROWS(RandomEulerProduct(two, std::vector<double>{0.0, 0.0}));
}

TEST_CASE("variance formula") {
  const PrimeTable two(2, {2});
  CHECK(model_variance(two, 5.0) == doctest::Approx(0.28125).epsilon(1e-15));
  CHECK(model_variance(two, -1.0) == 0.0);

  const PrimeTable& t = table_1e4();
  const double k = std::log(std::log(10000.0));
  Moments x;
  for (std::uint64_t i = 0; i < 100000; ++i) x.add(model_eval_X(RandomEulerProduct(t, derive_stream(17, i)), k, 0.0));
  CHECK(std::fabs(x.mean()) < 3 * x.se_mean());
  const double v = model_variance(t, k);
  // se of the sample variance from the fourth moment is bounded by var*sqrt(2/n)*1.1 here
  CHECK(std::fabs(x.var() - v) < 3 * 1.1 * v * std::sqrt(2.0 / x.n));
}

TEST_CASE("evaluation paths agree") {
  const PrimeTable& t = table_1e4();
  const RandomEulerProduct m(t, 12345);
  const double k = std::log(std::log(10000.0));
  const PrimeRange all = t.primes_in_scale(-INFINITY, k);
  for (double h : {0.0, 0.4, -1.3}) {
    const double x = model_eval_X(m, k, h);
    CHECK(model_eval_X_tilde(m, k, h).real() == doctest::Approx(x).epsilon(1e-13));
    CHECK(model_eval_range(m, all, h) == doctest::Approx(x).epsilon(1e-13));
    double direct = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double p = double(t.primes()[i]);
      const auto z = m.unit(i) * std::polar(1.0, -h * std::log(p));
      direct += (z / std::sqrt(p) + z * z / (2 * p)).real();
    }
    CHECK(x == doctest::Approx(direct).epsilon(1e-12));
  }
  const HGrid grid(0.2, 1.0, 0.01);
  const auto g = model_eval_grid(m, all, grid);
  GridOptions three;
  three.workers = 3;
  CHECK(g == model_eval_grid(m, all, grid, three));
  for (std::size_t i = 0; i < grid.size(); i += 17) {
    CHECK(g[i] == doctest::Approx(model_eval_range(m, all, grid.point(i))).epsilon(1e-10));
  }

  const std::vector<double> times = {0.5, 1.0, 1.5, 2.0, k};
  const auto w = model_trajectory(m, times, -INFINITY, 0.3);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(w.values[i] == doctest::Approx(model_eval_X(m, times[i], 0.3)).epsilon(1e-12));
  }
  const auto s = model_trajectory(m, std::vector<double>{0.0, 0.5}, 1.2, 0.3);
  CHECK(s.values[0] == 0.0);
  CHECK(s.values[1] == doctest::Approx(model_eval_X(m, 1.7, 0.3) - model_eval_X(m, 1.2, 0.3)).epsilon(1e-12));
}

TEST_CASE("Gaussian domination of the phase moments") {
  const PrimeTable big = sieve_primes(16000000);  // ~10^6 primes
  const RandomEulerProduct m(big, 77);
  const std::size_t n = std::min<std::size_t>(big.size(), 1000000);
  const double gauss[] = {0.5, 0.75, 1.875};  // E Y^{2m}, Var Y = 1/2
  for (int mm = 1; mm <= 3; ++mm) {
    Moments r;
    for (std::size_t i = 0; i < n; ++i) r.add(std::pow(std::cos(m.angle(i)), 2 * mm));
    CHECK(r.mean() <= gauss[mm - 1] + 3 * r.se_mean());
  }
}

TEST_CASE("shift invariance of the model maximum") {
  const PrimeTable t = sieve_primes(1000);
  const PrimeRange all = t.primes_in_scale(-INFINITY, std::log(std::log(1000.0)));
  const double spacing = 0.05 / std::log(1000.0);
  std::vector<double> a, b;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const RandomEulerProduct m(t, s);
    const auto g0 = model_eval_grid(m, all, HGrid(0.0, 1.0, spacing));
    const auto g1 = model_eval_grid(m, all, HGrid(37.5, 1.0, spacing));
    a.push_back(*std::max_element(g0.begin(), g0.end()));
    b.push_back(*std::max_element(g1.begin(), g1.end()));
  }
  std::sort(b.begin(), b.end());
  const double d = ks_distance(a, [&](double x) {
    return double(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / double(b.size());
  });
  CHECK(d < 0.02);
}

TEST_CASE("Gaussian walk") {
  Rng rng = make_stream(1, 2);
  const auto w = sample_gaussian_walk(5, rng);
  REQUIRE(w.partial.size() == 6);
  CHECK(w.partial[0] == 0.0);
  for (std::size_t i = 0; i < 5; ++i) CHECK(w.partial[i + 1] == doctest::Approx(w.partial[i] + w.increments[i]));

  Moments inc, lag;
  for (int s = 0; s < 20000; ++s) {
    Rng r = make_stream(8, s);
    const auto g = sample_gaussian_walk(10, r);
    for (std::size_t i = 0; i < 10; ++i) inc.add(g.increments[i]);
    for (std::size_t i = 0; i + 1 < 10; ++i) lag.add(g.increments[i] * g.increments[i + 1]);
  }
  CHECK(std::fabs(inc.var() - 0.5) < 3 * 0.5 * std::sqrt(2.0 / inc.n));
  CHECK(std::fabs(lag.mean()) < 3 * lag.se_mean());

  const std::vector<double> vars = {0.1, 2.0};
  Moments v0, v1;
  for (int s = 0; s < 20000; ++s) {
    Rng r = make_stream(9, s);
    const auto g = sample_gaussian_walk(vars, r);
    v0.add(g.increments[0]);
    v1.add(g.increments[1]);
  }
  CHECK(std::fabs(v0.var() - 0.1) < 3 * 0.1 * std::sqrt(2.0 / v0.n));
  CHECK(std::fabs(v1.var() - 2.0) < 3 * 2.0 * std::sqrt(2.0 / v1.n));
}

TEST_CASE("branching random walk structure") {
  Rng rng = make_stream(3, 3);
  const BrwTree root = sample_brw(0, 2, rng);
  CHECK(root.leaves.size() == 1);
  CHECK(brw_max(root) == 0.0);

  const std::vector<double> one = {0.3, -1.2};
  CHECK(brw_max(brw_from_increments(1, 2, one)) == 0.3);

  // depth 2, binary: level 1 (a, b), level 2 (c, d, e, f)
  const std::vector<double> two = {1, 10, 100, 200, 300, 400};
  const BrwTree t2 = brw_from_increments(2, 2, two);
  CHECK(t2.leaves == std::vector<double>{101, 201, 310, 410});
  CHECK(brw_max(t2) == 410);
  CHECK_THROWS(brw_from_increments(2, 2, one));

  const BrwTree t3 = sample_brw(3, 3, rng);
  CHECK(t3.leaves.size() == 27);
  CHECK(t3.common_depth(5, 5) == 3);
  CHECK(t3.common_depth(0, 1) == 2);
  CHECK(t3.common_depth(0, 3) == 1);
  CHECK(t3.common_depth(0, 9) == 0);
  CHECK(t3.common_depth(26, 24) == 2);
}

TEST_CASE("branching random walk covariance and maximum") {
  const std::size_t depth = 6;
  const std::pair<std::size_t, std::size_t> pairs[] = {{0, 63}, {0, 31}, {0, 15}, {0, 1}, {5, 5}};
  Moments cov[5];
  for (int s = 0; s < 40000; ++s) {
    Rng r = make_stream(21, s);
    const BrwTree t = sample_brw(depth, 2, r);
    for (int j = 0; j < 5; ++j) cov[j].add(t.leaves[pairs[j].first] * t.leaves[pairs[j].second]);
  }
  for (int j = 0; j < 5; ++j) {
    const double expect = 0.5 * double(BrwTree{depth, 2}.common_depth(pairs[j].first, pairs[j].second));
    CHECK(std::fabs(cov[j].mean() - expect) < 3 * cov[j].se_mean());
  }

  auto mean_max = [](std::size_t d, int n) {
    Moments m;
    for (int s = 0; s < n; ++s) {
      Rng r = make_stream(1000 + d, s);
      m.add(brw_max(sample_brw(d, 2, r)));
    }
    return m.mean();
  };
  const double c = std::sqrt(std::log(2.0));
  auto leading = [&](double d) { return c * d - 3 / (4 * c) * std::log(d); };
  const double shift = mean_max(8, 10000) - leading(8);
  const double predicted = leading(12) + shift;
  CHECK(std::fabs(mean_max(12, 10000) - predicted) < 0.1 * predicted);
}
