#include "mesozeta/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mesozeta/errors.hpp"
#include "prime_sum_kernel.hpp"

namespace mesozeta {

namespace {

constexpr std::uint64_t kAngleSalt = 0xa0761d6478bd642fULL;
constexpr std::uint64_t kPrimeMul = 0xe7037ed1a0b428dbULL;
constexpr std::uint64_t kStreamSalt = 0x8ebc6af09c88c6e3ULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

inline std::uint64_t mix64_inline(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double hash_turn(std::uint64_t key, std::uint64_t p) {
  const auto bits = static_cast<std::int64_t>(mix64_inline(key ^ (p * kPrimeMul)) >> 11);
  return static_cast<double>(bits) * kTwoPow53Inv;
}

// cos(2*pi*u) for u in [0, 1), branch-free so the caller's loop vectorizes.
// Reduces to sin on [-pi/2, pi/2] and uses its Taylor polynomial through x^19
// (truncation below 3e-16).
inline double cos_turn(double u) {
  // u + 0.5 > 0, so truncation is floor; std::floor would block vectorization
  const double r = u - static_cast<double>(static_cast<std::int64_t>(u + 0.5));
  const double w = 0.25 - std::fabs(r);
  const double x = detail::kTwoPi * w;
  const double x2 = x * x;
  double s = -1.0 / 121645100408832000.0;  // -1/19!
  s = s * x2 + 1.0 / 355687428096000.0;
  s = s * x2 - 1.0 / 1307674368000.0;
  s = s * x2 + 1.0 / 6227020800.0;
  s = s * x2 - 1.0 / 39916800.0;
  s = s * x2 + 1.0 / 362880.0;
  s = s * x2 - 1.0 / 5040.0;
  s = s * x2 + 1.0 / 120.0;
  s = s * x2 - 1.0 / 6.0;
  s = s * x2 + 1.0;
  return s * x;
}

// Re-part sum at h = 0 for a hashed model, in the same prime blocks as the
// generic path but with an 8-way split accumulator inside each block.
double model_sum_h0(std::uint64_t key, const PrimeRange& range) {
  constexpr std::size_t kAcc = 8;
  alignas(64) double buf[detail::kPrimeBlock];
  double total = 0.0;
  const std::size_t n = range.size();
  const std::uint64_t* primes = range.primes.data();
  const double* a = range.inv_sqrt.data();
  for (std::size_t b0 = 0; b0 < n; b0 += detail::kPrimeBlock) {
    const std::size_t len = std::min(detail::kPrimeBlock, n - b0);
    for (std::size_t i = 0; i < len; ++i) {
      const double c = cos_turn(hash_turn(key, primes[b0 + i]));
      const double ai = a[b0 + i];
      buf[i] = std::fma(ai, c, (0.5 * ai * ai) * std::fma(2.0 * c, c, -1.0));
    }
    alignas(64) double acc[kAcc] = {};
    std::size_t i = 0;
    for (; i + kAcc <= len; i += kAcc) {
#pragma GCC ivdep
      for (std::size_t l = 0; l < kAcc; ++l) acc[l] += buf[i + l];
    }
    double block = 0.0;
    for (; i < len; ++i) block += buf[i];
    for (std::size_t l = 0; l < kAcc; ++l) block += acc[l];
    total += block;
  }
  return total;
}

void require_own_range(const RandomEulerProduct& model, const PrimeRange& range) {
  const auto all = model.table().primes();
  if (!range.empty() && (range.first + range.size() > all.size() ||
                         range.primes.data() != all.data() + range.first)) {
    throw std::invalid_argument("prime range does not belong to the model's table");
  }
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) { return mix64_inline(x); }

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  return mix64_inline(mix64_inline(seed ^ kStreamSalt) + mix64_inline(index));
}

RandomEulerProduct::RandomEulerProduct(const PrimeTable& table, std::uint64_t seed)
    : table_(&table), seed_(seed), key_(mix64_inline(seed ^ kAngleSalt)) {}

RandomEulerProduct::RandomEulerProduct(const PrimeTable& table, std::vector<double> angles)
    : table_(&table) {
  if (angles.size() > table.size()) throw std::invalid_argument("more forced angles than primes");
  for (double& t : angles) {
    if (!std::isfinite(t)) throw std::invalid_argument("forced angle must be finite");
    t = t / detail::kTwoPi;
    t -= std::floor(t);
  }
  forced_ = std::make_shared<const std::vector<double>>(std::move(angles));
}

double RandomEulerProduct::turn(std::size_t i) const {
  if (forced_) return i < forced_->size() ? (*forced_)[i] : 0.0;
  return hash_turn(key_, table_->primes()[i]);
}

double RandomEulerProduct::angle(std::size_t i) const { return detail::kTwoPi * turn(i); }

std::complex<double> RandomEulerProduct::unit(std::size_t i) const {
  return std::polar(1.0, angle(i));
}

double model_eval_range(const RandomEulerProduct& model, const PrimeRange& range, double h) {
  if (!std::isfinite(h)) throw std::invalid_argument("h must be finite");
  require_own_range(model, range);
  if (h == 0.0 && !model.forced()) {
    return model_sum_h0(mix64_inline(model.seed() ^ kAngleSalt), range);
  }
  const std::size_t first = range.first;
  return detail::sum_terms_real(range.inv_sqrt, [&](std::size_t i) {
    return std::polar(1.0, model.angle(first + i) - h * range.logp[i]);
  });
}

double model_eval_X(const RandomEulerProduct& model, double k, double h) {
  const PrimeTable& t = model.table();
  return model_eval_range(model, t.slice(0, t.count_up_to_scale(k)), h);
}

std::complex<double> model_eval_X_tilde(const RandomEulerProduct& model, double k, double h) {
  if (!std::isfinite(h)) throw std::invalid_argument("h must be finite");
  const PrimeRange range = model.table().slice(0, model.table().count_up_to_scale(k));
  return detail::sum_terms(range.inv_sqrt, [&](std::size_t i) {
    return std::polar(1.0, model.angle(i) - h * range.logp[i]);
  });
}

std::vector<double> model_eval_grid(const RandomEulerProduct& model, const PrimeRange& range,
                                    const HGrid& grid, const GridOptions& options) {
  require_own_range(model, range);
  check_memory_budget(grid.size() * sizeof(double), "model grid");
  std::vector<double> out(grid.size(), 0.0);
  const std::size_t first = range.first;
  auto unit_at = [&](std::size_t i, double h) {
    return std::polar(1.0, model.angle(first + i) - h * range.logp[i]);
  };
  auto point = [&grid](std::size_t j) { return grid.point(j); };
  detail::parallel_grid(out.size(), options.workers, [&](std::size_t b, std::size_t e) {
    detail::grid_sum(range.inv_sqrt, range.logp, grid.spacing(), b, e, point, unit_at,
                     out.data() + b);
  });
  return out;
}

WalkTrajectory model_trajectory(const RandomEulerProduct& model, std::span<const double> times,
                                double base_scale, double h) {
  if (!std::isfinite(h)) throw std::invalid_argument("h must be finite");
  const PrimeTable& table = model.table();
  WalkTrajectory traj;
  traj.kind = WalkKind::model;
  traj.origin = {static_cast<double>(model.seed()), h, 0.0, 0.0};
  traj.times.assign(times.begin(), times.end());
  traj.values.resize(times.size());
  traj.imag.resize(times.size());
  const bool shifted = base_scale != -std::numeric_limits<double>::infinity();
  std::size_t cursor = table.count_up_to_scale(base_scale);
  std::complex<double> running = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (j > 0 && !(times[j] > times[j - 1])) throw std::invalid_argument("times must ascend");
    if (shifted && times[j] < 0) throw std::invalid_argument("shifted times must be >= 0");
    const double scale = shifted ? base_scale + times[j] : times[j];
    const std::size_t next = std::max(cursor, table.count_up_to_scale(scale));
    if (next > cursor) {
      const PrimeRange r = table.slice(cursor, next);
      running += detail::sum_terms(r.inv_sqrt, [&](std::size_t i) {
        return std::polar(1.0, model.angle(cursor + i) - h * r.logp[i]);
      });
      cursor = next;
    }
    traj.values[j] = running.real();
    traj.imag[j] = running.imag();
  }
  return traj;
}

double model_variance(const PrimeRange& range) {
  double v = 0.0;
  for (std::uint64_t p : range.primes) {
    const double pd = static_cast<double>(p);
    v += 0.5 / pd + 0.125 / (pd * pd);
  }
  return v;
}

double model_variance(const PrimeTable& table, double k) {
  return model_variance(table.slice(0, table.count_up_to_scale(k)));
}

GaussianWalk sample_gaussian_walk(std::span<const double> variances, Rng& rng) {
  GaussianWalk w;
  w.increments.resize(variances.size());
  w.partial.assign(variances.size() + 1, 0.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < variances.size(); ++i) {
    if (!(variances[i] >= 0)) throw std::invalid_argument("variance must be >= 0");
    w.increments[i] = std::sqrt(variances[i]) * normal(rng);
    w.partial[i + 1] = w.partial[i] + w.increments[i];
  }
  return w;
}

GaussianWalk sample_gaussian_walk(std::size_t n, Rng& rng, double variance) {
  const std::vector<double> v(n, variance);
  return sample_gaussian_walk(v, rng);
}

namespace {

std::size_t leaf_count(std::size_t depth, std::size_t branching) {
  if (branching < 1) throw std::invalid_argument("branching factor must be >= 1");
  std::size_t n = 1;
  for (std::size_t i = 0; i < depth; ++i) {
    if (n > (std::size_t{1} << 40) / branching) throw ResourceError("BRW tree too large");
    n *= branching;
  }
  check_memory_budget(2 * n * sizeof(double), "BRW tree");
  return n;
}

// Expands level by level; next(i) returns the i-th edge increment of the level.
template <class NextFn>
BrwTree build_brw(std::size_t depth, std::size_t branching, double variance, NextFn next) {
  BrwTree tree;
  tree.depth = depth;
  tree.branching = branching;
  tree.variance = variance;
  tree.leaves.reserve(leaf_count(depth, branching));
  tree.leaves.assign(1, 0.0);
  std::vector<double> level;
  for (std::size_t d = 0; d < depth; ++d) {
    level.resize(tree.leaves.size() * branching);
    for (std::size_t i = 0; i < level.size(); ++i) level[i] = tree.leaves[i / branching] + next();
    tree.leaves.swap(level);
  }
  return tree;
}

}  // namespace

std::size_t BrwTree::common_depth(std::size_t i, std::size_t j) const {
  std::size_t d = depth;
  while (i != j) {
    i /= branching;
    j /= branching;
    --d;
  }
  return d;
}

BrwTree sample_brw(std::size_t depth, std::size_t branching, Rng& rng, double variance) {
  if (!(variance >= 0)) throw std::invalid_argument("variance must be >= 0");
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  return build_brw(depth, branching, variance, [&] { return normal(rng); });
}

BrwTree brw_from_increments(std::size_t depth, std::size_t branching,
                            std::span<const double> edge_increments) {
  std::size_t need = 0, width = 1;
  for (std::size_t d = 0; d < depth; ++d) need += (width *= branching);
  if (edge_increments.size() != need) {
    throw std::invalid_argument("expected " + std::to_string(need) + " edge increments");
  }
  std::size_t pos = 0;
  return build_brw(depth, branching, std::numeric_limits<double>::quiet_NaN(),
                   [&] { return edge_increments[pos++]; });
}

double brw_max(const BrwTree& tree) {
  if (tree.leaves.empty()) throw std::invalid_argument("empty tree");
  return *std::max_element(tree.leaves.begin(), tree.leaves.end());
}

}  // namespace mesozeta
