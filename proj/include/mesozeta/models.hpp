#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "mesozeta/dirichlet.hpp"
#include "mesozeta/primes.hpp"

namespace mesozeta {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Seed of substream `index` under `seed`. Pure function of its arguments.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index);

inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(derive_stream(seed, index));
}

// Random Euler product: Z_p = e^{i angle_p} with angle_p = 2*pi*u(seed, p),
// u a keyed hash of (seed, p) mapped to [0, 1). Any prime's angle is available
// without touching the others.
class RandomEulerProduct {
 public:
  RandomEulerProduct(const PrimeTable& table, std::uint64_t seed);
  // Angles given explicitly for table indices 0..angles.size()-1; primes past
  // the end use angle 0. For tests and hand-checkable cases.
  RandomEulerProduct(const PrimeTable& table, std::vector<double> angles);

  const PrimeTable& table() const { return *table_; }
  std::uint64_t seed() const { return seed_; }
  bool forced() const { return forced_ != nullptr; }

  // Angle of the prime at table index i, in [0, 2*pi).
  double angle(std::size_t i) const;
  // Same angle as a fraction of a full turn, in [0, 1).
  double turn(std::size_t i) const;
  // Z_p for the prime at table index i.
  std::complex<double> unit(std::size_t i) const;

 private:
  const PrimeTable* table_;
  std::uint64_t seed_ = 0;
  std::uint64_t key_ = 0;
  std::shared_ptr<const std::vector<double>> forced_;
};

// sum over log p <= e^k of X_p(h) = Re(Z_p p^{-1/2-ih} + Z_p^2 p^{-1-2ih}/2).
double model_eval_X(const RandomEulerProduct& model, double k, double h);
std::complex<double> model_eval_X_tilde(const RandomEulerProduct& model, double k, double h);

// The same sum over an explicit range of the model's table.
double model_eval_range(const RandomEulerProduct& model, const PrimeRange& range, double h);

// model_eval_range at every point of `grid` (rotation recurrence).
std::vector<double> model_eval_grid(const RandomEulerProduct& model, const PrimeRange& range,
                                    const HGrid& grid, const GridOptions& options = {});

// Model walk sampled at ascending scale times, starting from `base_scale`
// (-infinity for the full walk). Imaginary parts are recorded.
WalkTrajectory model_trajectory(const RandomEulerProduct& model, std::span<const double> times,
                                double base_scale, double h);

// sum over log p <= e^k of 1/(2p) + 1/(8p^2).
double model_variance(const PrimeTable& table, double k);
double model_variance(const PrimeRange& range);

struct GaussianWalk {
  std::vector<double> increments;  // N_1..N_n
  std::vector<double> partial;     // W_0 = 0, W_1, ..., W_n
};

GaussianWalk sample_gaussian_walk(std::size_t n, Rng& rng, double variance = 0.5);
// Independent centered increments with the given per-step variances.
GaussianWalk sample_gaussian_walk(std::span<const double> variances, Rng& rng);

// Branching random walk on a b-ary tree of the given depth. Leaf j (base-b
// digits d_1..d_n, d_1 most significant) is the sum of the edge increments on
// its root path.
struct BrwTree {
  std::size_t depth = 0;
  std::size_t branching = 2;
  double variance = 0.5;  // per edge
  std::vector<double> leaves;

  // Depth of the deepest common ancestor of leaves i and j.
  std::size_t common_depth(std::size_t i, std::size_t j) const;
};

BrwTree sample_brw(std::size_t depth, std::size_t branching, Rng& rng, double variance = 0.5);
// Edge increments listed level by level (b, then b^2, ... values).
BrwTree brw_from_increments(std::size_t depth, std::size_t branching,
                            std::span<const double> edge_increments);
double brw_max(const BrwTree& tree);

}  // namespace mesozeta
