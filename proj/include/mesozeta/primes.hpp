#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mesozeta {

// Contiguous slice of a PrimeTable: the primes p (and their logarithms) with
// e^{k_lo} < log p <= e^{k_hi}. `truncated` is set when primes above the
// table limit would also satisfy log p <= e^{k_hi}.
struct PrimeRange {
  std::span<const std::uint64_t> primes;
  std::span<const double> logp;
  std::span<const double> inv_sqrt;  // p^{-1/2}
  std::size_t first = 0;  // table index of primes[0]
  bool truncated = false;

  std::size_t size() const { return primes.size(); }
  bool empty() const { return primes.empty(); }
};

// Immutable table of all primes <= limit with log p and p^{-1/2},
// bucketed by scale: bucket j holds the primes with e^{j-1} < log p <= e^j
// (bucket 0 holds log p <= 1).
class PrimeTable {
 public:
  struct Bucket {
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  PrimeTable() = default;
  // `primes` must be the ascending list of all primes <= limit.
  PrimeTable(std::uint64_t limit, std::vector<std::uint64_t> primes);

  std::uint64_t limit() const { return limit_; }
  std::size_t size() const { return primes_.size(); }
  bool empty() const { return primes_.empty(); }

  std::span<const std::uint64_t> primes() const { return primes_; }
  std::span<const double> logp() const { return logp_; }
  std::span<const double> inv_sqrt() const { return inv_sqrt_; }
  std::span<const Bucket> buckets() const { return buckets_; }

  // Number of primes with log p <= e^k.
  std::size_t count_up_to_scale(double k) const;

  // True when every prime with log p <= e^k is in the table.
  bool covers_scale(double k) const;

  // Primes with e^{k_lo} < log p <= e^{k_hi}; k_lo may be -infinity.
  PrimeRange primes_in_scale(double k_lo, double k_hi) const;

  // Slice by table index [begin, end).
  PrimeRange slice(std::size_t begin, std::size_t end) const;

 private:
  std::uint64_t limit_ = 0;
  std::vector<std::uint64_t> primes_;
  std::vector<double> logp_;
  std::vector<double> inv_sqrt_;
  std::vector<Bucket> buckets_;
};

struct SieveOptions {
  std::uint64_t segment_size = std::uint64_t{1} << 20;  // numbers per segment
  unsigned workers = 1;
};

// Segmented sieve of Eratosthenes. Throws ResourceError when the table for
// `limit` would exceed the memory budget.
PrimeTable sieve_primes(std::uint64_t limit, const SieveOptions& options = {});

inline PrimeRange primes_in_scale(const PrimeTable& table, double k_lo, double k_hi) {
  return table.primes_in_scale(k_lo, k_hi);
}

// Sum of 1/p over primes with log p <= e^k (ascending order). Check
// table.covers_scale(k) for truncation.
double mertens_sum(const PrimeTable& table, double k);

// Binary cache: "MZPT", u32 version, u64 limit, u64 count, then count u64
// primes, all little-endian. Logarithms are recomputed on load.
void save_prime_cache(const PrimeTable& table, const std::filesystem::path& path);
PrimeTable load_prime_cache(const std::filesystem::path& path);

}  // namespace mesozeta
