#include "mesozeta/primes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "mesozeta/errors.hpp"

namespace mesozeta {

namespace {

constexpr std::array<char, 4> kCacheMagic = {'M', 'Z', 'P', 'T'};
constexpr std::uint32_t kCacheVersion = 1;

std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// Rosser-Schoenfeld: pi(x) < 1.25506 x / log x for x > 1.
std::uint64_t prime_count_upper_bound(std::uint64_t x) {
  if (x < 17) return 6;
  const double xd = static_cast<double>(x);
  return static_cast<std::uint64_t>(1.25506 * xd / std::log(xd)) + 1;
}

// Odd primes in [lo, hi) (lo odd), using odd base primes up to sqrt(hi).
void sieve_segment(std::uint64_t lo, std::uint64_t hi,
                   const std::vector<std::uint64_t>& base,
                   std::vector<std::uint8_t>& marks,
                   std::vector<std::uint64_t>& out) {
  const std::uint64_t n_odd = (hi - lo + 1) / 2;
  marks.assign(n_odd, 1);
  for (std::uint64_t p : base) {
    if (p * p >= hi) break;
    std::uint64_t start = std::max(p * p, ((lo + p - 1) / p) * p);
    if ((start & 1u) == 0) start += p;
    for (std::uint64_t j = (start - lo) / 2; j < n_odd; j += p) marks[j] = 0;
  }
  for (std::uint64_t j = 0; j < n_odd; ++j) {
    if (marks[j]) out.push_back(lo + 2 * j);
  }
}

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b.data(), 8);
}

std::uint64_t get_le(std::istream& is, int bytes) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), bytes);
  if (!is) throw std::runtime_error("prime cache: unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

}  // namespace

PrimeTable::PrimeTable(std::uint64_t limit, std::vector<std::uint64_t> primes)
    : limit_(limit), primes_(std::move(primes)) {
  logp_.resize(primes_.size());
  inv_sqrt_.resize(primes_.size());
  for (std::size_t i = 0; i < primes_.size(); ++i) {
    const double pd = static_cast<double>(primes_[i]);
    logp_[i] = std::log(pd);
    inv_sqrt_[i] = 1.0 / std::sqrt(pd);
  }
  if (primes_.empty()) return;
  // Bucket j covers indices [count_up_to_scale(j-1), count_up_to_scale(j)).
  std::size_t begin = 0;
  for (int j = 0; begin < primes_.size(); ++j) {
    const std::size_t end = count_up_to_scale(static_cast<double>(j));
    buckets_.push_back({begin, end});
    begin = end;
  }
}

std::size_t PrimeTable::count_up_to_scale(double k) const {
  if (std::isnan(k)) throw std::invalid_argument("scale is NaN");
  if (k == -std::numeric_limits<double>::infinity()) return 0;
  const double bound = std::exp(k);
  return static_cast<std::size_t>(
      std::upper_bound(logp_.begin(), logp_.end(), bound) - logp_.begin());
}

bool PrimeTable::covers_scale(double k) const {
  if (k == -std::numeric_limits<double>::infinity()) return true;
  return std::exp(k) < std::log(static_cast<double>(limit_) + 1.0);
}

PrimeRange PrimeTable::primes_in_scale(double k_lo, double k_hi) const {
  if (!(k_lo < k_hi)) throw std::invalid_argument("primes_in_scale: need k_lo < k_hi");
  PrimeRange r = slice(count_up_to_scale(k_lo), count_up_to_scale(k_hi));
  r.truncated = !covers_scale(k_hi);
  return r;
}

PrimeRange PrimeTable::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > primes_.size()) throw std::out_of_range("PrimeTable::slice");
  PrimeRange r;
  r.primes = std::span<const std::uint64_t>(primes_).subspan(begin, end - begin);
  r.logp = std::span<const double>(logp_).subspan(begin, end - begin);
  r.inv_sqrt = std::span<const double>(inv_sqrt_).subspan(begin, end - begin);
  r.first = begin;
  return r;
}

PrimeTable sieve_primes(std::uint64_t limit, const SieveOptions& options) {
  if (options.segment_size < 64) throw std::invalid_argument("segment size too small");
  const std::uint64_t max_count = prime_count_upper_bound(limit);
  // primes, logs and weights, plus transient copies while segments are merged
  check_memory_budget(max_count * (2 * sizeof(std::uint64_t) + 2 * sizeof(double)) +
                          options.segment_size,
                      "prime table up to " + std::to_string(limit));

  std::vector<std::uint64_t> primes;
  if (limit < 2) return PrimeTable(limit, std::move(primes));
  primes.reserve(static_cast<std::size_t>(max_count));
  primes.push_back(2);

  // odd base primes up to sqrt(limit)
  const std::uint64_t root = isqrt(limit);
  std::vector<std::uint64_t> base;
  {
    std::vector<std::uint8_t> is_p(root + 1, 1);
    for (std::uint64_t i = 3; i <= root; i += 2) {
      if (!is_p[i]) continue;
      base.push_back(i);
      for (std::uint64_t j = i * i; j <= root; j += 2 * i) is_p[j] = 0;
    }
  }

  const std::uint64_t seg = options.segment_size & ~std::uint64_t{1};
  const std::uint64_t hi_end = limit + 1;  // exclusive
  const std::uint64_t n_segments = (hi_end - 3 + seg - 1) / seg;
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers,
                                                           static_cast<unsigned>(n_segments)));

  auto bounds = [&](std::uint64_t s) {
    const std::uint64_t lo = 3 + s * seg;
    return std::pair{lo, std::min(hi_end, lo + seg)};
  };

  if (workers == 1) {
    std::vector<std::uint8_t> marks;
    for (std::uint64_t s = 0; s < n_segments; ++s) {
      auto [lo, hi] = bounds(s);
      sieve_segment(lo, hi, base, marks, primes);
    }
  } else {
    // Each worker sieves a contiguous run of segments into its own buffer.
    std::vector<std::vector<std::uint64_t>> parts(workers);
    std::vector<std::thread> pool;
    const std::uint64_t per = (n_segments + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        std::vector<std::uint8_t> marks;
        const std::uint64_t s_end = std::min(n_segments, (w + 1) * per);
        for (std::uint64_t s = w * per; s < s_end; ++s) {
          auto [lo, hi] = bounds(s);
          sieve_segment(lo, hi, base, marks, parts[w]);
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& part : parts) {
      primes.insert(primes.end(), part.begin(), part.end());
      std::vector<std::uint64_t>().swap(part);
    }
  }
  primes.shrink_to_fit();
  return PrimeTable(limit, std::move(primes));
}

double mertens_sum(const PrimeTable& table, double k) {
  const auto primes = table.primes();
  const std::size_t n = table.count_up_to_scale(k);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += 1.0 / static_cast<double>(primes[i]);
  return sum;
}

void save_prime_cache(const PrimeTable& table, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kCacheMagic.data(), kCacheMagic.size());
  put_u32(os, kCacheVersion);
  put_u64(os, table.limit());
  put_u64(os, table.size());
  for (std::uint64_t p : table.primes()) put_u64(os, p);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

PrimeTable load_prime_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kCacheMagic) throw std::runtime_error("not a prime cache: " + path.string());
  const auto version = static_cast<std::uint32_t>(get_le(is, 4));
  if (version != kCacheVersion) {
    throw std::runtime_error("unsupported prime cache version " + std::to_string(version));
  }
  const std::uint64_t limit = get_le(is, 8);
  const std::uint64_t count = get_le(is, 8);
  check_memory_budget(count * (sizeof(std::uint64_t) + 2 * sizeof(double)), "prime cache load");
  std::vector<std::uint64_t> primes(count);
  for (auto& p : primes) p = get_le(is, 8);
  for (std::size_t i = 0; i < primes.size(); ++i) {
    if ((i > 0 && primes[i] <= primes[i - 1]) || primes[i] > limit) {
      throw std::runtime_error("prime cache is not an ascending list below its limit");
    }
  }
  return PrimeTable(limit, std::move(primes));
}

}  // namespace mesozeta
