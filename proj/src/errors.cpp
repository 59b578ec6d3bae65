#include "mesozeta/errors.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace mesozeta {

namespace {
constexpr std::size_t kDefaultBudgetMb = 4096;
}

std::size_t memory_budget_bytes() {
  std::size_t mb = kDefaultBudgetMb;
  if (const char* env = std::getenv("MESOZETA_MEM_BUDGET_MB")) {
    std::size_t parsed = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, parsed);
    if (ec == std::errc() && ptr == end && parsed > 0) mb = parsed;
  }
  return mb * 1024 * 1024;
}

void check_memory_budget(std::size_t bytes, const std::string& what) {
  const std::size_t budget = memory_budget_bytes();
  if (bytes > budget) {
    throw ResourceError(what + " needs " + std::to_string(bytes / (1024 * 1024)) +
                        " MB, exceeding the memory budget of " +
                        std::to_string(budget / (1024 * 1024)) +
                        " MB (MESOZETA_MEM_BUDGET_MB)");
  }
}

}  // namespace mesozeta
