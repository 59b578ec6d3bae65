#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mesozeta {

// An allocation would exceed the configured memory budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (e.g. a barrier
// evaluated past t', Riemann-Siegel below its validity height).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Memory budget in bytes. Reads MESOZETA_MEM_BUDGET_MB on every call so
// tests can adjust it; defaults to 4096 MB.
std::size_t memory_budget_bytes();

// Throws ResourceError naming the budget if `bytes` exceeds it.
void check_memory_budget(std::size_t bytes, const std::string& what);

}  // namespace mesozeta
