#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dendro {

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hard limits for enumerations. Exceeding one throws BudgetExceeded; results
/// are never silently truncated.
struct Budget {
  /// Search nodes visited by hom-set enumeration and factorization.
  std::uint64_t max_nodes = 20'000'000;
  /// Elements of a single value set or operad level.
  std::uint64_t max_elements = 5'000'000;

  /// Defaults, with DENDRO_BUDGET (a positive integer) overriding both limits.
  static Budget defaults();
};

class BudgetCounter {
 public:
  BudgetCounter(std::uint64_t limit, const char* what) : limit_(limit), what_(what) {}
  void tick(std::uint64_t n = 1) {
    used_ += n;
    if (used_ > limit_)
      throw BudgetExceeded(std::string(what_) + ": budget of " + std::to_string(limit_) + " exceeded");
  }
  std::uint64_t used() const { return used_; }

 private:
  std::uint64_t limit_;
  std::uint64_t used_ = 0;
  const char* what_;
};

}  // namespace dendro
