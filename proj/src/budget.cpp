#include "dendro/budget.hpp"

#include <cstdlib>

namespace dendro {

Budget Budget::defaults() {
  Budget b;
  if (const char* env = std::getenv("DENDRO_BUDGET")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) {
      b.max_nodes = v;
      b.max_elements = v;
    }
  }
  return b;
}

}  // namespace dendro
