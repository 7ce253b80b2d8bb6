#include "ctlqr/parallel.hpp"

#include <omp.h>

#include <cstdlib>

namespace ctlqr {

int worker_count() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("CTLQR_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0 && cap < n) n = static_cast<int>(cap);
  }
  return n < 1 ? 1 : n;
}

}  // namespace ctlqr
