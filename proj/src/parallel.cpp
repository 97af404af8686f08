#include "irstd/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace irstd {

int configure_threads_from_env() {
  const char* env = std::getenv("IRSTD_THREADS");
  if (env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 0) throw std::invalid_argument(std::string("IRSTD_THREADS must be a count >= 0, got ") + env);
    if (n > 0) omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
}

int max_threads() { return omp_get_max_threads(); }

ScopedThreads::ScopedThreads(int threads) : previous_(omp_get_max_threads()) {
  omp_set_num_threads(threads > 0 ? threads : omp_get_num_procs());
}

ScopedThreads::~ScopedThreads() { omp_set_num_threads(previous_); }

}  // namespace irstd
