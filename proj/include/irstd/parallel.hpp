#pragma once

namespace irstd {

/// Applies IRSTD_THREADS (0 or unset = OpenMP default) and returns the
/// resulting thread cap. Throws std::invalid_argument for a malformed value.
int configure_threads_from_env();

int max_threads();

/// Pins the OpenMP thread count for the lifetime of the object.
class ScopedThreads {
 public:
  explicit ScopedThreads(int threads);
  ~ScopedThreads();
  ScopedThreads(const ScopedThreads&) = delete;
  ScopedThreads& operator=(const ScopedThreads&) = delete;

 private:
  int previous_;
};

}  // namespace irstd
