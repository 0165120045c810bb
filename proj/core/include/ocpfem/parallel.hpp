#pragma once

#include <cstddef>

namespace ocpfem::par {

/// Caps the worker pool used by all kernels. n <= 0 restores the runtime default.
void set_num_threads(int n);
int num_threads();
int hardware_threads();

/// Strict-deterministic mode: reductions use a blocking that does not depend
/// on the thread count, so results are bitwise identical for any pool size.
/// Outside strict mode reductions use one block per thread, which is
/// reproducible run-to-run at a fixed thread count only.
void set_strict_deterministic(bool on);
bool strict_deterministic();

/// Block length of the thread-count independent reduction tree.
inline constexpr std::size_t kReductionBlock = 4096;

/// RAII guard that changes the thread count and restores it on scope exit.
class ThreadScope {
public:
  explicit ThreadScope(int n);
  ~ThreadScope();
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

private:
  int previous_;
};

} // namespace ocpfem::par
