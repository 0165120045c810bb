#include "ocpfem/parallel.hpp"

#include <omp.h>

#include <thread>

namespace ocpfem::par {

namespace {
bool g_strict = false;
int g_default_threads = -1;
} // namespace

void set_num_threads(int n) {
  if (g_default_threads < 0) g_default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : g_default_threads);
}

int num_threads() { return omp_get_max_threads(); }

int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void set_strict_deterministic(bool on) { g_strict = on; }
bool strict_deterministic() { return g_strict; }

ThreadScope::ThreadScope(int n) : previous_(num_threads()) { set_num_threads(n); }
ThreadScope::~ThreadScope() { set_num_threads(previous_); }

} // namespace ocpfem::par
