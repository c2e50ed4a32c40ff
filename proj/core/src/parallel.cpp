#include "taco/parallel.hpp"

#include <Eigen/Core>

#include <cstdlib>
#include <string>
#include <thread>

#ifdef TACO_HAVE_OPENMP
#include <omp.h>
#endif

namespace taco {
namespace {

int read_threads() {
  if (const char* env = std::getenv("TACO_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int g_threads = 0;

}  // namespace

int worker_threads() {
  if (g_threads == 0) configure_threads();
  return g_threads;
}

void configure_threads() {
  g_threads = read_threads();
#ifdef TACO_HAVE_OPENMP
  omp_set_num_threads(g_threads);
#endif
  Eigen::setNbThreads(g_threads);
}

}  // namespace taco
