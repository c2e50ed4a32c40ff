#pragma once

namespace taco {

// Worker thread cap: TACO_THREADS if set and positive, else the hardware
// concurrency. Applies to OpenMP loops and Eigen's GEMM.
int worker_threads();

// Re-reads TACO_THREADS and pushes the value into OpenMP and Eigen.
void configure_threads();

}  // namespace taco
