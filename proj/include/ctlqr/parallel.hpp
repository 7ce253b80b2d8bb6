#pragma once

namespace ctlqr {

/// Replicate-level execution. kSerial is the reference path; kParallel
/// distributes independent replicates over OpenMP threads and must produce
/// bit-identical results.
enum class Execution { kSerial, kParallel };

/// Worker count for kParallel: omp_get_max_threads(), capped by the
/// CTLQR_THREADS environment variable when it holds a positive integer.
int worker_count();

}  // namespace ctlqr
