#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace ctlqr {

/// Counter-based Brownian increments. Increment k over [k dt, (k+1) dt) is
/// a deterministic function of (seed, stream, k), so paths can be replayed
/// in any segmentation and shared between coupled systems.
///
/// With substeps > 1 each increment is the sum of `substeps` finer
/// increments, so paths at dt and dt/substeps describe the same Brownian
/// motion when their base resolution dt/substeps agrees.
class NoisePath {
 public:
  NoisePath(std::uint64_t seed, double dt, std::size_t dim,
            std::size_t substeps = 1, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  double dt() const noexcept { return dt_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t substeps() const noexcept { return substeps_; }

  /// Writes increment k, distributed N(0, dt I), into out (size dim).
  void increment(std::uint64_t k, std::span<double> out) const;

  /// Standard normal number n of the underlying stream.
  double standard_normal(std::uint64_t n) const;

 private:
  void normals(std::uint64_t first, std::size_t count, double* out) const;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  double dt_;
  std::size_t dim_;
  std::size_t substeps_;
  double scale_;
};

}  // namespace ctlqr
