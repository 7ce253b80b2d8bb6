#include "ctlqr/noise.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "ctlqr/errors.hpp"

namespace ctlqr {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// SplitMix64 output number `counter` of the stream keyed by `key`.
std::uint64_t splitmix_at(std::uint64_t key, std::uint64_t counter) {
  return mix64(key + (counter + 1) * kGolden);
}

double to_unit_open(std::uint64_t bits) {
  // (0, 1]: safe for log.
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

void box_muller(std::uint64_t key, std::uint64_t pair, double& z0,
                double& z1) {
  const double u1 = to_unit_open(splitmix_at(key, 2 * pair));
  const double u2 = to_unit_open(splitmix_at(key, 2 * pair + 1));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(angle);
  z1 = r * std::sin(angle);
}

}  // namespace

NoisePath::NoisePath(std::uint64_t seed, double dt, std::size_t dim,
                     std::size_t substeps, std::uint64_t stream)
    : seed_(seed),
      stream_(stream),
      key_(mix64(mix64(seed) ^ (stream * kGolden + 0x5851F42D4C957F2DULL))),
      dt_(dt),
      dim_(dim),
      substeps_(substeps),
      scale_(std::sqrt(dt / static_cast<double>(substeps))) {
  if (!(dt > 0.0)) throw DimensionError("noise dt must be positive");
  if (dim == 0) throw DimensionError("noise dimension must be positive");
  if (substeps == 0) throw DimensionError("noise substeps must be positive");
}

double NoisePath::standard_normal(std::uint64_t n) const {
  double z0, z1;
  box_muller(key_, n / 2, z0, z1);
  return (n % 2 == 0) ? z0 : z1;
}

void NoisePath::normals(std::uint64_t first, std::size_t count,
                        double* out) const {
  std::size_t i = 0;
  std::uint64_t n = first;
  if (n % 2 == 1 && count > 0) {
    out[i++] = standard_normal(n++);
  }
  while (i + 1 < count) {
    box_muller(key_, n / 2, out[i], out[i + 1]);
    i += 2;
    n += 2;
  }
  if (i < count) out[i] = standard_normal(n);
}

void NoisePath::increment(std::uint64_t k, std::span<double> out) const {
  if (out.size() != dim_) throw DimensionError("noise buffer size mismatch");
  const std::uint64_t first = k * substeps_ * dim_;
  if (substeps_ == 1) {
    normals(first, dim_, out.data());
    for (double& v : out) v *= scale_;
    return;
  }
  thread_local std::vector<double> buffer;
  buffer.resize(substeps_ * dim_);
  normals(first, buffer.size(), buffer.data());
  for (std::size_t i = 0; i < dim_; ++i) out[i] = 0.0;
  for (std::size_t j = 0; j < substeps_; ++j) {
    for (std::size_t i = 0; i < dim_; ++i) out[i] += buffer[j * dim_ + i];
  }
  for (double& v : out) v *= scale_;
}

}  // namespace ctlqr
