#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "dds/tensor.hpp"

namespace dds {

/// Seeded source of uniform and Gaussian draws.
///
/// Engine: std::mt19937_64. Uniforms are (u >> 11) * 2^-53, i.e. 53-bit
/// values in [0, 1). Normals come from Box-Muller on pairs (u1, u2) with
/// u1 mapped to (0, 1]; each pair yields two normals, the cosine branch first
/// and the sine branch cached for the next call. Complex normals draw the
/// real part then the imaginary part, each scaled by 1/sqrt(2). Tensor fills
/// proceed in row-major order. counter() is the number of normals handed out.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  double uniform();
  double normal();
  cplx complex_normal();
  std::uint64_t next_u64();

  /// Derives an independent child stream, e.g. one per sweep run or retry.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

Tensor randn(RngStream& rng, const Shape& shape, DType dtype = DType::Real64);

}  // namespace dds
