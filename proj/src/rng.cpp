#include "dds/rng.hpp"

#include <cmath>
#include <numbers>

namespace dds {

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  ++counter_;
  if (cached_) {
    double v = *cached_;
    cached_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(th);
  return r * std::cos(th);
}

cplx RngStream::complex_normal() {
  const double re = normal();
  const double im = normal();
  return cplx(re, im) * std::numbers::sqrt2 * 0.5;
}

std::uint64_t RngStream::derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Tensor randn(RngStream& rng, const Shape& shape, DType dtype) {
  Tensor t = Tensor::zeros(shape, dtype);
  auto v = t.mutable_values();
  if (dtype == DType::Complex128)
    for (auto& e : v) e = rng.complex_normal();
  else
    for (auto& e : v) e = rng.normal();
  return t;
}

}  // namespace dds
