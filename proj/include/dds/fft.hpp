#pragma once

#include <cstddef>
#include <utility>

#include "dds/tensor.hpp"

namespace dds {

using AxisPair = std::pair<std::size_t, std::size_t>;

/// Unitary 2-D DFT over the given axes (default: the last two).
/// Extents along both axes must be powers of two.
Tensor fft2(const Tensor& x, AxisPair axes);
Tensor fft2(const Tensor& x);
Tensor ifft2(const Tensor& x, AxisPair axes);
Tensor ifft2(const Tensor& x);

/// Circular shift moving the zero frequency to the center of the last two axes.
/// For even extents fftshift and ifftshift coincide.
Tensor fftshift2(const Tensor& x);
Tensor ifftshift2(const Tensor& x);

bool is_power_of_two(std::size_t n);

}  // namespace dds
