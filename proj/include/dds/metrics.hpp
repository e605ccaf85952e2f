#pragma once

#include "dds/tensor.hpp"

namespace dds {

/// 20 log10(peak) - 10 log10(MSE) over real parts; +inf when MSE is 0.
double psnr(const Tensor& x, const Tensor& ref, double peak);
/// Peak defaults to max(ref).
double psnr(const Tensor& x, const Tensor& ref);

/// Mean SSIM over valid 11x11 windows, Gaussian weights (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range max(ref) - min(ref). Real 2-D inputs.
double ssim(const Tensor& x, const Tensor& ref);

/// Noise standard deviation from the finest diagonal Haar detail band:
/// median(|HH|) / 0.6745, with HH = (a - b - c + d) / 2 on disjoint 2x2 blocks
/// (odd trailing rows/columns dropped). Uses the real part.
double estimate_noise(const Tensor& x);

}  // namespace dds
