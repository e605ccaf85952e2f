#include "dds/fft.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "dds/error.hpp"

namespace dds {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

// exp(-+2 pi i k / n) for k < n/2, evaluated directly per entry; a running
// product drifts at 1e-15 per step.
std::vector<cplx> twiddles(std::size_t n, bool inverse) {
  std::vector<cplx> w(n / 2);
  const double ang = 2.0 * std::numbers::pi / static_cast<double>(n) * (inverse ? 1.0 : -1.0);
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = cplx(std::cos(ang * static_cast<double>(k)), std::sin(ang * static_cast<double>(k)));
  return w;
}

// In-place iterative radix-2 transform of a contiguous buffer, unnormalized.
void fft_inplace(std::vector<cplx>& a, const std::vector<cplx>& tw) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2, stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + half] * tw[k * stride];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

void transform_axis(Tensor& t, std::size_t axis, bool inverse) {
  const auto& shape = t.shape();
  const std::size_t n = shape[axis];
  if (!is_power_of_two(n))
    throw ConfigError("fft extent " + std::to_string(n) + " on axis " + std::to_string(axis) +
                      " is not a power of two");
  std::size_t inner = 1;
  for (std::size_t k = axis + 1; k < shape.size(); ++k) inner *= shape[k];
  std::size_t outer = t.size() / (n * inner);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  auto data = t.mutable_values();
  std::vector<cplx> line(n);
  const auto tw = twiddles(n, inverse);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * n * inner + i;
      for (std::size_t k = 0; k < n; ++k) line[k] = data[base + k * inner];
      fft_inplace(line, tw);
      for (std::size_t k = 0; k < n; ++k) data[base + k * inner] = line[k] * scale;
    }
  }
}

Tensor transform2(const Tensor& x, AxisPair axes, bool inverse) {
  if (x.empty()) throw ConfigError("fft2 of empty tensor");
  if (axes.first >= x.ndim() || axes.second >= x.ndim() || axes.first == axes.second)
    throw ConfigError("fft2: invalid axes for tensor of shape " + shape_to_string(x.shape()));
  Tensor out = x.as_complex();
  transform_axis(out, axes.first, inverse);
  transform_axis(out, axes.second, inverse);
  out.check_finite("fft2");
  return out;
}

AxisPair last_two(const Tensor& x) {
  if (x.ndim() < 2) throw ConfigError("fft2 needs at least two axes");
  return {x.ndim() - 2, x.ndim() - 1};
}

Tensor shift2(const Tensor& x, bool inverse) {
  if (x.ndim() < 2) throw ConfigError("fftshift2 needs at least two axes");
  const std::size_t h = x.shape()[x.ndim() - 2];
  const std::size_t w = x.shape()[x.ndim() - 1];
  const std::size_t sh = inverse ? h - h / 2 : h / 2;
  const std::size_t sw = inverse ? w - w / 2 : w / 2;
  Tensor out = x;
  auto src = x.values();
  auto dst = out.mutable_values();
  const std::size_t planes = x.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j)
        dst[p * h * w + ((i + sh) % h) * w + (j + sw) % w] = src[p * h * w + i * w + j];
  return out;
}

}  // namespace

Tensor fft2(const Tensor& x, AxisPair axes) { return transform2(x, axes, false); }
Tensor fft2(const Tensor& x) { return transform2(x, last_two(x), false); }
Tensor ifft2(const Tensor& x, AxisPair axes) { return transform2(x, axes, true); }
Tensor ifft2(const Tensor& x) { return transform2(x, last_two(x), true); }
Tensor fftshift2(const Tensor& x) { return shift2(x, false); }
Tensor ifftshift2(const Tensor& x) { return shift2(x, true); }

}  // namespace dds
