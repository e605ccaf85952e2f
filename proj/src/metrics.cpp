#include "dds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dds/error.hpp"

namespace dds {

double psnr(const Tensor& x, const Tensor& ref, double peak) {
  if (x.shape() != ref.shape()) throw ConfigError("psnr: shape mismatch");
  if (!(peak > 0.0)) throw ConfigError("psnr: peak must be > 0");
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i].real() - ref[i].real();
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(peak) - 10.0 * std::log10(mse);
}

double psnr(const Tensor& x, const Tensor& ref) {
  double peak = 0.0;
  for (auto v : ref.values()) peak = std::max(peak, v.real());
  return psnr(x, ref, peak);
}

namespace {

constexpr int kWin = 11;

std::vector<double> gaussian_window() {
  std::vector<double> g(kWin);
  double s = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2 * 1.5 * 1.5));
    s += g[static_cast<std::size_t>(i)];
  }
  for (auto& v : g) v /= s;
  return g;
}

// Separable valid-mode filtering: (h - 10) x (w - 10) output.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t oh = h - kWin + 1, ow = w - kWin + 1;
  std::vector<double> tmp(h * ow, 0.0), out(oh * ow, 0.0);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[static_cast<std::size_t>(k)] * img[i * w + j + static_cast<std::size_t>(k)];
      tmp[i * ow + j] = s;
    }
  for (std::size_t i = 0; i < oh; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      double s = 0.0;
      for (int k = 0; k < kWin; ++k) s += g[static_cast<std::size_t>(k)] * tmp[(i + static_cast<std::size_t>(k)) * ow + j];
      out[i * ow + j] = s;
    }
  return out;
}

}  // namespace

double ssim(const Tensor& x, const Tensor& ref) {
  if (x.shape() != ref.shape()) throw ConfigError("ssim: shape mismatch");
  if (x.ndim() != 2) throw ConfigError("ssim: expects 2-D images");
  const std::size_t h = x.shape()[0], w = x.shape()[1];
  if (h < static_cast<std::size_t>(kWin) || w < static_cast<std::size_t>(kWin))
    throw ConfigError("ssim: image smaller than the 11x11 window");
  std::vector<double> a(h * w), b(h * w), aa(h * w), bb(h * w), ab(h * w);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < h * w; ++i) {
    a[i] = x[i].real();
    b[i] = ref[i].real();
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
    lo = std::min(lo, b[i]);
    hi = std::max(hi, b[i]);
  }
  double range = hi - lo;
  if (range == 0.0) range = 1.0;
  const double c1 = (0.01 * range) * (0.01 * range), c2 = (0.03 * range) * (0.03 * range);
  const auto g = gaussian_window();
  const auto mu_a = filter_valid(a, h, w, g), mu_b = filter_valid(b, h, w, g);
  const auto e_aa = filter_valid(aa, h, w, g), e_bb = filter_valid(bb, h, w, g), e_ab = filter_valid(ab, h, w, g);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    total += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double estimate_noise(const Tensor& x) {
  if (x.ndim() != 2) throw ConfigError("estimate_noise: expects a 2-D image");
  const std::size_t h = x.shape()[0], w = x.shape()[1];
  if (h < 2 || w < 2) throw ConfigError("estimate_noise: image too small");
  std::vector<double> hh;
  for (std::size_t i = 0; i + 1 < h; i += 2)
    for (std::size_t j = 0; j + 1 < w; j += 2) {
      const double a = x[i * w + j].real(), b = x[i * w + j + 1].real();
      const double c = x[(i + 1) * w + j].real(), d = x[(i + 1) * w + j + 1].real();
      hh.push_back(std::abs(a - b - c + d) / 2.0);
    }
  const std::size_t m = hh.size() / 2;
  std::nth_element(hh.begin(), hh.begin() + static_cast<std::ptrdiff_t>(m), hh.end());
  double med = hh[m];
  if (hh.size() % 2 == 0) {
    const double lower = *std::max_element(hh.begin(), hh.begin() + static_cast<std::ptrdiff_t>(m));
    med = 0.5 * (med + lower);
  }
  return med / 0.6745;
}

}  // namespace dds
