#include "dds/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dds/error.hpp"
#include "dds/rng.hpp"

namespace dds {

namespace {

struct Ellipse {
  double value, a, b, x0, y0, phi_deg;
};

// Modified Shepp-Logan (Toft) parameters on [-1, 1]^2.
constexpr Ellipse kHead[10] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},        {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},       {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},     {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.605, 0.0},   {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

struct Ellipsoid {
  double value, a, b, c, x0, y0, z0, phi_deg;
};

constexpr Ellipsoid kHead3d[10] = {
    {1.0, 0.69, 0.92, 0.81, 0.0, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.78, 0.0, -0.0184, 0.0, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.22, 0.0, 0.0, -18.0},
    {-0.2, 0.16, 0.41, 0.28, -0.22, 0.0, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.41, 0.0, 0.35, -0.15, 0.0},
    {0.1, 0.046, 0.046, 0.05, 0.0, 0.1, 0.25, 0.0},
    {0.1, 0.046, 0.046, 0.05, 0.0, -0.1, 0.25, 0.0},
    {0.1, 0.046, 0.023, 0.05, -0.08, -0.605, 0.0, 0.0},
    {0.1, 0.023, 0.023, 0.02, 0.0, -0.606, 0.0, 0.0},
    {0.1, 0.023, 0.046, 0.02, 0.06, -0.605, 0.0, 0.0},
};

double grid_coord(std::size_t i, std::size_t n) { return (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) - 1.0; }

bool inside(const Ellipse& e, double x, double y) {
  const double phi = e.phi_deg * std::numbers::pi / 180.0;
  const double dx = x - e.x0, dy = y - e.y0;
  const double u = dx * std::cos(phi) + dy * std::sin(phi);
  const double v = -dx * std::sin(phi) + dy * std::cos(phi);
  return (u * u) / (e.a * e.a) + (v * v) / (e.b * e.b) <= 1.0;
}

std::vector<double> indicator(const Ellipse& e, std::size_t n) {
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (inside(e, grid_coord(j, n), -grid_coord(i, n))) out[i * n + j] = 1.0;
  return out;
}

Tensor with_dtype(Shape shape, const std::vector<double>& v, DType dt) {
  Tensor t = Tensor::from_real(std::move(shape), v);
  return dt == DType::Complex128 ? t.as_complex() : t;
}

}  // namespace

Tensor shepp_logan_2d(std::size_t n) {
  if (n == 0) throw ConfigError("phantom size must be positive");
  std::vector<double> img(n * n, 0.0);
  for (const auto& e : kHead) {
    auto ind = indicator(e, n);
    for (std::size_t p = 0; p < n * n; ++p) img[p] += e.value * ind[p];
  }
  for (auto& v : img) v = std::clamp(v, 0.0, 1.0);
  return Tensor::from_real({n, n}, std::move(img));
}

Tensor shepp_logan_3d(std::size_t nz, std::size_t n) {
  if (n == 0 || nz == 0) throw ConfigError("phantom size must be positive");
  std::vector<double> vol(nz * n * n, 0.0);
  for (const auto& e : kHead3d) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    for (std::size_t k = 0; k < nz; ++k) {
      const double z = grid_coord(k, nz);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double dx = grid_coord(j, n) - e.x0, dy = -grid_coord(i, n) - e.y0, dz = z - e.z0;
          const double u = dx * std::cos(phi) + dy * std::sin(phi);
          const double v = -dx * std::sin(phi) + dy * std::cos(phi);
          if (u * u / (e.a * e.a) + v * v / (e.b * e.b) + dz * dz / (e.c * e.c) <= 1.0)
            vol[(k * n + i) * n + j] += e.value;
        }
    }
  }
  for (auto& v : vol) v = std::clamp(v, 0.0, 1.0);
  return Tensor::from_real({nz, n, n}, std::move(vol));
}

AffineSubspacePrior ellipse_indicator_prior(std::size_t n, DType dtype) {
  // Small ellipses can cover no pixel centre, or the same pixels as another
  // one, on coarse grids; those columns add nothing to the span.
  std::vector<Tensor> cols, kept;
  for (const auto& e : kHead) {
    Tensor v = with_dtype({n, n}, indicator(e, n), dtype);
    Tensor r = v;
    for (const auto& k : kept) r.axpy(-inner(k, r), k);
    const double nv = norm(v), nr = norm(r);
    if (nv == 0.0 || nr < 1e-8 * nv) continue;
    kept.push_back((1.0 / nr) * r);
    cols.push_back(std::move(v));
  }
  return AffineSubspacePrior::from_spanning(std::move(cols), Tensor::zeros({n, n}, dtype));
}

Tensor random_intensity_head(std::size_t n, RngStream& rng, DType dtype) {
  std::vector<double> img(n * n, 0.0);
  for (const auto& e : kHead) {
    const double v = e.value * (0.5 + rng.uniform());
    auto ind = indicator(e, n);
    for (std::size_t p = 0; p < n * n; ++p) img[p] += v * ind[p];
  }
  return with_dtype({n, n}, img, dtype);
}

AffineSubspacePrior smooth_bump_prior(const Shape& shape, std::size_t l, std::uint64_t seed, DType dtype) {
  if (shape.size() != 2) throw ConfigError("smooth_bump_prior: expects a 2-D shape");
  const std::size_t h = shape[0], w = shape[1];
  RngStream rng(seed);
  std::vector<Tensor> cols;
  for (std::size_t k = 0; k < l; ++k) {
    const double margin = 0.125;
    const double cy = (margin + (1 - 2 * margin) * rng.uniform()) * static_cast<double>(h);
    const double cx = (margin + (1 - 2 * margin) * rng.uniform()) * static_cast<double>(w);
    const double width = (0.06 + 0.13 * rng.uniform()) * static_cast<double>(std::min(h, w));
    const double phase = 2 * std::numbers::pi * rng.uniform();
    std::vector<cplx> v(h * w);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double dy = static_cast<double>(i) - cy, dx = static_cast<double>(j) - cx;
        const double mag = std::exp(-(dx * dx + dy * dy) / (2 * width * width));
        v[i * w + j] = dtype == DType::Complex128 ? std::polar(mag, phase) : cplx(mag);
      }
    Tensor t = Tensor::from_complex(shape, std::move(v));
    cols.push_back(dtype == DType::Complex128 ? t : t.real());
  }
  return AffineSubspacePrior::from_spanning(std::move(cols), Tensor::zeros(shape, dtype));
}

GmmPrior ellipse_gmm_prior(const Shape& shape, std::size_t components, double tau2, std::uint64_t seed,
                           DType dtype) {
  if (shape.size() != 2) throw ConfigError("ellipse_gmm_prior: expects a 2-D shape");
  if (components == 0) throw ConfigError("ellipse_gmm_prior: need at least one component");
  const std::size_t h = shape[0], w = shape[1];
  const double hd = static_cast<double>(h), wd = static_cast<double>(w);
  RngStream rng(seed);
  std::vector<Tensor> means;
  for (std::size_t k = 0; k < components; ++k) {
    std::vector<double> img(h * w, 0.0);
    for (int e = 0; e < 5; ++e) {
      const double cx = 0.1875 * wd + 0.625 * wd * rng.uniform();
      const double cy = 0.1875 * hd + 0.625 * hd * rng.uniform();
      const double ax = (0.0625 + 0.1875 * rng.uniform()) * wd;
      const double ay = (0.0625 + 0.1875 * rng.uniform()) * hd;
      const double val = 0.2 + 0.4 * rng.uniform();
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double u = (static_cast<double>(j) - cx) / ax, v = (static_cast<double>(i) - cy) / ay;
          if (u * u + v * v <= 1.0) img[i * w + j] += val;
        }
    }
    means.push_back(with_dtype(shape, img, dtype));
  }
  std::vector<double> weights(components, 1.0 / static_cast<double>(components));
  double s = 0.0;
  for (double v : weights) s += v;
  weights.back() += 1.0 - s;
  return GmmPrior(std::move(weights), std::move(means), tau2);
}

}  // namespace dds
