#include "dds/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>
#include <numeric>

#include "dds/error.hpp"
#include "dds/fft.hpp"
#include "dds/rng.hpp"

namespace dds {

MaskKind parse_mask_kind(const std::string& s) {
  if (s == "uniform1d") return MaskKind::Uniform1d;
  if (s == "gaussian1d") return MaskKind::Gaussian1d;
  if (s == "gaussian2d") return MaskKind::Gaussian2d;
  if (s == "poisson-disk-vd" || s == "poisson") return MaskKind::PoissonDiskVd;
  throw ConfigError("unknown mask kind '" + s + "'");
}

std::string to_string(MaskKind k) {
  switch (k) {
    case MaskKind::Uniform1d: return "uniform1d";
    case MaskKind::Gaussian1d: return "gaussian1d";
    case MaskKind::Gaussian2d: return "gaussian2d";
    case MaskKind::PoissonDiskVd: return "poisson-disk-vd";
  }
  return "?";
}

namespace {

// Centered block [n/2 - a/2, n/2 - a/2 + a) with a = round(frac * n).
std::pair<std::size_t, std::size_t> acs_block(std::size_t n, double frac) {
  auto a = static_cast<std::size_t>(std::lround(frac * static_cast<double>(n)));
  a = std::min(a, n);
  std::size_t lo = n / 2 - a / 2;
  return {lo, lo + a};
}

// Efraimidis-Spirakis weighted sampling without replacement: keep the k
// largest log(u)/w keys. One uniform is drawn per candidate in index order.
std::vector<std::size_t> weighted_sample(const std::vector<double>& w, std::size_t k,
                                         RngStream& rng) {
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    double u = 1.0 - rng.uniform();
    if (w[i] > 0.0) keys.emplace_back(std::log(u) / w[i], i);
  }
  k = std::min(k, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(),
                    [](const auto& a, const auto& b) {
                      return a.first > b.first || (a.first == b.first && a.second < b.second);
                    });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(keys[i].second);
  return out;
}

std::size_t budget_for(std::size_t size, double r) {
  return static_cast<std::size_t>(std::lround(static_cast<double>(size) / r));
}

std::vector<std::uint8_t> columns_mask(const MaskSpec& spec, std::size_t w) {
  std::vector<std::uint8_t> cols(w, 0);
  auto [lo, hi] = acs_block(w, spec.acs_fraction);
  for (std::size_t j = lo; j < hi; ++j) cols[j] = 1;
  if (spec.kind == MaskKind::Uniform1d) {
    auto step = std::max<long>(1, std::lround(spec.acceleration));
    for (std::size_t j = 0; j < w; j += static_cast<std::size_t>(step)) cols[j] = 1;
    return cols;
  }
  const std::size_t have = hi - lo;
  const std::size_t budget = budget_for(w, spec.acceleration);
  if (budget <= have) return cols;
  RngStream rng(spec.seed);
  const double s = static_cast<double>(w) / 4.0;
  std::vector<double> weights(w);
  for (std::size_t j = 0; j < w; ++j) {
    double d = static_cast<double>(j) - static_cast<double>(w / 2);
    weights[j] = cols[j] ? 0.0 : std::exp(-d * d / (2 * s * s));
  }
  for (auto j : weighted_sample(weights, budget - have, rng)) cols[j] = 1;
  return cols;
}

std::vector<std::uint8_t> acs_2d(const MaskSpec& spec, std::size_t h, std::size_t w) {
  std::vector<std::uint8_t> m(h * w, 0);
  auto [r0, r1] = acs_block(h, spec.acs_fraction);
  auto [c0, c1] = acs_block(w, spec.acs_fraction);
  for (std::size_t i = r0; i < r1; ++i)
    for (std::size_t j = c0; j < c1; ++j) m[i * w + j] = 1;
  return m;
}

std::vector<std::uint8_t> gaussian_2d(const MaskSpec& spec, std::size_t h, std::size_t w) {
  auto m = acs_2d(spec, h, w);
  const std::size_t have = static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
  const std::size_t budget = budget_for(h * w, spec.acceleration);
  if (budget <= have) return m;
  RngStream rng(spec.seed);
  const double sh = static_cast<double>(h) / 4.0, sw = static_cast<double>(w) / 4.0;
  std::vector<double> weights(h * w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      double di = (static_cast<double>(i) - static_cast<double>(h / 2)) / sh;
      double dj = (static_cast<double>(j) - static_cast<double>(w / 2)) / sw;
      weights[i * w + j] = m[i * w + j] ? 0.0 : std::exp(-0.5 * (di * di + dj * dj));
    }
  for (auto p : weighted_sample(weights, budget - have, rng)) m[p] = 1;
  return m;
}

std::vector<std::uint8_t> poisson_2d(const MaskSpec& spec, std::size_t h, std::size_t w) {
  const auto acs = acs_2d(spec, h, w);
  const std::size_t have = static_cast<std::size_t>(std::count(acs.begin(), acs.end(), 1));
  const std::size_t budget = budget_for(h * w, spec.acceleration);
  if (budget <= have) return acs;

  // Seeded candidate order (Fisher-Yates on our own uniforms for portability).
  RngStream rng(spec.seed);
  std::vector<std::size_t> order;
  for (std::size_t p = 0; p < h * w; ++p)
    if (!acs[p]) order.push_back(p);
  for (std::size_t i = order.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  const double ch = static_cast<double>(h / 2), cw = static_cast<double>(w / 2);
  const double half = 0.5 * static_cast<double>(std::max(h, w));
  std::vector<double> dist(h * w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      double di = static_cast<double>(i) - ch, dj = static_cast<double>(j) - cw;
      dist[i * w + j] = std::sqrt(di * di + dj * dj) / half;
    }

  auto throw_darts = [&](double scale, std::vector<std::uint8_t>& m) {
    m.assign(h * w, 0);
    std::size_t count = 0;
    for (auto p : order) {
      const double r = scale * dist[p];
      const long ri = static_cast<long>(std::ceil(r));
      const long pi = static_cast<long>(p / w), pj = static_cast<long>(p % w);
      bool ok = true;
      for (long di = -ri; di <= ri && ok; ++di)
        for (long dj = -ri; dj <= ri; ++dj) {
          long qi = pi + di, qj = pj + dj;
          if (qi < 0 || qj < 0 || qi >= static_cast<long>(h) || qj >= static_cast<long>(w)) continue;
          if (!m[static_cast<std::size_t>(qi) * w + static_cast<std::size_t>(qj)]) continue;
          if (static_cast<double>(di * di + dj * dj) < r * r) {
            ok = false;
            break;
          }
        }
      if (ok) {
        m[p] = 1;
        ++count;
      }
    }
    return count;
  };

  const std::size_t target = budget - have;
  std::vector<std::uint8_t> m, best;
  double lo = 0.0, hi = static_cast<double>(std::max(h, w));
  std::size_t best_gap = static_cast<std::size_t>(-1);
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const std::size_t c = throw_darts(mid, m);
    const std::size_t gap = c > target ? c - target : target - c;
    if (gap < best_gap) {
      best_gap = gap;
      best = m;
    }
    if (c == target) break;
    if (c > target) lo = mid;
    else hi = mid;
  }
  for (std::size_t p = 0; p < h * w; ++p) best[p] = static_cast<std::uint8_t>(best[p] | acs[p]);
  return best;
}

void require_image_shape(const Shape& s, const char* what) {
  if (s.size() != 2) throw ConfigError(std::string(what) + ": expected a 2-D shape");
}

}  // namespace

Tensor make_mask(const MaskSpec& spec, const Shape& shape) {
  require_image_shape(shape, "make_mask");
  if (!(spec.acceleration >= 1.0)) throw ConfigError("mask acceleration must be >= 1");
  if (!(spec.acs_fraction >= 0.0 && spec.acs_fraction <= 1.0))
    throw ConfigError("mask acs fraction must lie in [0, 1]");
  const std::size_t h = shape[0], w = shape[1];
  if (spec.acceleration == 1.0) return Tensor::full(shape, 1.0, DType::Real64);
  std::vector<double> out(h * w, 0.0);
  switch (spec.kind) {
    case MaskKind::Uniform1d:
    case MaskKind::Gaussian1d: {
      auto cols = columns_mask(spec, w);
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = cols[j];
      break;
    }
    case MaskKind::Gaussian2d: {
      auto m = gaussian_2d(spec, h, w);
      std::copy(m.begin(), m.end(), out.begin());
      break;
    }
    case MaskKind::PoissonDiskVd: {
      auto m = poisson_2d(spec, h, w);
      std::copy(m.begin(), m.end(), out.begin());
      break;
    }
  }
  return Tensor::from_real(shape, std::move(out));
}

Tensor make_coil_maps(std::size_t coils, const Shape& image_shape, std::uint64_t seed) {
  require_image_shape(image_shape, "make_coil_maps");
  if (coils == 0) throw ConfigError("coil count must be >= 1");
  const std::size_t h = image_shape[0], w = image_shape[1];
  const double hd = static_cast<double>(h), wd = static_cast<double>(w);
  RngStream rng(seed);
  std::vector<cplx> data(coils * h * w);
  for (std::size_t c = 0; c < coils; ++c) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(coils);
    const double cx = 0.5 * wd * std::cos(a), cy = 0.5 * hd * std::sin(a);
    const double phase0 = 2.0 * std::numbers::pi * rng.uniform();
    const double gx = rng.normal(), gy = rng.normal();
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double y = (hd - 1) / 2 - static_cast<double>(i);
        const double x = static_cast<double>(j) - (wd - 1) / 2;
        const double ex = (x - cx) / (0.5 * wd), ey = (y - cy) / (0.5 * hd);
        const double mag = std::exp(-0.5 * (ex * ex + ey * ey));
        const double ph = phase0 + 2.0 * (gx * x / wd + gy * y / hd);
        data[(c * h + i) * w + j] = std::polar(mag, ph);
      }
  }
  for (std::size_t p = 0; p < h * w; ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < coils; ++c) s += std::norm(data[c * h * w + p]);
    const double inv = 1.0 / std::sqrt(s);
    for (std::size_t c = 0; c < coils; ++c) data[c * h * w + p] *= inv;
  }
  return Tensor::from_complex({coils, h, w}, std::move(data));
}

namespace {

void check_sense_inputs(const Tensor& maps, const Tensor& mask) {
  if (maps.ndim() != 3) throw ConfigError("coil maps must have shape (c, H, W)");
  if (mask.ndim() != 2 || mask.shape()[0] != maps.shape()[1] || mask.shape()[1] != maps.shape()[2])
    throw ConfigError("mask shape " + shape_to_string(mask.shape()) +
                      " does not match coil maps " + shape_to_string(maps.shape()));
}

Tensor sense_forward_unshifted(const Tensor& x, const Tensor& maps, const Tensor& umask) {
  const std::size_t c = maps.shape()[0], hw = x.size();
  Tensor coil_images = Tensor::zeros(maps.shape(), DType::Complex128);
  auto ci = coil_images.mutable_values();
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t p = 0; p < hw; ++p) ci[k * hw + p] = maps[k * hw + p] * x[p];
  Tensor k = fft2(coil_images);
  auto kv = k.mutable_values();
  for (std::size_t q = 0; q < c; ++q)
    for (std::size_t p = 0; p < hw; ++p)
      if (umask[p].real() == 0.0) kv[q * hw + p] = 0.0;
  return k;
}

Tensor sense_adjoint_unshifted(const Tensor& k, const Tensor& maps, const Tensor& umask) {
  const std::size_t c = maps.shape()[0], h = maps.shape()[1], w = maps.shape()[2], hw = h * w;
  Tensor masked = k.as_complex();
  auto mv = masked.mutable_values();
  for (std::size_t q = 0; q < c; ++q)
    for (std::size_t p = 0; p < hw; ++p)
      if (umask[p].real() == 0.0) mv[q * hw + p] = 0.0;
  Tensor imgs = ifft2(masked);
  Tensor out = Tensor::zeros({h, w}, DType::Complex128);
  auto ov = out.mutable_values();
  for (std::size_t q = 0; q < c; ++q)
    for (std::size_t p = 0; p < hw; ++p) ov[p] += std::conj(maps[q * hw + p]) * imgs[q * hw + p];
  out.check_finite("sense adjoint");
  return out;
}

}  // namespace

Tensor sense_apply(const Tensor& x, const Tensor& coil_maps, const Tensor& centered_mask) {
  return sense_operator(coil_maps, centered_mask).apply(x);
}

Tensor sense_adjoint(const Tensor& k, const Tensor& coil_maps, const Tensor& centered_mask) {
  return sense_operator(coil_maps, centered_mask).adjoint(k);
}

LinearMap sense_operator(const Tensor& coil_maps, const Tensor& centered_mask) {
  check_sense_inputs(coil_maps, centered_mask);
  Tensor maps = coil_maps.as_complex();
  Tensor umask = ifftshift2(centered_mask);
  const std::size_t c = maps.shape()[0], h = maps.shape()[1], w = maps.shape()[2];
  LinearMap m;
  m.name = "sense";
  m.domain = {h, w};
  m.range = {c, h, w};
  m.domain_dtype = m.range_dtype = DType::Complex128;
  m.forward = [maps, umask](const Tensor& x) { return sense_forward_unshifted(x, maps, umask); };
  m.backward = [maps, umask](const Tensor& k) { return sense_adjoint_unshifted(k, maps, umask); };
  if (c == 1) m.pinv = m.backward;
  return m;
}

RadonGeometry RadonGeometry::uniform(std::size_t n, std::size_t n_angles, std::size_t bins) {
  RadonGeometry g;
  g.n = n;
  g.bins = bins;
  for (std::size_t a = 0; a < n_angles; ++a)
    g.angles.push_back(std::numbers::pi * static_cast<double>(a) / static_cast<double>(n_angles));
  g.validate();
  return g;
}

void RadonGeometry::validate() const {
  if (n == 0) throw ConfigError("radon: image side must be positive");
  if (bins == 0) throw ConfigError("radon: detector bins must be positive");
  if (angles.empty()) throw ConfigError("radon: empty angle list");
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!(angles[i] >= 0.0 && angles[i] < std::numbers::pi))
      throw ConfigError("radon: angles must lie in [0, pi)");
    if (i > 0 && !(angles[i] > angles[i - 1]))
      throw ConfigError("radon: angles must be strictly increasing");
  }
}

RadonTransform::RadonTransform(RadonGeometry geom) : geom_(std::move(geom)) {
  geom_.validate();
  const std::size_t n = geom_.n;
  const double nd = static_cast<double>(n);
  const double half_len = nd * std::numbers::sqrt2 / 2.0 + 1.0;
  const std::size_t k_samples = 2 * static_cast<std::size_t>(std::ceil(half_len / 0.5)) + 1;
  const double c0 = (nd - 1) / 2;
  std::vector<double> acc(n * n, 0.0);
  std::vector<std::size_t> touched;
  row_ptr_.push_back(0);
  for (double theta : geom_.angles) {
    const double ct = std::cos(theta), st = std::sin(theta);
    for (std::size_t b = 0; b < geom_.bins; ++b) {
      const double s = static_cast<double>(b) - (static_cast<double>(geom_.bins) - 1) / 2;
      for (std::size_t k = 0; k < k_samples; ++k) {
        const double u = (static_cast<double>(k) - static_cast<double>(k_samples - 1) / 2) * 0.5;
        const double px = s * ct - u * st;
        const double py = s * st + u * ct;
        const double fj = px + c0, fi = c0 - py;
        const double j0 = std::floor(fj), i0 = std::floor(fi);
        const double dx = fj - j0, dy = fi - i0;
        const double wts[4] = {(1 - dx) * (1 - dy), dx * (1 - dy), (1 - dx) * dy, dx * dy};
        const double di[4] = {0, 0, 1, 1}, dj[4] = {0, 1, 0, 1};
        for (int q = 0; q < 4; ++q) {
          const double ii = i0 + di[q], jj = j0 + dj[q];
          if (wts[q] == 0.0 || ii < 0 || jj < 0 || ii >= nd || jj >= nd) continue;
          const auto p = static_cast<std::size_t>(ii) * n + static_cast<std::size_t>(jj);
          if (acc[p] == 0.0) touched.push_back(p);
          acc[p] += 0.5 * wts[q];
        }
      }
      std::sort(touched.begin(), touched.end());
      for (auto p : touched) {
        cols_.push_back(p);
        vals_.push_back(acc[p]);
        acc[p] = 0.0;
      }
      touched.clear();
      row_ptr_.push_back(cols_.size());
    }
  }
}

Tensor RadonTransform::apply(const Tensor& image) const {
  if (image.shape() != Shape{geom_.n, geom_.n})
    throw ConfigError("radon: image must be " + std::to_string(geom_.n) + "x" + std::to_string(geom_.n));
  if (image.is_complex()) throw ConfigError("radon: image must be real");
  std::vector<double> out(row_ptr_.size() - 1, 0.0);
  auto v = image.values();
  for (std::size_t r = 0; r + 1 < row_ptr_.size(); ++r) {
    double s = 0.0;
    for (std::size_t e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) s += vals_[e] * v[cols_[e]].real();
    out[r] = s;
  }
  return Tensor::from_real({geom_.angles.size(), geom_.bins}, std::move(out));
}

Tensor RadonTransform::adjoint(const Tensor& sinogram) const {
  if (sinogram.shape() != Shape{geom_.angles.size(), geom_.bins})
    throw ConfigError("radon adjoint: sinogram shape mismatch");
  if (sinogram.is_complex()) throw ConfigError("radon adjoint: sinogram must be real");
  std::vector<double> out(geom_.n * geom_.n, 0.0);
  auto v = sinogram.values();
  for (std::size_t r = 0; r + 1 < row_ptr_.size(); ++r) {
    const double y = v[r].real();
    if (y == 0.0) continue;
    for (std::size_t e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) out[cols_[e]] += vals_[e] * y;
  }
  return Tensor::from_real({geom_.n, geom_.n}, std::move(out));
}

LinearMap RadonTransform::as_map() const {
  auto self = std::make_shared<RadonTransform>(*this);
  LinearMap m;
  m.name = "radon";
  m.domain = {geom_.n, geom_.n};
  m.range = {geom_.angles.size(), geom_.bins};
  m.domain_dtype = m.range_dtype = DType::Real64;
  m.forward = [self](const Tensor& x) { return self->apply(x); };
  m.backward = [self](const Tensor& y) { return self->adjoint(y); };
  return m;
}

namespace {

void check_volume(const Tensor& v, const char* what) {
  if (v.ndim() != 3) throw ConfigError(std::string(what) + ": expected a (nz, ny, nx) volume");
  if (v.shape()[0] < 2) throw ConfigError(std::string(what) + ": need at least 2 slices");
}

}  // namespace

Tensor diff_z_apply(const Tensor& v) {
  check_volume(v, "diff_z");
  const std::size_t nz = v.shape()[0], s = v.size() / nz;
  Tensor out = v.zeros_like();
  auto o = out.mutable_values();
  for (std::size_t k = 0; k + 1 < nz; ++k)
    for (std::size_t p = 0; p < s; ++p) o[k * s + p] = v[(k + 1) * s + p] - v[k * s + p];
  return out;
}

Tensor diff_z_adjoint(const Tensor& d) {
  check_volume(d, "diff_z adjoint");
  const std::size_t nz = d.shape()[0], s = d.size() / nz;
  Tensor out = d.zeros_like();
  auto o = out.mutable_values();
  for (std::size_t k = 0; k + 1 < nz; ++k)
    for (std::size_t p = 0; p < s; ++p) {
      o[(k + 1) * s + p] += d[k * s + p];
      o[k * s + p] -= d[k * s + p];
    }
  return out;
}

LinearMap diff_z_map(const Shape& volume_shape, DType dtype) {
  if (volume_shape.size() != 3 || volume_shape[0] < 2)
    throw ConfigError("diff_z: need a (nz >= 2, ny, nx) volume shape");
  LinearMap m;
  m.name = "diff_z";
  m.domain = m.range = volume_shape;
  m.domain_dtype = m.range_dtype = dtype;
  m.forward = diff_z_apply;
  m.backward = diff_z_adjoint;
  return m;
}

}  // namespace dds
