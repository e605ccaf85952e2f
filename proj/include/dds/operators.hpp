#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dds/linear_map.hpp"
#include "dds/tensor.hpp"

namespace dds {

enum class MaskKind { Uniform1d, Gaussian1d, Gaussian2d, PoissonDiskVd };

MaskKind parse_mask_kind(const std::string& s);
std::string to_string(MaskKind k);

struct MaskSpec {
  MaskKind kind = MaskKind::Uniform1d;
  double acceleration = 4.0;
  double acs_fraction = 0.08;
  std::uint64_t seed = 0;
};

/// Binary Real64 mask of shape (H, W) in centered k-space layout (DC at
/// (H/2, W/2)). 1-D kinds select columns and replicate them over rows.
///
/// uniform1d: columns j with j % round(R) == 0, plus the ACS block.
/// gaussian1d / gaussian2d: ACS block plus round(size / R) - |ACS| extra
///   locations drawn without replacement, weights exp(-d^2 / (2 (n/4)^2)).
/// poisson-disk-vd: ACS block plus dart throwing in a seeded order, exclusion
///   radius growing linearly with distance from center; the radius scale is
///   bisected until the count matches round(size / R).
Tensor make_mask(const MaskSpec& spec, const Shape& shape);

/// (c, H, W) complex sensitivities with sum_i |s_i|^2 = 1 at every pixel.
Tensor make_coil_maps(std::size_t coils, const Shape& image_shape, std::uint64_t seed);

/// Multi-coil masked Fourier operator A x = M . F(s_i . x), image (H, W) to
/// k-space (c, H, W). The mask is given centered and stored unshifted, so the
/// k-space data is in the native FFT layout. With one coil of unit modulus the
/// zero-filled adjoint is the exact pseudo-inverse and is attached as such.
LinearMap sense_operator(const Tensor& coil_maps, const Tensor& centered_mask);

Tensor sense_apply(const Tensor& x, const Tensor& coil_maps, const Tensor& centered_mask);
Tensor sense_adjoint(const Tensor& k, const Tensor& coil_maps, const Tensor& centered_mask);

struct RadonGeometry {
  std::size_t n = 0;
  std::size_t bins = 0;
  std::vector<double> angles;

  static RadonGeometry uniform(std::size_t n, std::size_t n_angles, std::size_t bins);
  void validate() const;
};

/// Parallel-beam projector on an (n, n) real image, sinogram (angles, bins).
///
/// Pixel (i, j) sits at x = j - (n-1)/2, y = (n-1)/2 - i. Detector bin b is at
/// offset s_b = b - (bins-1)/2. A ray samples the image bilinearly at points
/// s_b (cos t, sin t) + u (-sin t, cos t), u on a symmetric 0.5-pixel grid
/// long enough to cross the image, each sample weighted 0.5. The adjoint is
/// the exact transpose of these weights.
class RadonTransform {
 public:
  explicit RadonTransform(RadonGeometry geom);

  const RadonGeometry& geometry() const { return geom_; }
  Tensor apply(const Tensor& image) const;
  Tensor adjoint(const Tensor& sinogram) const;
  LinearMap as_map() const;

 private:
  RadonGeometry geom_;
  // CSR over rays (angle-major), columns are flat pixel indices.
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
};

/// Forward difference along axis 0 of a (nz, ny, nx) volume; last slice 0.
Tensor diff_z_apply(const Tensor& v);
Tensor diff_z_adjoint(const Tensor& d);
LinearMap diff_z_map(const Shape& volume_shape, DType dtype);

}  // namespace dds
