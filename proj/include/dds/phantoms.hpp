#pragma once

#include <cstdint>
#include <string>

#include "dds/diffusion.hpp"
#include "dds/tensor.hpp"

namespace dds {

/// Modified Shepp-Logan head on an (n, n) grid, values clamped to [0, 1].
Tensor shepp_logan_2d(std::size_t n);
/// 3-D modified Shepp-Logan on (nz, n, n). Ellipsoids rotate about z only.
Tensor shepp_logan_3d(std::size_t nz, std::size_t n);

/// Subspace spanned by the indicator images of the Shepp-Logan ellipses
/// (offset 0; at most 10-dim, fewer when ellipses vanish on coarse grids).
/// Any head with re-weighted intensities lies in it.
AffineSubspacePrior ellipse_indicator_prior(std::size_t n, DType dtype);

/// l random smooth Gaussian bumps (complex ones carry a random global phase),
/// orthonormalized; offset zero.
AffineSubspacePrior smooth_bump_prior(const Shape& shape, std::size_t l, std::uint64_t seed, DType dtype);

/// Equal-weight mixture whose means are random piecewise-constant ellipse
/// images (five ellipses each, intensities in [0.2, 0.6]).
GmmPrior ellipse_gmm_prior(const Shape& shape, std::size_t components, double tau2, std::uint64_t seed,
                           DType dtype);

/// Shepp-Logan head with ellipse intensities drawn from `rng`; lies in the
/// ellipse_indicator_prior subspace.
Tensor random_intensity_head(std::size_t n, RngStream& rng, DType dtype);

}  // namespace dds
