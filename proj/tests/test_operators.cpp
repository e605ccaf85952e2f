#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dds/error.hpp"
#include "dds/fft.hpp"
#include "dds/operators.hpp"
#include "oracle.hpp"

using namespace dds;

namespace {

double density(const Tensor& m) {
  double s = 0;
  for (auto v : m.values()) s += v.real();
  return s / static_cast<double>(m.size());
}

}  // namespace

TEST(Mask, Uniform1dConstructive) {
  Tensor m = make_mask({MaskKind::Uniform1d, 4.0, 0.125, 0}, {8, 32});
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < 32; ++j)
    if (m.at({0, j}).real() == 1.0) cols.push_back(j);
  std::vector<std::size_t> expect{0, 4, 8, 12, 14, 15, 16, 17, 20, 24, 28};
  EXPECT_EQ(cols, expect);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(m.at({i, j}), m.at({0, j}));
}

TEST(Mask, AccelerationOneIsFull) {
  for (auto k : {MaskKind::Uniform1d, MaskKind::Gaussian1d, MaskKind::Gaussian2d, MaskKind::PoissonDiskVd}) {
    Tensor m = make_mask({k, 1.0, 0.08, 3}, {16, 16});
    EXPECT_EQ(density(m), 1.0);
  }
}

TEST(Mask, AccelerationBelowOneRejected) {
  EXPECT_THROW(make_mask({MaskKind::Gaussian1d, 0.5, 0.08, 0}, {16, 16}), ConfigError);
}

TEST(Mask, RandomFamiliesDeterministicWithDensityAndAcs) {
  for (auto k : {MaskKind::Gaussian1d, MaskKind::Gaussian2d, MaskKind::PoissonDiskVd}) {
    for (double r : {2.0, 4.0, 8.0}) {
      MaskSpec spec{k, r, 0.08, 42};
      Tensor a = make_mask(spec, {64, 64});
      Tensor b = make_mask(spec, {64, 64});
      EXPECT_EQ(a, b);
      EXPECT_NEAR(density(a), 1.0 / r, 0.15 / r) << to_string(k) << " R=" << r;
      // ACS: round(0.08 * 64) = 5 lines centered at 32.
      for (std::size_t j = 30; j < 35; ++j) EXPECT_EQ(a.at({32, j}).real(), 1.0);
      for (std::size_t i = 30; i < 35; ++i) EXPECT_EQ(a.at({i, 32}).real(), 1.0);
    }
  }
}

TEST(Mask, SeedChangesRandomMask) {
  Tensor a = make_mask({MaskKind::Gaussian2d, 8.0, 0.08, 1}, {32, 32});
  Tensor b = make_mask({MaskKind::Gaussian2d, 8.0, 0.08, 2}, {32, 32});
  EXPECT_NE(a, b);
}

TEST(CoilMaps, NormalizedAndReproducible) {
  for (std::size_t c : {1u, 2u, 4u, 8u}) {
    Tensor s = make_coil_maps(c, {16, 32}, 5);
    EXPECT_EQ(s.shape(), (Shape{c, 16, 32}));
    for (std::size_t p = 0; p < 16 * 32; ++p) {
      double sum = 0;
      for (std::size_t k = 0; k < c; ++k) sum += std::norm(s[k * 512 + p]);
      ASSERT_NEAR(sum, 1.0, 1e-10);
    }
    EXPECT_EQ(s, make_coil_maps(c, {16, 32}, 5));
  }
  Tensor one = make_coil_maps(1, {8, 8}, 0);
  for (auto v : one.values()) EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
}

TEST(Sense, SingleUnitCoilFullMaskIsFft) {
  Tensor maps = Tensor::full({1, 8, 8}, 1.0, DType::Complex128);
  Tensor mask = Tensor::full({8, 8}, 1.0, DType::Real64);
  RngStream rng(1);
  Tensor x = randn(rng, {8, 8}, DType::Complex128);
  Tensor k = sense_apply(x, maps, mask);
  EXPECT_EQ(k.reshaped({8, 8}), fft2(x));
  EXPECT_LE(max_abs_diff(sense_adjoint(k, maps, mask), x), 1e-12);
}

TEST(Sense, ZeroCases) {
  Tensor maps = make_coil_maps(3, {8, 8}, 1);
  Tensor mask = make_mask({MaskKind::Gaussian1d, 4, 0.08, 1}, {8, 8});
  EXPECT_EQ(norm(sense_apply(Tensor::zeros({8, 8}, DType::Complex128), maps, mask)), 0.0);
  RngStream rng(2);
  Tensor k = randn(rng, {3, 8, 8}, DType::Complex128);
  EXPECT_EQ(norm(sense_adjoint(k, maps, Tensor::zeros({8, 8}))), 0.0);
}

TEST(Sense, ZerosOutsideMask) {
  Tensor maps = make_coil_maps(2, {8, 8}, 1);
  Tensor mask = make_mask({MaskKind::Uniform1d, 4, 0.0, 0}, {8, 8});
  RngStream rng(3);
  Tensor k = sense_apply(randn(rng, {8, 8}, DType::Complex128), maps, mask);
  Tensor um = ifftshift2(mask);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t p = 0; p < 64; ++p)
      if (um[p].real() == 0.0) EXPECT_EQ(k[c * 64 + p], cplx(0.0));
}

TEST(Sense, DotTestAndShapeErrors) {
  LinearMap a = sense_operator(make_coil_maps(4, {16, 16}, 7),
                               make_mask({MaskKind::PoissonDiskVd, 4, 0.08, 7}, {16, 16}));
  RngStream rng(8);
  EXPECT_LE(dot_test(a, rng).worst_relative, 1e-10);
  EXPECT_THROW(a.apply(Tensor::zeros({8, 8}, DType::Complex128)), ConfigError);
  EXPECT_THROW(sense_operator(make_coil_maps(2, {16, 16}, 1), Tensor::zeros({8, 8})), ConfigError);
}

TEST(Sense, SpectralNormAtMostOne) {
  LinearMap a = sense_operator(make_coil_maps(4, {16, 16}, 3),
                               make_mask({MaskKind::Gaussian2d, 3, 0.08, 3}, {16, 16}));
  RngStream rng(4);
  Tensor v = randn(rng, {16, 16}, DType::Complex128);
  double lam = 0;
  for (int it = 0; it < 200; ++it) {
    v *= 1.0 / norm(v);
    Tensor w = a.adjoint(a.apply(v));
    lam = inner(v, w).real();
    v = w;
  }
  EXPECT_LE(lam, 1.0 + 1e-8);
  EXPECT_GT(lam, 0.5);
}

TEST(Sense, NormalIsHermitianPsd) {
  LinearMap n = normal_map(sense_operator(make_coil_maps(3, {16, 16}, 2),
                                          make_mask({MaskKind::Gaussian1d, 4, 0.08, 2}, {16, 16})));
  RngStream rng(5);
  for (int i = 0; i < 10; ++i) {
    Tensor x = randn(rng, {16, 16}, DType::Complex128);
    Tensor z = randn(rng, {16, 16}, DType::Complex128);
    EXPECT_GE(inner(n.apply(x), x).real(), -1e-12);
    EXPECT_LE(std::abs(inner(n.apply(x), z) - std::conj(inner(n.apply(z), x))), 1e-10 * norm(x) * norm(z));
  }
}

TEST(Sense, SingleCoilPinvMatchesDensePinv) {
  LinearMap a = sense_operator(make_coil_maps(1, {8, 8}, 3),
                               make_mask({MaskKind::Gaussian1d, 3, 0.08, 9}, {8, 8}));
  ASSERT_TRUE(a.has_pseudo_inverse());
  oracle::Mat m = oracle::to_mat(to_dense(a));
  oracle::Mat pinv = m.completeOrthogonalDecomposition().pseudoInverse();
  RngStream rng(6);
  Tensor y = randn(rng, a.range, DType::Complex128);
  Tensor got = a.pseudo_inverse(y);
  oracle::Vec want = pinv * oracle::to_vec(y);
  EXPECT_LE((oracle::to_vec(got) - want).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Radon, ZeroInZeroOut) {
  RadonTransform r(RadonGeometry::uniform(16, 8, 16));
  EXPECT_EQ(norm(r.apply(Tensor::zeros({16, 16}))), 0.0);
  EXPECT_EQ(norm(r.adjoint(Tensor::zeros({8, 16}))), 0.0);
}

TEST(Radon, DiskSymmetricAcrossRightAngle) {
  RadonGeometry g;
  g.n = 32;
  g.bins = 32;
  g.angles = {0.0, std::numbers::pi / 2};
  RadonTransform r(g);
  std::vector<double> img(32 * 32);
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t j = 0; j < 32; ++j) {
      double x = double(j) - 15.5, y = 15.5 - double(i);
      img[i * 32 + j] = x * x + y * y <= 100 ? 1.0 : 0.0;
    }
  Tensor s = r.apply(Tensor::from_real({32, 32}, img));
  for (std::size_t b = 0; b < 32; ++b) EXPECT_NEAR(s.at({0, b}).real(), s.at({1, b}).real(), 1e-6);
}

TEST(Radon, CenterPixelMatchesTentOracle) {
  RadonGeometry g = RadonGeometry::uniform(16, 8, 17);
  RadonTransform r(g);
  Eigen::MatrixXd dense = oracle::radon_tent_matrix(g);
  std::vector<double> img(256, 0.0);
  img[8 * 16 + 8] = 1.0;
  Tensor s = r.apply(Tensor::from_real({16, 16}, img));
  for (std::size_t a = 0; a < 8; ++a)
    EXPECT_NEAR(s.at({a, 8}).real(), dense(long(a * 17 + 8), 8 * 16 + 8), 1e-8);
}

TEST(Radon, DenseEquivalence) {
  RadonGeometry g = RadonGeometry::uniform(8, 6, 11);
  RadonTransform r(g);
  Eigen::MatrixXd oracle_a = oracle::radon_tent_matrix(g);
  DenseMatrix fwd = to_dense(r.as_map());
  DenseMatrix adj = to_dense(r.as_map().adjoint_map());
  double worst = 0;
  for (std::size_t i = 0; i < fwd.rows; ++i)
    for (std::size_t j = 0; j < fwd.cols; ++j) {
      worst = std::max(worst, std::abs(fwd(i, j) - oracle_a(long(i), long(j))));
      worst = std::max(worst, std::abs(adj(j, i) - oracle_a(long(i), long(j))));
    }
  EXPECT_LE(worst, 1e-12);
}

TEST(Radon, DotTest) {
  RadonTransform r(RadonGeometry::uniform(16, 8, 16));
  RngStream rng(1);
  EXPECT_LE(dot_test(r.as_map(), rng).worst_relative, 1e-10);
}

TEST(Radon, GeometryValidation) {
  EXPECT_THROW(RadonTransform(RadonGeometry{8, 8, {}}), ConfigError);
  EXPECT_THROW(RadonTransform(RadonGeometry{8, 8, {0.5, 0.2}}), ConfigError);
  EXPECT_THROW(RadonTransform(RadonGeometry{8, 8, {0.0, 4.0}}), ConfigError);
}

TEST(DiffZ, ConstantAndRamp) {
  Tensor c = Tensor::full({4, 3, 3}, 2.5, DType::Real64);
  EXPECT_EQ(norm(diff_z_apply(c)), 0.0);
  std::vector<double> ramp(4 * 9);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t p = 0; p < 9; ++p) ramp[k * 9 + p] = double(k);
  Tensor d = diff_z_apply(Tensor::from_real({4, 3, 3}, ramp));
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t p = 0; p < 9; ++p) EXPECT_EQ(d[k * 9 + p].real(), k < 3 ? 1.0 : 0.0);
  EXPECT_THROW(diff_z_apply(Tensor::zeros({1, 3, 3})), ConfigError);
}

TEST(DiffZ, DotTestAndDenseTranspose) {
  LinearMap d = diff_z_map({4, 3, 2}, DType::Real64);
  RngStream rng(2);
  EXPECT_LE(dot_test(d, rng).worst_relative, 1e-12);
  oracle::Mat fwd = oracle::to_mat(to_dense(d));
  oracle::Mat adj = oracle::to_mat(to_dense(d.adjoint_map()));
  EXPECT_LE((fwd.adjoint() - adj).cwiseAbs().maxCoeff(), 1e-12);
  // Independent stencil: row (k, p) has -1 at (k, p) and +1 at (k+1, p).
  oracle::Mat want = oracle::Mat::Zero(24, 24);
  for (int k = 0; k < 3; ++k)
    for (int p = 0; p < 6; ++p) {
      want(k * 6 + p, k * 6 + p) = -1.0;
      want(k * 6 + p, (k + 1) * 6 + p) = 1.0;
    }
  EXPECT_LE((fwd - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LinearMap, ComposeNormalAndCombination) {
  RngStream rng(3);
  oracle::Mat a = oracle::Mat::Random(5, 4), b = oracle::Mat::Random(3, 5);
  LinearMap am = oracle::complex_dense_map(a), bm = oracle::complex_dense_map(b);
  LinearMap ba = compose(bm, am);
  EXPECT_LE((oracle::to_mat(to_dense(ba)) - b * a).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((oracle::to_mat(to_dense(normal_map(am))) - a.adjoint() * a).cwiseAbs().maxCoeff(), 1e-12);
  LinearMap id = identity_map({4}, DType::Complex128);
  LinearMap lc = linear_combination(1.0, id, 0.5, normal_map(am));
  oracle::Mat want = oracle::Mat::Identity(4, 4) + 0.5 * a.adjoint() * a;
  EXPECT_LE((oracle::to_mat(to_dense(lc)) - want).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(dot_test(ba, rng).worst_relative, 1e-10);
  EXPECT_THROW(compose(am, bm), ConfigError);
}

TEST(LinearMap, SlicewiseMatchesPerSlice) {
  LinearMap a = sense_operator(make_coil_maps(2, {8, 8}, 1),
                               make_mask({MaskKind::Gaussian1d, 2, 0.08, 1}, {8, 8}));
  LinearMap v = slicewise(a, 3);
  RngStream rng(4);
  Tensor x = randn(rng, {3, 8, 8}, DType::Complex128);
  Tensor y = v.apply(x);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(y.slice(k), a.apply(x.slice(k)));
  EXPECT_LE(dot_test(v, rng).worst_relative, 1e-10);
}

TEST(LinearMap, RealMapRejectsComplexInput) {
  RadonTransform r(RadonGeometry::uniform(8, 4, 8));
  EXPECT_THROW(r.as_map().apply(Tensor::zeros({8, 8}, DType::Complex128)), ConfigError);
}
