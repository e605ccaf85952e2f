#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "dds/admm_tv.hpp"
#include "dds/error.hpp"
#include "dds/krylov.hpp"
#include "dds/operators.hpp"
#include "dds/phantoms.hpp"

using namespace dds;

namespace {

struct CtProblem {
  LinearMap a;
  Tensor xs, y;
};

CtProblem ct_problem(std::size_t nz, std::size_t angles, double noise, std::uint64_t seed) {
  RadonTransform r(RadonGeometry::uniform(8, angles, 12));
  LinearMap a = slicewise(r.as_map(), nz);
  Tensor xs = shepp_logan_3d(nz, 8);
  RngStream rng(seed);
  Tensor y = a.apply(xs);
  if (noise > 0) y += noise * randn(rng, a.range, DType::Real64);
  return {a, xs, y};
}

// Minimizer of kappa|u| + 0.5 (u - v)^2 by successive grid refinement.
// Extended precision: comparing O(1) objective values in double only
// resolves the minimizer to about 1e-8.
double prox_by_grid(double v, double kappa) {
  using ld = long double;
  auto f = [&](ld u) { return ld(kappa) * std::fabs(u) + 0.5L * (u - ld(v)) * (u - ld(v)); };
  ld lo = -std::abs(v) - 1.0L, hi = std::abs(v) + 1.0L;
  for (int round = 0; round < 60; ++round) {
    const int n = 40;
    ld best = lo, fbest = f(lo);
    for (int i = 1; i <= n; ++i) {
      const ld u = lo + (hi - lo) * i / n;
      if (f(u) < fbest) fbest = f(u), best = u;
    }
    const ld h = (hi - lo) / n;
    lo = best - h;
    hi = best + h;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

std::shared_ptr<const Denoiser> slice_prior(std::size_t n, std::size_t l, std::uint64_t seed) {
  return std::make_shared<AffineSubspacePrior>(smooth_bump_prior({n, n}, l, seed, DType::Real64));
}

}  // namespace

TEST(SoftThreshold, Examples) {
  Tensor v = Tensor::from_real({3}, {0.5, -0.1, -0.7});
  Tensor s = soft_threshold(v, 0.2);
  EXPECT_NEAR(s[0].real(), 0.3, 1e-15);
  EXPECT_EQ(s[1].real(), 0.0);
  EXPECT_NEAR(s[2].real(), -0.5, 1e-15);
  EXPECT_EQ(soft_threshold(v, 0.0), v);
  EXPECT_THROW(soft_threshold(v, -1e-3), ConfigError);
  Tensor c = Tensor::from_complex({1}, {cplx(3.0, 4.0)});
  EXPECT_NEAR(std::abs(soft_threshold(c, 1.0)[0] - cplx(2.4, 3.2)), 0.0, 1e-15);
}

TEST(SoftThreshold, IsTheProximalMapOfTheL1Norm) {
  RngStream rng(5);
  for (int i = 0; i < 200; ++i) {
    const double v = 4.0 * (rng.uniform() - 0.5), kappa = 2.0 * rng.uniform();
    const double got = soft_threshold(Tensor::from_real({1}, {v}), kappa)[0].real();
    EXPECT_NEAR(got, prox_by_grid(v, kappa), 1e-8) << "v=" << v << " kappa=" << kappa;
  }
}

TEST(TvConfig, Validation) {
  TvConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rho = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.rho = 1.0;
  cfg.lambda = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.lambda = 1.0;
  cfg.lambda_schedule = {0.5, 0.25};
  EXPECT_EQ(cfg.lambda_at(2), 0.25);
  EXPECT_THROW(cfg.lambda_at(3), ConfigError);
}

TEST(AdmmTvDc, ZeroInnerStepsLeavesEstimate) {
  CtProblem p = ct_problem(4, 6, 0.0, 1);
  RngStream rng(2);
  Tensor xh = randn(rng, p.a.domain, DType::Real64);
  AdmmState s = AdmmState::zeros(p.a.domain, DType::Real64);
  TvConfig cfg;
  cfg.cg_steps = 0;
  EXPECT_EQ(admm_tv_dc(xh, p.a, p.y, s, cfg), xh);
  // z and w still take one step from D x_hat.
  EXPECT_GT(norm(s.z) + norm(s.w), 0.0);
}

TEST(AdmmTvDc, SmallRhoZeroLambdaIsPlainCg) {
  CtProblem p = ct_problem(4, 6, 0.01, 3);
  RngStream rng(4);
  Tensor xh = randn(rng, p.a.domain, DType::Real64);
  AdmmState s = AdmmState::zeros(p.a.domain, DType::Real64);
  TvConfig cfg;
  cfg.lambda = 0.0;
  cfg.rho = 1e-10;
  cfg.cg_steps = 5;
  Tensor got = admm_tv_dc(xh, p.a, p.y, s, cfg);
  Tensor ref = cg(normal_map(p.a), p.a.adjoint(p.y), xh, 5).x;
  EXPECT_LE(max_abs_diff(got, ref), 1e-6);
}

TEST(AdmmTvDc, XUpdateIsOptimalAtConvergence) {
  CtProblem p = ct_problem(4, 6, 0.01, 5);
  RngStream rng(6);
  AdmmState s{randn(rng, p.a.domain, DType::Real64), randn(rng, p.a.domain, DType::Real64)};
  const AdmmState before = s;
  TvConfig cfg;
  cfg.lambda = 0.3;
  cfg.rho = 0.5;
  cfg.cg_steps = 400;
  Tensor x = admm_tv_dc(Tensor::zeros(p.a.domain, DType::Real64), p.a, p.y, s, cfg);
  Tensor g = p.a.adjoint(p.a.apply(x) - p.y);
  g.axpy(cfg.rho, diff_z_adjoint(diff_z_apply(x) - before.z + before.w));
  EXPECT_LE(norm(g), 1e-6 * norm(p.a.adjoint(p.y)));
  // z and w follow the closed-form updates.
  Tensor dx = diff_z_apply(x);
  EXPECT_LE(max_abs_diff(s.z, soft_threshold(dx + before.w, cfg.lambda / cfg.rho)), 1e-14);
  EXPECT_LE(max_abs_diff(s.w, before.w + dx - s.z), 1e-14);
}

TEST(AdmmTvDc, ConstantInZTruthStaysFlat) {
  RadonTransform r(RadonGeometry::uniform(8, 5, 12));
  LinearMap a = slicewise(r.as_map(), 4);
  Tensor slice = shepp_logan_2d(8);
  Tensor xs = Tensor::stack({slice, slice, slice, slice});
  Tensor y = a.apply(xs);
  TvConfig cfg;
  cfg.lambda = 0.5;
  cfg.rho = 1.0;
  AdmmState s = AdmmState::zeros(a.domain, DType::Real64);
  Tensor x = Tensor::zeros(a.domain, DType::Real64);
  for (int k = 0; k < 10; ++k) x = admm_tv_dc(x, a, y, s, cfg);
  EXPECT_LE(norm(diff_z_apply(x)), 1e-6);
  Tensor ref = reference_admm(Tensor::zeros(a.domain, DType::Real64), a, y, cfg.lambda, cfg.rho, 50);
  EXPECT_LE(norm(diff_z_apply(ref)), 1e-6);
}

TEST(AdmmTvDc, SharedStateSingleIterationReachesReferenceObjective) {
  // Frozen problem: the denoiser is the identity, so each step warm-starts
  // from the previous x' while z and w persist.
  CtProblem p = ct_problem(4, 6, 0.01, 1);
  const double lambda = 0.1, rho = 1.0;
  Tensor x0 = Tensor::zeros(p.a.domain, DType::Real64);
  const double f_ref = tv_objective(reference_admm(x0, p.a, p.y, lambda, rho, 500), p.a, p.y, lambda);
  TvConfig cfg;
  cfg.lambda = lambda;
  cfg.rho = rho;
  cfg.cg_steps = 5;
  AdmmState s = AdmmState::zeros(p.a.domain, DType::Real64);
  Tensor x = x0;
  for (int k = 0; k < 50; ++k) x = admm_tv_dc(x, p.a, p.y, s, cfg);
  EXPECT_LE(tv_objective(x, p.a, p.y, lambda), 1.01 * f_ref);
}

TEST(AdmmTvDc, RejectsBadState) {
  CtProblem p = ct_problem(4, 6, 0.0, 1);
  AdmmState s = AdmmState::zeros({2, 8, 8}, DType::Real64);
  EXPECT_THROW(admm_tv_dc(p.xs, p.a, p.y, s, TvConfig{}), ConfigError);
}

TEST(Dds3d, ZeroLambdaMatchesPlainDds) {
  CtProblem p = ct_problem(4, 6, 0.0, 7);
  SliceDenoiser den(slice_prior(8, 5, 3));
  SamplerConfig cfg;
  cfg.nfe = 10;
  cfg.eta = 0.15;
  TvConfig tv;
  tv.lambda = 0.0;
  tv.rho = 1e-10;
  for (Mode mode : {Mode::Vp, Mode::Ve}) {
    cfg.mode = mode;
    RngStream r1(11), r2(11);
    Recon3dResult a = dds_3d_reconstruct(p.a, p.y, den, cfg, tv, r1);
    ReconResult b = dds_reconstruct(p.a, p.y, den, cfg, r2);
    EXPECT_LE(max_abs_diff(a.recon.x0, b.x0), 1e-6) << to_string(mode);
    EXPECT_FALSE(a.objective.empty());
  }
}

TEST(Dds3d, LargeLambdaMakesIdenticalSlices) {
  RadonTransform r(RadonGeometry::uniform(8, 5, 12));
  LinearMap a = slicewise(r.as_map(), 2);
  auto prior = std::make_shared<AffineSubspacePrior>(smooth_bump_prior({8, 8}, 5, 9, DType::Real64));
  RngStream g(1);
  Tensor slice = prior->sample(g);
  Tensor y = a.apply(Tensor::stack({slice, slice}));
  SliceDenoiser den(prior);
  SamplerConfig cfg;
  cfg.nfe = 20;
  cfg.eta = 0.0;
  TvConfig tv;
  tv.lambda = 1e3;
  tv.rho = 10.0;
  RngStream rng(3);
  Recon3dResult res = dds_3d_reconstruct(a, y, den, cfg, tv, rng);
  EXPECT_LE(max_abs_diff(res.recon.x0.slice(0), res.recon.x0.slice(1)), 1e-4);
}

TEST(Dds3d, DeterministicAndVeSwitchesToAdmm) {
  CtProblem p = ct_problem(4, 6, 0.01, 2);
  SliceDenoiser den(slice_prior(8, 5, 4));
  SamplerConfig cfg;
  cfg.nfe = 12;
  cfg.mode = Mode::Ve;
  cfg.ve_truncation = 0.0;
  TvConfig tv;
  tv.lambda = 0.1;
  tv.rho = 1.0;
  RngStream r1(5), r2(5);
  Recon3dResult a = dds_3d_reconstruct(p.a, p.y, den, cfg, tv, r1);
  Recon3dResult b = dds_3d_reconstruct(p.a, p.y, den, cfg, tv, r2);
  EXPECT_EQ(a.recon.x0, b.recon.x0);
  EXPECT_EQ(objective_to_csv(a.objective), objective_to_csv(b.objective));
  // Plain CG for t >= 6, ADMM for t = 5..2.
  ASSERT_EQ(a.objective.size(), 4u);
  EXPECT_EQ(a.objective.front().first, 5);
  EXPECT_EQ(a.objective.back().first, 2);
}
