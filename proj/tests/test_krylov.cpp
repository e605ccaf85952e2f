#include <gtest/gtest.h>

#include <cmath>

#include "dds/error.hpp"
#include "dds/krylov.hpp"
#include "dds/operators.hpp"
#include "oracle.hpp"

using namespace dds;

TEST(Cg, IdentityOneStep) {
  RngStream rng(1);
  Tensor b = randn(rng, {7}, DType::Complex128);
  CgResult r = cg(identity_map({7}, DType::Complex128), b, b.zeros_like(), 1);
  EXPECT_EQ(r.x, b);
  EXPECT_EQ(r.report.iterations, 1);
}

TEST(Cg, TwoByTwoWorkedExample) {
  oracle::Mat a(2, 2);
  a << 4, 1, 1, 3;
  Tensor rhs = Tensor::from_real({2}, {1, 2});
  CgResult r = cg(oracle::real_dense_map(a), rhs, Tensor::zeros({2}), 2);
  EXPECT_NEAR(r.x[0].real(), 1.0 / 11, 1e-12);
  EXPECT_NEAR(r.x[1].real(), 7.0 / 11, 1e-12);
  EXPECT_FALSE(r.x.is_complex());
}

TEST(Cg, ExactStartIsFixedPoint) {
  oracle::Mat a(2, 2);
  a << 2, 0, 0, 4;
  Tensor x = Tensor::from_real({2}, {1, 1});
  Tensor rhs = Tensor::from_real({2}, {2, 4});
  CgResult r = cg(oracle::real_dense_map(a), rhs, x, 5);
  EXPECT_EQ(r.report.iterations, 0);
  EXPECT_EQ(r.x, x);
}

TEST(Cg, ZeroIterationsReturnsStart) {
  RngStream rng(2);
  Tensor x0 = randn(rng, {3});
  CgResult r = cg(oracle::real_dense_map(oracle::random_spd(rng, 3)), randn(rng, {3}), x0, 0);
  EXPECT_EQ(r.x, x0);
}

TEST(Cg, FiniteTerminationMatchesDenseSolve) {
  RngStream rng(3);
  for (int n : {4, 9, 16, 32}) {
    oracle::Mat a = oracle::random_spd(rng, n);
    Tensor b = randn(rng, {std::size_t(n)});
    CgResult r = cg(oracle::real_dense_map(a), b, b.zeros_like(), n);
    oracle::Vec want = a.ldlt().solve(oracle::to_vec(b));
    EXPECT_LE((oracle::to_vec(r.x) - want).norm(), 1e-8 * want.norm());
  }
}

TEST(Cg, ComplexHermitianSystem) {
  RngStream rng(4);
  oracle::Mat g = oracle::Mat::Random(12, 12);
  oracle::Mat a = g.adjoint() * g + oracle::Mat::Identity(12, 12);
  Tensor b = randn(rng, {12}, DType::Complex128);
  CgResult r = cg(oracle::complex_dense_map(a), b, b.zeros_like(), 40, 1e-13);
  oracle::Vec want = a.ldlt().solve(oracle::to_vec(b));
  EXPECT_LE((oracle::to_vec(r.x) - want).norm(), 1e-9 * want.norm());
}

TEST(Cg, ResidualsMutuallyOrthogonal) {
  RngStream rng(5);
  oracle::Mat a = oracle::random_spd(rng, 16, 1.0, 4.0);
  LinearMap op = oracle::real_dense_map(a);
  Tensor b = randn(rng, {16});
  std::vector<Tensor> rs;
  for (int m = 0; m <= 8; ++m) rs.push_back(b - op.apply(cg(op, b, b.zeros_like(), m).x));
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      EXPECT_LE(std::abs(inner(rs[i], rs[j])), 1e-8 * norm(rs[i]) * norm(rs[j]));
}

TEST(Cg, IndefiniteOperatorRejected) {
  oracle::Mat a(2, 2);
  a << -1, 0, 0, -2;
  EXPECT_THROW(cg(oracle::real_dense_map(a), Tensor::from_real({2}, {1, 1}), Tensor::zeros({2}), 2),
               NumericalError);
}

TEST(Cg, SingularOperatorBreaksDownGracefully) {
  oracle::Mat a = oracle::Mat::Zero(2, 2);
  CgResult r = cg(oracle::real_dense_map(a), Tensor::from_real({2}, {1, 0}), Tensor::zeros({2}), 3);
  EXPECT_TRUE(r.report.breakdown);
  EXPECT_EQ(r.report.iterations, 0);
}

TEST(Cg, ReportCsv) {
  oracle::Mat a(2, 2);
  a << 4, 1, 1, 3;
  CgResult r = cg(oracle::real_dense_map(a), Tensor::from_real({2}, {1, 2}), Tensor::zeros({2}), 2);
  std::string csv = r.report.to_csv();
  EXPECT_EQ(csv.rfind("iteration,residual_norm\n0,", 0), 0u);
  EXPECT_EQ(r.report.residual_norms.size(), 3u);
}

TEST(Normal, UnitaryGivesIdentityAndZeroRhs) {
  LinearMap a = sense_operator(Tensor::full({1, 8, 8}, 1.0, DType::Complex128),
                               Tensor::full({8, 8}, 1.0, DType::Real64));
  RngStream rng(6);
  NormalSystem sys = build_normal(a, Tensor::zeros({1, 8, 8}, DType::Complex128));
  EXPECT_EQ(norm(sys.rhs), 0.0);
  Tensor x = randn(rng, {8, 8}, DType::Complex128);
  EXPECT_LE(max_abs_diff(sys.op.apply(x), x), 1e-12);
}

TEST(Normal, DenseAssemblyIsAhA) {
  oracle::Mat a = oracle::Mat::Random(8, 8);
  NormalSystem sys = build_normal(oracle::complex_dense_map(a), Tensor::zeros({8}, DType::Complex128));
  EXPECT_LE((oracle::to_mat(to_dense(sys.op)) - a.adjoint() * a).cwiseAbs().maxCoeff(), 1e-12);
  RngStream rng(7);
  EXPECT_LE(self_adjoint_error(sys.op, rng), 1e-10);
}

TEST(Proximal, IdentityClosedForm) {
  RngStream rng(8);
  Tensor b = randn(rng, {5});
  NormalSystem sys = build_proximal_normal(identity_map({5}, DType::Real64), b, b.zeros_like(), 1.0);
  CgResult r = sys.solve(b.zeros_like(), 5);
  EXPECT_LE(max_abs_diff(r.x, 0.5 * b), 1e-12);
}

TEST(Proximal, SmallGammaAnchorsToXhat) {
  RngStream rng(9);
  oracle::Mat a = oracle::Mat::Random(4, 6);
  Tensor xh = randn(rng, {6}, DType::Complex128);
  Tensor y = randn(rng, {4}, DType::Complex128);
  NormalSystem sys = build_proximal_normal(oracle::complex_dense_map(a), y, xh, 1e-9);
  EXPECT_LE(max_abs_diff(sys.solve(xh.zeros_like(), 6).x, xh), 1e-7);
}

TEST(Proximal, DenseSolveAndOptimality) {
  RngStream rng(10);
  oracle::Mat a = oracle::Mat::Random(6, 6);
  const double gamma = 0.95;
  Tensor xh = randn(rng, {6}, DType::Complex128);
  Tensor y = randn(rng, {6}, DType::Complex128);
  NormalSystem sys = build_proximal_normal(oracle::complex_dense_map(a), y, xh, gamma);
  CgResult r = sys.solve(xh, 6);
  oracle::Mat lhs = oracle::Mat::Identity(6, 6) + gamma * a.adjoint() * a;
  oracle::Vec want = lhs.ldlt().solve(oracle::to_vec(xh) + gamma * a.adjoint() * oracle::to_vec(y));
  EXPECT_LE((oracle::to_vec(r.x) - want).cwiseAbs().maxCoeff(), 1e-10);
  // Gradient of 0.5||x - xh||^2 + 0.5 gamma ||y - A x||^2 at the solution.
  oracle::Vec x = oracle::to_vec(r.x);
  oracle::Vec grad = (x - oracle::to_vec(xh)) + gamma * a.adjoint() * (a * x - oracle::to_vec(y));
  double an = a.operatorNorm();
  EXPECT_LE(grad.norm(), 1e-8 * (1 + gamma * an * an) * norm(xh));
  EXPECT_THROW(build_proximal_normal(oracle::complex_dense_map(a), y, xh, 0.0), ConfigError);
}

TEST(KrylovBasis, SingleVector) {
  Tensor b = Tensor::from_real({3}, {3, 0, 4});
  KrylovBasis k = krylov_basis(identity_map({3}, DType::Real64), b, 1);
  ASSERT_EQ(k.dim(), 1u);
  EXPECT_LE(max_abs_diff(k.q[0], Tensor::from_real({3}, {0.6, 0, 0.8})), 1e-15);
}

TEST(KrylovBasis, IdentityBreaksDown) {
  Tensor b = Tensor::from_real({3}, {1, 2, 3});
  EXPECT_EQ(krylov_basis(identity_map({3}, DType::Real64), b, 3).dim(), 1u);
}

TEST(KrylovBasis, DiagonalFullRank) {
  oracle::Mat d = oracle::Mat::Zero(3, 3);
  d.diagonal() << 1, 2, 3;
  KrylovBasis k = krylov_basis(oracle::real_dense_map(d), Tensor::from_real({3}, {1, 1, 1}), 3);
  EXPECT_EQ(k.dim(), 3u);
  EXPECT_LE(k.gram_error(), 1e-10);
}

TEST(KrylovBasis, ZeroVectorRejected) {
  EXPECT_THROW(krylov_basis(identity_map({3}, DType::Real64), Tensor::zeros({3}), 2), ConfigError);
}

TEST(KrylovBasis, SpansPowerSequence) {
  RngStream rng(11);
  oracle::Mat a = oracle::random_spd(rng, 10);
  LinearMap op = oracle::real_dense_map(a);
  Tensor b = randn(rng, {10});
  KrylovBasis k = krylov_basis(op, b, 4);
  Tensor v = b;
  for (int j = 0; j < 4; ++j) {
    EXPECT_LE(subspace_distance(v, v.zeros_like(), k), 1e-10 * norm(v));
    v = op.apply(v);
  }
  EXPECT_GT(subspace_distance(v, v.zeros_like(), k), 1e-6 * norm(v));
}

TEST(SubspaceDistance, BasicCases) {
  Tensor q1 = Tensor::from_real({3}, {1, 0, 0});
  KrylovBasis k{{q1}};
  Tensor base = Tensor::from_real({3}, {5, 6, 7});
  EXPECT_EQ(subspace_distance(base, base, k), 0.0);
  EXPECT_LE(subspace_distance(base + q1, base, k), 1e-12);
  Tensor orth = Tensor::from_real({3}, {0, 3, 4});
  EXPECT_NEAR(subspace_distance(base + orth, base, k), 5.0, 1e-12);
}

TEST(Confinement, CgIterateLiesInShiftedKrylovSpace) {
  RngStream rng(12);
  for (int m : {1, 3, 5}) {
    oracle::Mat a = oracle::random_spd(rng, 20);
    LinearMap op = oracle::real_dense_map(a);
    Tensor xh = randn(rng, {20}), rhs = randn(rng, {20});
    Tensor x = cg(op, rhs, xh, m).x;
    KrylovBasis k = krylov_basis(op, rhs - op.apply(xh), m);
    EXPECT_LE(subspace_distance(x, xh, k), 1e-8 * norm(x - xh));
  }
}

TEST(Jacobi, IdentityConvergesInOneStep) {
  Tensor y = Tensor::from_real({3}, {1, 2, 3});
  auto seq = jacobi_residual_sequence(identity_map({3}, DType::Real64), y, Tensor::zeros({3}), 2);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(norm(seq[1]), 0.0);
}

TEST(Jacobi, ExactStartGivesZeroResiduals) {
  oracle::Mat a(2, 2);
  a << 0.5, 0.1, 0.1, 0.4;
  Tensor x = Tensor::from_real({2}, {1, -1});
  LinearMap op = oracle::real_dense_map(a);
  for (const auto& b : jacobi_residual_sequence(op, op.apply(x), x, 4)) EXPECT_EQ(norm(b), 0.0);
}

TEST(Jacobi, MatchesDenseIterationAndKrylovMembership) {
  oracle::Mat a(3, 3);
  a << 0.6, 0.1, 0.0, 0.1, 0.5, 0.1, 0.0, 0.1, 0.7;
  LinearMap op = oracle::real_dense_map(a);
  Tensor y = Tensor::from_real({3}, {1, -2, 0.5});
  auto seq = jacobi_residual_sequence(op, y, Tensor::zeros({3}), 6);
  oracle::Mat step = oracle::Mat::Identity(3, 3) - a;
  oracle::Vec b = oracle::to_vec(y);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    EXPECT_LE((oracle::to_vec(seq[k]) - b).cwiseAbs().maxCoeff(), 1e-12);
    if (k > 0) EXPECT_LT(norm(seq[k]), norm(seq[k - 1]));
    KrylovBasis kb = krylov_basis(op, seq[0], static_cast<int>(k) + 1);
    EXPECT_LE(subspace_distance(seq[k], seq[k].zeros_like(), kb), 1e-8 * std::max(norm(seq[k]), 1e-300));
    b = step * b;
  }
}
