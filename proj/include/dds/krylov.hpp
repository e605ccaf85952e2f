#pragma once

#include <string>
#include <vector>

#include "dds/linear_map.hpp"
#include "dds/rng.hpp"
#include "dds/tensor.hpp"

namespace dds {

struct CgReport {
  int iterations = 0;
  /// ||r_k|| for k = 0..iterations, from the recursively updated residual.
  std::vector<double> residual_norms;
  bool non_monotone = false;
  /// Stopped because p^H A p vanished relative to ||p|| ||Ap||.
  bool breakdown = false;

  std::string to_csv() const;
};

struct CgResult {
  Tensor x;
  CgReport report;
};

/// Conjugate gradient for a self-adjoint PSD operator, started at x0.
///
/// Runs at most max_iters steps of the textbook recursion
///   alpha = <r,r> / Re<p,Ap>,  beta = <r+,r+> / <r,r>,
/// stopping early once ||r|| <= tol or r vanishes. tol = 0 gives the fixed-M
/// usage. Complex tensors use the real part of the Hermitian inner product.
/// Throws NumericalError if Re<p,Ap> < -1e-12 ||p|| ||Ap||.
CgResult cg(const LinearMap& op, const Tensor& rhs, const Tensor& x0, int max_iters, double tol = 0.0);

struct NormalSystem {
  LinearMap op;
  Tensor rhs;

  CgResult solve(const Tensor& x0, int max_iters, double tol = 0.0) const {
    return cg(op, rhs, x0, max_iters, tol);
  }
};

/// (A*A, A*y)
NormalSystem build_normal(const LinearMap& a, const Tensor& y);
/// (I + gamma A*A, x_hat + gamma A*y); requires gamma > 0.
NormalSystem build_proximal_normal(const LinearMap& a, const Tensor& y, const Tensor& x_hat, double gamma);

/// Largest |<Ax,z> - conj(<Az,x>)| / (||x|| ||Az||) over random probes.
double self_adjoint_error(const LinearMap& op, RngStream& rng, int probes = 5);

/// Orthonormal basis of a Krylov subspace.
struct KrylovBasis {
  std::vector<Tensor> q;

  std::size_t dim() const { return q.size(); }
  /// Q Q^H v
  Tensor project(const Tensor& v) const;
  /// max_ij |<q_i, q_j> - delta_ij|
  double gram_error() const;
};

/// Basis of span{b, Ab, ..., A^{l-1} b} by Arnoldi with two-pass modified
/// Gram-Schmidt. Stops early when the orthogonalized vector falls below
/// 1e-12 of its norm before orthogonalization (invariant subspace reached).
KrylovBasis krylov_basis(const LinearMap& op, const Tensor& b, int l);

/// ||(v - base) - Q Q^H (v - base)||
double subspace_distance(const Tensor& v, const Tensor& base, const KrylovBasis& basis);

/// Residuals b_0 = y - A x0, b_{k+1} = (I - A) b_k for k < n; returns n + 1 tensors.
std::vector<Tensor> jacobi_residual_sequence(const LinearMap& a, const Tensor& y, const Tensor& x0, int n);

}  // namespace dds
