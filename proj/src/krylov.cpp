#include "dds/krylov.hpp"

#include <cmath>
#include <sstream>

#include "dds/error.hpp"

namespace dds {

std::string CgReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,residual_norm\n";
  for (std::size_t k = 0; k < residual_norms.size(); ++k) os << k << ',' << residual_norms[k] << '\n';
  return os.str();
}

CgResult cg(const LinearMap& op, const Tensor& rhs, const Tensor& x0, int max_iters, double tol) {
  if (max_iters < 0) throw ConfigError("cg: iteration cap must be >= 0");
  if (tol < 0) throw ConfigError("cg: tolerance must be >= 0");
  if (op.domain != op.range) throw ConfigError("cg: operator must be square");
  CgResult res;
  Tensor x = x0;
  if (op.domain_dtype == DType::Complex128 && !x.is_complex()) x = x.as_complex();
  Tensor r = rhs - op.apply(x);
  double rr = inner(r, r).real();
  res.report.residual_norms.push_back(std::sqrt(rr));
  if (rr == 0.0 || std::sqrt(rr) <= tol || max_iters == 0) {
    res.x = std::move(x);
    return res;
  }
  Tensor p = r;
  for (int k = 0; k < max_iters; ++k) {
    Tensor ap = op.apply(p);
    const double pap = inner(p, ap).real();
    const double scale = norm(p) * norm(ap);
    if (pap < -1e-12 * scale) throw NumericalError("cg: operator is not positive semidefinite");
    if (pap <= 1e-12 * scale) {
      res.report.breakdown = true;
      break;
    }
    const double alpha = rr / pap;
    x.axpy(alpha, p);
    r.axpy(-alpha, ap);
    const double rr_new = inner(r, r).real();
    res.report.iterations = k + 1;
    res.report.residual_norms.push_back(std::sqrt(rr_new));
    if (std::sqrt(rr_new) > res.report.residual_norms[res.report.residual_norms.size() - 2] + 1e-9)
      res.report.non_monotone = true;
    if (rr_new == 0.0 || std::sqrt(rr_new) <= tol) break;
    const double beta = rr_new / rr;
    p *= beta;
    p += r;
    rr = rr_new;
  }
  res.x = std::move(x);
  return res;
}

NormalSystem build_normal(const LinearMap& a, const Tensor& y) {
  return {normal_map(a), a.adjoint(y)};
}

NormalSystem build_proximal_normal(const LinearMap& a, const Tensor& y, const Tensor& x_hat, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("proximal weight gamma must be > 0");
  LinearMap op = linear_combination(1.0, identity_map(a.domain, a.domain_dtype), gamma, normal_map(a));
  Tensor rhs = x_hat;
  rhs.axpy(gamma, a.adjoint(y));
  return {op, rhs};
}

double self_adjoint_error(const LinearMap& op, RngStream& rng, int probes) {
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    Tensor x = randn(rng, op.domain, op.domain_dtype);
    Tensor z = randn(rng, op.domain, op.domain_dtype);
    Tensor ax = op.apply(x), az = op.apply(z);
    const double scale = std::max(norm(ax) * norm(z), norm(az) * norm(x));
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(inner(ax, z) - std::conj(inner(az, x))) / scale);
  }
  return worst;
}

namespace {

// One modified Gram-Schmidt sweep of v against q.
void mgs_pass(const std::vector<Tensor>& q, Tensor& v) {
  for (const auto& qi : q) v.axpy(-inner(qi, v), qi);
}

}  // namespace

Tensor KrylovBasis::project(const Tensor& v) const {
  Tensor out = v.zeros_like();
  for (const auto& qi : q) out.axpy(inner(qi, v), qi);
  return out;
}

double KrylovBasis::gram_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j)
      worst = std::max(worst, std::abs(inner(q[i], q[j]) - (i == j ? 1.0 : 0.0)));
  return worst;
}

KrylovBasis krylov_basis(const LinearMap& op, const Tensor& b, int l) {
  if (l < 1) throw ConfigError("krylov_basis: l must be >= 1");
  const double nb = norm(b);
  if (nb == 0.0) throw ConfigError("krylov_basis: b must be nonzero");
  KrylovBasis basis;
  basis.q.push_back((1.0 / nb) * b);
  while (static_cast<int>(basis.q.size()) < l) {
    Tensor v = op.apply(basis.q.back());
    const double before = norm(v);
    mgs_pass(basis.q, v);
    mgs_pass(basis.q, v);
    const double after = norm(v);
    if (before == 0.0 || after < 1e-12 * before) break;
    basis.q.push_back((1.0 / after) * v);
  }
  return basis;
}

double subspace_distance(const Tensor& v, const Tensor& base, const KrylovBasis& basis) {
  Tensor d = v - base;
  mgs_pass(basis.q, d);
  mgs_pass(basis.q, d);
  return norm(d);
}

std::vector<Tensor> jacobi_residual_sequence(const LinearMap& a, const Tensor& y, const Tensor& x0, int n) {
  if (n < 1) throw ConfigError("jacobi_residual_sequence: n must be >= 1");
  std::vector<Tensor> out;
  out.push_back(y - a.apply(x0));
  for (int k = 0; k < n; ++k) out.push_back(out.back() - a.apply(out.back()));
  return out;
}

}  // namespace dds
