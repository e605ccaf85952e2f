#include "dds/linear_map.hpp"

#include <algorithm>
#include <cmath>

#include "dds/error.hpp"

namespace dds {

namespace {

Tensor conform(const Tensor& x, const Shape& shape, DType dtype, const std::string& name,
               const char* side) {
  if (x.shape() != shape)
    throw ConfigError(name + ": " + side + " expects shape " + shape_to_string(shape) + ", got " +
                      shape_to_string(x.shape()));
  if (dtype == DType::Real64 && x.is_complex())
    throw ConfigError(name + ": " + side + " is real but input is complex");
  if (dtype == DType::Complex128 && !x.is_complex()) return x.as_complex();
  return x;
}

}  // namespace

Tensor LinearMap::apply(const Tensor& x) const {
  Tensor out = forward(conform(x, domain, domain_dtype, name, "apply"));
  if (out.shape() != range) throw ConfigError(name + ": apply produced wrong shape");
  return out;
}

Tensor LinearMap::adjoint(const Tensor& y) const {
  Tensor out = backward(conform(y, range, range_dtype, name, "adjoint"));
  if (out.shape() != domain) throw ConfigError(name + ": adjoint produced wrong shape");
  return out;
}

Tensor LinearMap::pseudo_inverse(const Tensor& y) const {
  if (!pinv) throw ConfigError(name + ": no closed-form pseudo-inverse");
  return pinv(conform(y, range, range_dtype, name, "pseudo-inverse"));
}

LinearMap LinearMap::adjoint_map() const {
  LinearMap m;
  m.name = name + "^*";
  m.domain = range;
  m.range = domain;
  m.domain_dtype = range_dtype;
  m.range_dtype = domain_dtype;
  m.forward = backward;
  m.backward = forward;
  return m;
}

LinearMap identity_map(const Shape& shape, DType dtype) {
  LinearMap m;
  m.name = "identity";
  m.domain = m.range = shape;
  m.domain_dtype = m.range_dtype = dtype;
  m.forward = m.backward = m.pinv = [](const Tensor& x) { return x; };
  return m;
}

LinearMap compose(const LinearMap& outer, const LinearMap& inner) {
  if (outer.domain != inner.range)
    throw ConfigError("compose: " + outer.name + " domain does not match " + inner.name + " range");
  LinearMap m;
  m.name = outer.name + "*" + inner.name;
  m.domain = inner.domain;
  m.range = outer.range;
  m.domain_dtype = inner.domain_dtype;
  m.range_dtype = outer.range_dtype;
  m.forward = [outer, inner](const Tensor& x) { return outer.apply(inner.apply(x)); };
  m.backward = [outer, inner](const Tensor& y) { return inner.adjoint(outer.adjoint(y)); };
  return m;
}

LinearMap normal_map(const LinearMap& a) {
  LinearMap m;
  m.name = a.name + "^*" + a.name;
  m.domain = m.range = a.domain;
  m.domain_dtype = m.range_dtype = a.domain_dtype;
  m.forward = m.backward = [a](const Tensor& x) { return a.adjoint(a.apply(x)); };
  return m;
}

LinearMap linear_combination(double a, const LinearMap& p, double b, const LinearMap& q) {
  if (p.domain != q.domain || p.range != q.range)
    throw ConfigError("linear_combination: shape mismatch between " + p.name + " and " + q.name);
  LinearMap m;
  m.name = "lincomb(" + p.name + "," + q.name + ")";
  m.domain = p.domain;
  m.range = p.range;
  auto promote = [](DType x, DType y) {
    return x == DType::Complex128 || y == DType::Complex128 ? DType::Complex128 : DType::Real64;
  };
  m.domain_dtype = promote(p.domain_dtype, q.domain_dtype);
  m.range_dtype = promote(p.range_dtype, q.range_dtype);
  m.forward = [a, p, b, q](const Tensor& x) {
    Tensor out = p.apply(x);
    out *= a;
    return out.axpy(b, q.apply(x));
  };
  m.backward = [a, p, b, q](const Tensor& y) {
    Tensor out = p.adjoint(y);
    out *= a;
    return out.axpy(b, q.adjoint(y));
  };
  return m;
}

LinearMap scaled(double a, const LinearMap& p) {
  LinearMap m = p;
  m.name = std::to_string(a) + "*" + p.name;
  m.forward = [a, p](const Tensor& x) { return a * p.apply(x); };
  m.backward = [a, p](const Tensor& y) { return a * p.adjoint(y); };
  m.pinv = nullptr;
  return m;
}

LinearMap slicewise(const LinearMap& a, std::size_t nz) {
  if (nz == 0) throw ConfigError("slicewise: zero slices");
  LinearMap m;
  m.name = "slicewise(" + a.name + ")";
  m.domain = {nz};
  m.domain.insert(m.domain.end(), a.domain.begin(), a.domain.end());
  m.range = {nz};
  m.range.insert(m.range.end(), a.range.begin(), a.range.end());
  m.domain_dtype = a.domain_dtype;
  m.range_dtype = a.range_dtype;
  auto per_slice = [nz](const Tensor& v, const LinearMap::Fn& f) {
    std::vector<Tensor> out;
    out.reserve(nz);
    for (std::size_t k = 0; k < nz; ++k) out.push_back(f(v.slice(k)));
    return Tensor::stack(out);
  };
  m.forward = [a, per_slice](const Tensor& x) {
    return per_slice(x, [&a](const Tensor& s) { return a.apply(s); });
  };
  m.backward = [a, per_slice](const Tensor& y) {
    return per_slice(y, [&a](const Tensor& s) { return a.adjoint(s); });
  };
  if (a.pinv)
    m.pinv = [a, per_slice](const Tensor& y) {
      return per_slice(y, [&a](const Tensor& s) { return a.pseudo_inverse(s); });
    };
  return m;
}

DenseMatrix to_dense(const LinearMap& a) {
  DenseMatrix m;
  m.cols = shape_size(a.domain);
  m.rows = shape_size(a.range);
  m.data.assign(m.rows * m.cols, cplx(0.0));
  Tensor probe = Tensor::zeros(a.domain, a.domain_dtype);
  for (std::size_t j = 0; j < m.cols; ++j) {
    probe.set(j, 1.0);
    Tensor col = a.apply(probe);
    for (std::size_t i = 0; i < m.rows; ++i) m(i, j) = col[i];
    probe.set(j, 0.0);
  }
  return m;
}

LinearMap dense_map(DenseMatrix mat, Shape domain, Shape range, DType dtype) {
  if (shape_size(domain) != mat.cols || shape_size(range) != mat.rows)
    throw ConfigError("dense_map: matrix size does not match shapes");
  if (dtype == DType::Real64)
    for (auto v : mat.data)
      if (v.imag() != 0.0) throw ConfigError("dense_map: complex entries in a real map");
  LinearMap m;
  m.name = "dense";
  m.domain = domain;
  m.range = range;
  m.domain_dtype = m.range_dtype = dtype;
  m.forward = [mat, range, dtype](const Tensor& x) {
    Tensor out = Tensor::zeros(range, dtype);
    auto o = out.mutable_values();
    for (std::size_t i = 0; i < mat.rows; ++i) {
      cplx s = 0.0;
      for (std::size_t j = 0; j < mat.cols; ++j) s += mat(i, j) * x[j];
      o[i] = s;
    }
    out.check_finite("dense apply");
    return out;
  };
  m.backward = [mat, domain, dtype](const Tensor& y) {
    Tensor out = Tensor::zeros(domain, dtype);
    auto o = out.mutable_values();
    for (std::size_t i = 0; i < mat.rows; ++i)
      for (std::size_t j = 0; j < mat.cols; ++j) o[j] += std::conj(mat(i, j)) * y[i];
    out.check_finite("dense adjoint");
    return out;
  };
  return m;
}

DotTestResult dot_test(const LinearMap& a, RngStream& rng, int pairs) {
  DotTestResult res;
  for (int k = 0; k < pairs; ++k) {
    Tensor x = randn(rng, a.domain, a.domain_dtype);
    Tensor y = randn(rng, a.range, a.range_dtype);
    Tensor ax = a.apply(x);
    Tensor aty = a.adjoint(y);
    const cplx lhs = inner(ax, y);
    const cplx rhs = inner(x, aty);
    const double scale = std::max({norm(x) * norm(aty), norm(ax) * norm(y), 1e-300});
    res.worst_relative = std::max(res.worst_relative, std::abs(lhs - rhs) / scale);
    ++res.pairs;
  }
  return res;
}

}  // namespace dds
