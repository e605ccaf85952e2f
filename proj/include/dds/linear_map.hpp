#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dds/rng.hpp"
#include "dds/tensor.hpp"

namespace dds {

/// Linear operator with an explicit adjoint and shape contract.
///
/// apply()/adjoint() validate shapes; a Real64 input to a complex map is
/// promoted, a complex input to a real map is rejected. The optional
/// pseudo-inverse is set only where a closed form exists (single-coil
/// Cartesian sampling, unitary maps).
struct LinearMap {
  using Fn = std::function<Tensor(const Tensor&)>;

  std::string name;
  Shape domain;
  Shape range;
  DType domain_dtype = DType::Complex128;
  DType range_dtype = DType::Complex128;
  Fn forward;
  Fn backward;
  Fn pinv;

  Tensor apply(const Tensor& x) const;
  Tensor adjoint(const Tensor& y) const;
  Tensor pseudo_inverse(const Tensor& y) const;
  bool has_pseudo_inverse() const { return static_cast<bool>(pinv); }

  LinearMap adjoint_map() const;
};

LinearMap identity_map(const Shape& shape, DType dtype);
/// outer(inner(x))
LinearMap compose(const LinearMap& outer, const LinearMap& inner);
/// x -> A*(A x)
LinearMap normal_map(const LinearMap& a);
/// x -> a*P(x) + b*Q(x); P and Q share domain and range.
LinearMap linear_combination(double a, const LinearMap& p, double b, const LinearMap& q);
LinearMap scaled(double a, const LinearMap& p);
/// Applies a 2-D map independently to each slice along axis 0 of a volume.
LinearMap slicewise(const LinearMap& a, std::size_t nz);

/// Row-major dense matrix with rows = range size, cols = domain size.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<cplx> data;
  cplx operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  cplx& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
};

/// Assembles A column by column from unit probes. Intended for small maps.
DenseMatrix to_dense(const LinearMap& a);
LinearMap dense_map(DenseMatrix m, Shape domain, Shape range, DType dtype);

struct DotTestResult {
  double worst_relative = 0.0;
  int pairs = 0;
};

/// Randomized check of <A x, y> = <x, A* y>. Each pair's discrepancy is
/// divided by max(||x|| ||A*y||, ||Ax|| ||y||).
DotTestResult dot_test(const LinearMap& a, RngStream& rng, int pairs = 20);

}  // namespace dds
