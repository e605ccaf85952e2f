#include "dds/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dds/error.hpp"

namespace dds {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ConfigError("tensor shape must have at least one axis");
  for (auto e : shape)
    if (e == 0) throw ConfigError("tensor extents must be positive, got " + shape_to_string(shape));
}

DType promote(DType a, DType b) {
  return (a == DType::Complex128 || b == DType::Complex128) ? DType::Complex128 : DType::Real64;
}

}  // namespace

Tensor::Tensor(Shape shape, DType dtype, std::vector<cplx> data)
    : shape_(std::move(shape)), dtype_(dtype), data_(std::move(data)) {
  validate_shape(shape_);
  if (shape_size(shape_) != data_.size())
    throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                      " does not match shape " + shape_to_string(shape_));
  if (dtype_ == DType::Real64)
    for (auto v : data_)
      if (v.imag() != 0.0) throw ConfigError("real64 tensor with nonzero imaginary part");
  check_finite("construction");
}

Tensor Tensor::zeros(Shape shape, DType dtype) {
  validate_shape(shape);
  auto n = shape_size(shape);
  return Tensor(std::move(shape), dtype, std::vector<cplx>(n));
}

Tensor Tensor::full(Shape shape, cplx value, DType dtype) {
  validate_shape(shape);
  auto n = shape_size(shape);
  return Tensor(std::move(shape), dtype, std::vector<cplx>(n, value));
}

Tensor Tensor::from_real(Shape shape, std::vector<double> values) {
  std::vector<cplx> data(values.begin(), values.end());
  return Tensor(std::move(shape), DType::Real64, std::move(data));
}

Tensor Tensor::from_complex(Shape shape, std::vector<cplx> values) {
  return Tensor(std::move(shape), DType::Complex128, std::move(values));
}

cplx Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) throw ConfigError("index rank mismatch");
  std::size_t flat = 0, k = 0;
  for (auto i : index) {
    if (i >= shape_[k]) throw ConfigError("index out of range");
    flat = flat * shape_[k] + i;
    ++k;
  }
  return data_[flat];
}

void Tensor::set(std::size_t i, cplx v) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw NumericalError("non-finite value written to tensor");
  if (dtype_ == DType::Real64 && v.imag() != 0.0)
    throw ConfigError("complex value written to real64 tensor");
  data_.at(i) = v;
}

Tensor Tensor::reshaped(Shape shape) const {
  validate_shape(shape);
  if (shape_size(shape) != size())
    throw ConfigError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

Tensor Tensor::as_complex() const {
  Tensor t = *this;
  t.dtype_ = DType::Complex128;
  return t;
}

Tensor Tensor::real() const {
  Tensor t = *this;
  t.dtype_ = DType::Real64;
  for (auto& v : t.data_) v = v.real();
  return t;
}

Tensor Tensor::abs() const {
  Tensor t = *this;
  t.dtype_ = DType::Real64;
  for (auto& v : t.data_) v = std::abs(v);
  return t;
}

Tensor Tensor::conj() const {
  Tensor t = *this;
  for (auto& v : t.data_) v = std::conj(v);
  return t;
}

Tensor Tensor::slice(std::size_t k) const {
  if (shape_.size() < 2) throw ConfigError("slice needs a tensor of rank >= 2");
  if (k >= shape_[0]) throw ConfigError("slice index out of range");
  Shape sub(shape_.begin() + 1, shape_.end());
  auto n = shape_size(sub);
  std::vector<cplx> data(data_.begin() + static_cast<std::ptrdiff_t>(k * n),
                         data_.begin() + static_cast<std::ptrdiff_t>((k + 1) * n));
  return Tensor(std::move(sub), dtype_, std::move(data));
}

void Tensor::set_slice(std::size_t k, const Tensor& s) {
  if (shape_.size() < 2 || k >= shape_[0]) throw ConfigError("set_slice index out of range");
  Shape sub(shape_.begin() + 1, shape_.end());
  if (s.shape() != sub)
    throw ConfigError("set_slice shape mismatch: " + shape_to_string(s.shape()) + " vs " +
                      shape_to_string(sub));
  if (s.is_complex() && !is_complex()) throw ConfigError("set_slice would drop imaginary parts");
  std::copy(s.data_.begin(), s.data_.end(), data_.begin() + static_cast<std::ptrdiff_t>(k * s.size()));
}

Tensor Tensor::stack(const std::vector<Tensor>& slices) {
  if (slices.empty()) throw ConfigError("stack of zero tensors");
  Shape shape{slices.size()};
  shape.insert(shape.end(), slices[0].shape().begin(), slices[0].shape().end());
  DType dt = DType::Real64;
  for (const auto& s : slices) {
    if (s.shape() != slices[0].shape()) throw ConfigError("stack shape mismatch");
    dt = promote(dt, s.dtype());
  }
  Tensor out = zeros(shape, dt);
  for (std::size_t k = 0; k < slices.size(); ++k) out.set_slice(k, slices[k]);
  return out;
}

void Tensor::require_same_shape(const Tensor& other, const char* op) const {
  if (shape_ != other.shape_)
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_to_string(shape_) + " vs " +
                      shape_to_string(other.shape_));
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(other, "add");
  dtype_ = promote(dtype_, other.dtype_);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  check_finite("add");
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(other, "sub");
  dtype_ = promote(dtype_, other.dtype_);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  check_finite("sub");
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (auto& v : data_) v *= s;
  check_finite("scale");
  return *this;
}

Tensor& Tensor::operator*=(cplx s) {
  if (s.imag() != 0.0) dtype_ = DType::Complex128;
  for (auto& v : data_) v *= s;
  check_finite("scale");
  return *this;
}

Tensor& Tensor::axpy(cplx a, const Tensor& x) {
  require_same_shape(x, "axpy");
  dtype_ = promote(dtype_, x.dtype_);
  if (a.imag() != 0.0) dtype_ = DType::Complex128;
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
  check_finite("axpy");
  return *this;
}

Tensor Tensor::hadamard(const Tensor& other) const {
  require_same_shape(other, "hadamard");
  Tensor t = *this;
  t.dtype_ = promote(dtype_, other.dtype_);
  for (std::size_t i = 0; i < data_.size(); ++i) t.data_[i] *= other.data_[i];
  t.check_finite("hadamard");
  return t;
}

void Tensor::check_finite(const char* where) const {
  for (auto v : data_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalError(std::string("non-finite value after ") + where);
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double s, Tensor a) { return a *= s; }
Tensor operator*(cplx s, Tensor a) { return a *= s; }

cplx inner(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ConfigError("inner: shape mismatch " + shape_to_string(a.shape()) + " vs " +
                      shape_to_string(b.shape()));
  cplx s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += std::conj(av[i]) * bv[i];
  return s;
}

double norm(const Tensor& a) {
  double s = 0.0;
  for (auto v : a.values()) s += std::norm(v);
  return std::sqrt(s);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ConfigError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace dds
