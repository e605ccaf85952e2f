#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dds {

using cplx = std::complex<double>;
using Shape = std::vector<std::size_t>;

enum class DType : std::uint8_t { Real64 = 0, Complex128 = 1 };

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major n-dimensional array of real64 or complex128 values.
///
/// Storage is always complex; a Real64 tensor keeps every imaginary part at
/// exactly zero. Mixed-dtype arithmetic promotes to Complex128. Every factory
/// and arithmetic operation rejects non-finite results with NumericalError, so
/// a NaN is reported where it first appears rather than at the end of a run.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, DType dtype = DType::Real64);
  static Tensor full(Shape shape, cplx value, DType dtype);
  static Tensor from_real(Shape shape, std::vector<double> values);
  static Tensor from_complex(Shape shape, std::vector<cplx> values);

  DType dtype() const { return dtype_; }
  bool is_complex() const { return dtype_ == DType::Complex128; }
  const Shape& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const cplx> values() const { return data_; }
  /// Raw mutable access for kernels. Callers writing into a Real64 tensor must
  /// keep imaginary parts zero and should call check_finite() when done.
  std::span<cplx> mutable_values() { return data_; }

  cplx operator[](std::size_t i) const { return data_[i]; }
  cplx at(std::initializer_list<std::size_t> index) const;
  void set(std::size_t i, cplx v);

  Tensor zeros_like() const { return zeros(shape_, dtype_); }
  Tensor reshaped(Shape shape) const;
  Tensor as_complex() const;
  /// Real part as a Real64 tensor.
  Tensor real() const;
  /// Elementwise modulus as a Real64 tensor.
  Tensor abs() const;
  Tensor conj() const;

  /// Slice `k` along axis 0, e.g. one axial slice of a (nz, ny, nx) volume.
  Tensor slice(std::size_t k) const;
  void set_slice(std::size_t k, const Tensor& s);
  static Tensor stack(const std::vector<Tensor>& slices);

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);
  Tensor& operator*=(cplx s);
  /// this += a * x
  Tensor& axpy(cplx a, const Tensor& x);

  Tensor hadamard(const Tensor& other) const;

  void check_finite(const char* where = "tensor") const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Tensor(Shape shape, DType dtype, std::vector<cplx> data);
  void require_same_shape(const Tensor& other, const char* op) const;

  Shape shape_;
  DType dtype_ = DType::Real64;
  std::vector<cplx> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double s, Tensor a);
Tensor operator*(cplx s, Tensor a);

/// <a, b> = sum conj(a_i) b_i. For Real64 inputs this is the Euclidean dot.
cplx inner(const Tensor& a, const Tensor& b);
double norm(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace dds
