#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stfnet {

using Shape = std::vector<std::size_t>;
using cdouble = std::complex<double>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of 64-bit reals.
class RealTensor {
 public:
  RealTensor() = default;
  explicit RealTensor(Shape shape);
  RealTensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D convenience for (T, D) signals.
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  RealTensor reshaped(Shape shape) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Dense row-major array of complex values kept as separate real and
/// imaginary planes.
class ComplexTensor {
 public:
  ComplexTensor() = default;
  explicit ComplexTensor(Shape shape);
  ComplexTensor(Shape shape, std::vector<double> re, std::vector<double> im);
  ComplexTensor(Shape shape, std::span<const cdouble> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return re_.size(); }

  std::span<double> re() noexcept { return re_; }
  std::span<const double> re() const noexcept { return re_; }
  std::span<double> im() noexcept { return im_; }
  std::span<const double> im() const noexcept { return im_; }

  cdouble get(std::size_t i) const { return {re_[i], im_[i]}; }
  void set(std::size_t i, cdouble v) {
    re_[i] = v.real();
    im_[i] = v.imag();
  }
  void add(std::size_t i, cdouble v) {
    re_[i] += v.real();
    im_[i] += v.imag();
  }

  // 3-D convenience for (M, K, D) spectral tensors.
  std::size_t index(std::size_t m, std::size_t k, std::size_t d) const {
    return (m * shape_[1] + k) * shape_[2] + d;
  }

  ComplexTensor reshaped(Shape shape) const;
  std::vector<cdouble> to_complex() const;

 private:
  Shape shape_;
  std::vector<double> re_;
  std::vector<double> im_;
};

}  // namespace stfnet
