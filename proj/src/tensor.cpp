#include "stfnet/tensor.hpp"

#include <functional>
#include <numeric>
#include <sstream>

#include "stfnet/error.hpp"

namespace stfnet {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

namespace {

void check_shape(const Shape& shape) {
  for (auto n : shape)
    if (n == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
}

}  // namespace

RealTensor::RealTensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_size(shape_), 0.0);
}

RealTensor::RealTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_size(shape_))
    throw ShapeError("real tensor of shape " + shape_string(shape_) + " needs " +
                     std::to_string(shape_size(shape_)) + " values, got " +
                     std::to_string(data_.size()));
}

RealTensor RealTensor::reshaped(Shape shape) const {
  return RealTensor(std::move(shape), data_);
}

ComplexTensor::ComplexTensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  re_.assign(shape_size(shape_), 0.0);
  im_.assign(re_.size(), 0.0);
}

ComplexTensor::ComplexTensor(Shape shape, std::vector<double> re, std::vector<double> im)
    : shape_(std::move(shape)), re_(std::move(re)), im_(std::move(im)) {
  check_shape(shape_);
  if (re_.size() != shape_size(shape_) || im_.size() != re_.size())
    throw ShapeError("complex tensor of shape " + shape_string(shape_) +
                     " has mismatched plane lengths");
}

ComplexTensor::ComplexTensor(Shape shape, std::span<const cdouble> values)
    : ComplexTensor(std::move(shape)) {
  if (values.size() != re_.size())
    throw ShapeError("complex tensor of shape " + shape_string(shape_) + " needs " +
                     std::to_string(re_.size()) + " values");
  for (std::size_t i = 0; i < values.size(); ++i) set(i, values[i]);
}

ComplexTensor ComplexTensor::reshaped(Shape shape) const {
  return ComplexTensor(std::move(shape), re_, im_);
}

std::vector<cdouble> ComplexTensor::to_complex() const {
  std::vector<cdouble> out(re_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get(i);
  return out;
}

}  // namespace stfnet
