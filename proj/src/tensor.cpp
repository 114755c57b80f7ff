#include "palmline/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "palmline/error.hpp"

namespace palmline {

std::size_t shape_size(const Shape& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

std::string shape_to_string(const Shape& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

void validate_shape(const Shape& dims) {
  if (dims.empty() || dims.size() > 4)
    fail(ErrorCode::InvalidShape, "rank must be 1..4, got " + std::to_string(dims.size()));
  if (std::find(dims.begin(), dims.end(), 0u) != dims.end())
    fail(ErrorCode::InvalidShape, "zero dimension in " + shape_to_string(dims));
}

Tensor::Tensor(Shape dims) : dims_(std::move(dims)) {
  validate_shape(dims_);
  data_.assign(shape_size(dims_), 0.0f);
}

Tensor::Tensor(Shape dims, std::vector<float> data) : dims_(std::move(dims)), data_(std::move(data)) {
  validate_shape(dims_);
  if (data_.size() != shape_size(dims_))
    fail(ErrorCode::InvalidShape, "data length " + std::to_string(data_.size()) + " does not match " +
                                      shape_to_string(dims_));
}

Tensor Tensor::filled(Shape dims, float value) {
  Tensor t(std::move(dims));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::reshaped(Shape dims) const& { return Tensor(std::move(dims), data_); }

Tensor Tensor::reshaped(Shape dims) && { return Tensor(std::move(dims), std::move(data_)); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

bool operator==(const Tensor& a, const Tensor& b) noexcept {
  return a.dims_ == b.dims_ &&
         std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

}  // namespace palmline
