#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace palmline {

using Shape = std::vector<std::size_t>;

/// Product of all dimensions. Empty shape yields 1.
std::size_t shape_size(const Shape& dims);
std::string shape_to_string(const Shape& dims);

/// Dense row-major float tensor of rank 1..4, last dimension fastest.
/// Image and activation tensors use [channels, height, width].
class Tensor {
 public:
  /// Zero-filled tensor. Throws InvalidShape on rank outside 1..4 or a zero dim.
  explicit Tensor(Shape dims);
  Tensor(Shape dims, std::vector<float> data);

  static Tensor filled(Shape dims, float value);

  const Shape& dims() const noexcept { return dims_; }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }
  const float* data() const noexcept { return data_.data(); }
  float* data() noexcept { return data_.data(); }

  float operator[](std::size_t i) const noexcept { return data_[i]; }
  float& operator[](std::size_t i) noexcept { return data_[i]; }

  /// Element of a rank-3 tensor.
  float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * dims_[1] + y) * dims_[2] + x];
  }

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape dims) const&;
  Tensor reshaped(Shape dims) &&;

  bool all_finite() const noexcept;

  /// Bitwise equality of shape and payload.
  friend bool operator==(const Tensor& a, const Tensor& b) noexcept;

 private:
  Shape dims_;
  std::vector<float> data_;
};

void validate_shape(const Shape& dims);

}  // namespace palmline
