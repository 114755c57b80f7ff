#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace palmline {

/// Planar RGB image, values in [0, 255] stored as floats, layout [channel][row][col].
struct ImageRgb {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  ImageRgb() = default;
  ImageRgb(std::size_t w, std::size_t h) : width(w), height(h), pixels(3 * w * h, 0.0f) {}

  bool empty() const noexcept { return width == 0 || height == 0; }
  std::size_t plane() const noexcept { return width * height; }

  float& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return pixels[(c * height + y) * width + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return pixels[(c * height + y) * width + x];
  }

  friend bool operator==(const ImageRgb&, const ImageRgb&) = default;
};

/// One byte per pixel, nonzero means hand.
struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(std::size_t w, std::size_t h) : width(w), height(h), bits(w * h, 0) {}

  bool empty() const noexcept { return width == 0 || height == 0; }
  bool at(std::size_t y, std::size_t x) const noexcept { return bits[y * width + x] != 0; }
  void set(std::size_t y, std::size_t x, bool v) noexcept { bits[y * width + x] = v ? 1 : 0; }
  std::size_t count() const noexcept;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Bilinear resampling with half-pixel centres; resizing to the same size is exact identity.
ImageRgb resize_bilinear(const ImageRgb& image, std::size_t width, std::size_t height);

/// Nearest-neighbour resampling with half-pixel centres.
BinaryMask resize_nearest(const BinaryMask& mask, std::size_t width, std::size_t height);

/// Intersection over union; 1.0 when both masks are empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace palmline
