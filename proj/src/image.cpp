#include "palmline/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "palmline/error.hpp"

namespace palmline {

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

namespace {

struct Tap {
  std::size_t i0, i1;
  float w1;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t d = 0; d < out; ++d) {
    double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(s));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[d] = {i0, i1, static_cast<float>(s - static_cast<double>(i0))};
  }
  return taps;
}

}  // namespace

ImageRgb resize_bilinear(const ImageRgb& image, std::size_t width, std::size_t height) {
  if (image.empty()) fail(ErrorCode::EmptyImage, "resize of an empty image");
  if (width == 0 || height == 0) fail(ErrorCode::InvalidArgument, "resize target must be non-empty");
  if (width == image.width && height == image.height) return image;
  const auto xt = bilinear_taps(image.width, width);
  const auto yt = bilinear_taps(image.height, height);
  ImageRgb out(width, height);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      const Tap& ty = yt[y];
      for (std::size_t x = 0; x < width; ++x) {
        const Tap& tx = xt[x];
        // a + w (b - a) keeps flat regions exact
        const float a = image.at(c, ty.i0, tx.i0), b = image.at(c, ty.i0, tx.i1);
        const float d = image.at(c, ty.i1, tx.i0), e = image.at(c, ty.i1, tx.i1);
        const float top = a + tx.w1 * (b - a);
        const float bot = d + tx.w1 * (e - d);
        out.at(c, y, x) = top + ty.w1 * (bot - top);
      }
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, std::size_t width, std::size_t height) {
  if (mask.empty()) fail(ErrorCode::EmptyMask, "resize of an empty mask");
  BinaryMask out(width, height);
  const double sx = static_cast<double>(mask.width) / static_cast<double>(width);
  const double sy = static_cast<double>(mask.height) / static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    const auto iy = std::min(static_cast<std::size_t>((static_cast<double>(y) + 0.5) * sy), mask.height - 1);
    for (std::size_t x = 0; x < width; ++x) {
      const auto ix = std::min(static_cast<std::size_t>((static_cast<double>(x) + 0.5) * sx), mask.width - 1);
      out.set(y, x, mask.at(iy, ix));
    }
  }
  return out;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height)
    fail(ErrorCode::ShapeMismatch, "mask_iou on masks of different size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool x = a.bits[i] != 0, y = b.bits[i] != 0;
    inter += (x && y);
    uni += (x || y);
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace palmline
