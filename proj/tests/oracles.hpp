#pragma once

// Independent brute-force and closed-form oracles shared by the unit tests and
// the acceptance binary.

#include <algorithm>
#include <initializer_list>

#include "palmline/image.hpp"
#include "palmline/preprocess.hpp"

namespace palmline::oracle {

inline bool square_is_true(const BinaryMask& m, std::size_t x, std::size_t y, std::size_t side) {
  for (std::size_t yy = y; yy < y + side; ++yy)
    for (std::size_t xx = x; xx < x + side; ++xx)
      if (!m.at(yy, xx)) return false;
  return true;
}

// Exhaustive scan: largest side first, then bottom-right in row-major order.
inline RoiSquare brute_force_square(const BinaryMask& m) {
  for (std::size_t side = std::min(m.width, m.height); side >= 1; --side)
    for (std::size_t by = side - 1; by < m.height; ++by)
      for (std::size_t bx = side - 1; bx < m.width; ++bx)
        if (square_is_true(m, bx + 1 - side, by + 1 - side, side)) return {bx + 1 - side, by + 1 - side, side};
  return {};
}

inline std::size_t conv_params(std::size_t out, std::size_t in_per_group, std::size_t k) {
  return out * in_per_group * k * k + out;
}

inline std::size_t alexnet_params() {
  return conv_params(96, 3, 11) + conv_params(256, 48, 5) + conv_params(384, 256, 3) + conv_params(384, 192, 3) +
         conv_params(256, 192, 3) + 9216 * 4096 + 4096 + 4096 * 4096 + 4096;
}

inline std::size_t vgg_params(std::initializer_list<std::size_t> convs_per_block) {
  const std::size_t widths[] = {64, 128, 256, 512, 512};
  std::size_t total = 0, in = 3, b = 0;
  for (std::size_t n : convs_per_block) {
    for (std::size_t i = 0; i < n; ++i) {
      total += conv_params(widths[b], in, 3);
      in = widths[b];
    }
    ++b;
  }
  return total + 25088 * 4096 + 4096 + 4096 * 4096 + 4096;
}

}  // namespace palmline::oracle
