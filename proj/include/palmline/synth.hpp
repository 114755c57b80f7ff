#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

#include "palmline/dataset.hpp"
#include "palmline/image.hpp"

namespace palmline {

/// Gaussian blobs around seeded random unit-vector centres, one subject per
/// class. Subjects are "s000", "s001", ...; image ids "s000_00", ...
FeatureTable synthesize_features(std::size_t classes, std::size_t per_class, std::size_t dim, double sigma,
                                 std::uint64_t seed);

struct HandSynthOptions {
  std::size_t width = 320;
  std::size_t height = 240;
  /// Major-axis angle in radians (image coordinates). NaN draws one from the seed in [-35, 35] degrees.
  double angle = std::numeric_limits<double>::quiet_NaN();
};

struct SyntheticHand {
  ImageRgb image;
  BinaryMask mask;  // exact generating footprint
  double angle = 0.0;
};

/// Elliptical palm with four finger lobes along the major axis, skin tone on a
/// darker textured background, a linear illumination gradient and seeded noise.
SyntheticHand synthesize_hand_image(std::uint64_t seed, const HandSynthOptions& options = {});

/// Filled rectangle of the given length (along `angle`) and width centred at (cx, cy).
BinaryMask rasterize_rectangle(std::size_t width, std::size_t height, double cx, double cy, double length,
                               double thickness, double angle);

}  // namespace palmline
