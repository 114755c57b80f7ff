#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "palmline/image.hpp"
#include "palmline/model.hpp"

namespace palmline {

/// Axis-aligned square, top-left at (x, y).
struct RoiSquare {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t side = 0;

  friend bool operator==(const RoiSquare&, const RoiSquare&) = default;
};

struct PreprocessConfig {
  double downscale_factor = 0.7;
  std::uint64_t seed = 0;
  std::size_t kmeans_max_iter = 50;
  double percentile_low = 1.0;
  double percentile_high = 99.0;
  std::size_t morph_radius = 5;  // at reduced scale
  std::size_t min_roi_side = 32;  // at full scale

  /// Throws InvalidArgument.
  void validate() const;
};

/// Bilinear downscale; output dims round(dim * factor), at least 1.
ImageRgb downscale(const ImageRgb& image, double factor);

struct KMeansResult {
  std::array<std::array<double, 3>, 2> centroids;
  std::vector<std::uint8_t> labels;  // cluster per pixel, row-major
  std::size_t hand_cluster = 0;
  std::size_t iterations = 0;
  BinaryMask mask;
};

/// Two-cluster Lloyd k-means on RGB vectors with k-means++ seeding. The hand
/// cluster is the one whose largest 8-connected component covers more of the
/// central half-size window; ties go to the brighter centroid.
/// Throws DegenerateImage when the image has a single colour.
KMeansResult kmeans_cluster(const ImageRgb& image, std::uint64_t seed, std::size_t max_iter = 50);
BinaryMask kmeans_segment(const ImageRgb& image, std::uint64_t seed, std::size_t max_iter = 50);

/// Per-channel linear stretch of the [low, high] percentile range onto
/// [0, 255], clamped. Constant channels pass through unchanged.
ImageRgb enhance_contrast(const ImageRgb& image, double percentile_low = 1.0, double percentile_high = 99.0);

/// Major-axis direction from second-order central moments, radians in
/// (-pi/2, pi/2], measured in image coordinates (x right, y down).
/// Isotropic masks return 0. Throws EmptyMask.
double principal_angle(const BinaryMask& mask);

/// Rotates by -angle about the image centre onto a canvas enlarged to the
/// rotated bounding box, so an axis at `angle` ends up horizontal.
/// Uncovered pixels are 0 / false.
ImageRgb rotate(const ImageRgb& image, double angle);
BinaryMask rotate(const BinaryMask& mask, double angle);

/// Largest 8-connected foreground component; ties keep the first in scan order.
BinaryMask largest_component(const BinaryMask& mask);
/// Sets background regions not 4-connected to the border.
BinaryMask fill_holes(const BinaryMask& mask);
/// Disk structuring element; pixels beyond the border do not constrain the result.
BinaryMask erode(const BinaryMask& mask, std::size_t radius);
BinaryMask dilate(const BinaryMask& mask, std::size_t radius);

/// Largest component, opening, closing, hole filling, then the largest
/// component again. Throws EmptyMask when nothing survives.
BinaryMask clean_mask(const BinaryMask& mask, std::size_t radius);

/// Largest all-true axis-aligned square. Ties: smallest bottom-right row, then
/// smallest column. Throws EmptyMask.
RoiSquare largest_inscribed_square(const BinaryMask& mask);

/// Intermediate products of the ROI pipeline, kept for inspection.
struct PalmRoi {
  ImageRgb roi;                // input_side x input_side
  BinaryMask segmentation;     // reduced scale, original orientation
  BinaryMask normalized_mask;  // reduced scale, cleaned and rotated
  double angle = 0.0;
  RoiSquare square_reduced;    // in normalized_mask coordinates
  RoiSquare square_full;       // in the rotated full-resolution image
  std::size_t rotated_width = 0;
  std::size_t rotated_height = 0;
};

/// Downscale, segment, enhance (full resolution), orient, clean, crop the
/// largest inscribed square and resize it to input_side. Errors are
/// prefixed with the failing step. Throws RoiTooSmall when the full-scale
/// square is below config.min_roi_side.
PalmRoi extract_palm_roi_detailed(const ImageRgb& image, std::size_t input_side, const PreprocessConfig& config);
ImageRgb extract_palm_roi(const ImageRgb& image, const ModelGraph& graph, const PreprocessConfig& config);

}  // namespace palmline
