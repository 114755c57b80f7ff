#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "palmline/container.hpp"
#include "palmline/image.hpp"
#include "palmline/model.hpp"
#include "palmline/tensor.hpp"

namespace palmline {

inline constexpr std::size_t kFeatureDim = 4096;

/// Per-channel RGB means subtracted before inference (ImageNet convention).
inline constexpr std::array<float, 3> kDefaultMeanRgb{123.68f, 116.779f, 103.939f};

struct FeatureVector {
  std::vector<float> values;
  ModelKind model;
  FeatureLayer layer;
  std::string image_id;
};

/// "meta.mean_rgb" from the store when present (rank 1, length 3), else the default.
std::array<float, 3> mean_rgb_from(const WeightStore& weights);

/// Bilinear resize to the graph's input side, then per-channel mean
/// subtraction. Values stay in the 0..255 domain. Throws EmptyImage.
Tensor preprocess_input(const ImageRgb& roi, const ModelGraph& graph, const std::array<float, 3>& mean_rgb);

/// Runs layers [0, last] inclusive.
Tensor forward(const ModelGraph& graph, const WeightStore& weights, const Tensor& input, std::size_t last);

/// Forward pass stopping at the fc6 or fc7 tap, after its ReLU when post_relu.
/// Validates all parameters up front: MissingParameter / ShapeMismatch.
FeatureVector extract_features(const ModelGraph& graph, const WeightStore& weights, const Tensor& input,
                               FeatureLayer layer, bool post_relu = true, std::string image_id = {});

}  // namespace palmline
