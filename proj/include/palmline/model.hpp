#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "palmline/container.hpp"
#include "palmline/tensor.hpp"

namespace palmline {

enum class ModelKind { AlexNet, Vgg16, Vgg19 };
enum class FeatureLayer { Fc6, Fc7 };

std::string_view to_string(ModelKind kind) noexcept;
std::string_view to_string(FeatureLayer layer) noexcept;
/// Accepts "alexnet", "vgg16", "vgg19". Throws InvalidArgument.
ModelKind parse_model_kind(std::string_view text);
/// Accepts "fc6", "fc7". Throws InvalidArgument.
FeatureLayer parse_feature_layer(std::string_view text);

namespace layer {

struct Conv {
  std::string name;
  std::size_t out_channels;
  std::size_t kernel_h;
  std::size_t kernel_w;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t groups = 1;
};
struct Relu {};
struct MaxPool {
  std::size_t kernel;
  std::size_t stride;
};
struct Lrn {
  std::size_t n;
  float alpha;
  float beta;
  float k;
};
struct Flatten {};
struct Dense {
  std::string name;
  std::size_t out_features;
};

}  // namespace layer

using LayerSpec = std::variant<layer::Conv, layer::Relu, layer::MaxPool, layer::Lrn, layer::Flatten, layer::Dense>;

/// Ordered layer table of a truncated feature extractor, ending at fc7's ReLU.
struct ModelGraph {
  ModelKind kind;
  std::size_t input_side;
  std::vector<LayerSpec> layers;
  std::size_t fc6_index;
  std::size_t fc7_index;

  std::size_t tap_index(FeatureLayer layer) const noexcept {
    return layer == FeatureLayer::Fc6 ? fc6_index : fc7_index;
  }
  Shape input_shape() const { return {3, input_side, input_side}; }
};

ModelGraph build_model(ModelKind kind);

/// Output shape after each layer, starting from graph.input_shape().
/// Throws ShapeMismatch if a layer cannot accept its input.
std::vector<Shape> propagate_shapes(const ModelGraph& graph);

struct ParameterSpec {
  std::string name;
  Shape dims;
};

/// "<layer>.weight" / "<layer>.bias" for every conv and dense layer, in graph order.
std::vector<ParameterSpec> parameter_specs(const ModelGraph& graph);
std::size_t parameter_count(const ModelGraph& graph);

/// Throws MissingParameter or ShapeMismatch naming the first bad parameter.
void validate_weights(const ModelGraph& graph, const WeightStore& weights);

/// He-uniform weights and small uniform biases for every parameter, seeded.
WeightStore random_weights(const ModelGraph& graph, std::uint64_t seed);

}  // namespace palmline
