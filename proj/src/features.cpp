#include "palmline/features.hpp"

#include <variant>

#include "palmline/error.hpp"
#include "palmline/layers.hpp"

namespace palmline {

std::array<float, 3> mean_rgb_from(const WeightStore& weights) {
  const Tensor* t = weights.find(std::string(kMetaPrefix) + "mean_rgb");
  if (!t) return kDefaultMeanRgb;
  if (t->dims() != Shape{3})
    fail(ErrorCode::ShapeMismatch, "meta.mean_rgb must be [3], got " + shape_to_string(t->dims()));
  return {(*t)[0], (*t)[1], (*t)[2]};
}

Tensor preprocess_input(const ImageRgb& roi, const ModelGraph& graph, const std::array<float, 3>& mean_rgb) {
  if (roi.empty()) fail(ErrorCode::EmptyImage, "preprocess_input on empty ROI");
  const std::size_t side = graph.input_side;
  const ImageRgb sized = resize_bilinear(roi, side, side);
  Tensor out({3, side, side});
  const std::size_t plane = side * side;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = sized.pixels[c * plane + i] - mean_rgb[c];
  return out;
}

Tensor forward(const ModelGraph& graph, const WeightStore& weights, const Tensor& input, std::size_t last) {
  if (input.dims() != graph.input_shape())
    fail(ErrorCode::ShapeMismatch,
         "input " + shape_to_string(input.dims()) + ", model expects " + shape_to_string(graph.input_shape()));
  if (last >= graph.layers.size()) fail(ErrorCode::InvalidArgument, "layer index out of range");
  Tensor x = input;
  for (std::size_t i = 0; i <= last; ++i) {
    const LayerSpec& spec = graph.layers[i];
    if (const auto* c = std::get_if<layer::Conv>(&spec)) {
      x = conv2d(x, weights.at(c->name + ".weight"), weights.at(c->name + ".bias"), c->stride, c->pad, c->groups);
    } else if (std::holds_alternative<layer::Relu>(spec)) {
      x = relu(std::move(x));
    } else if (const auto* p = std::get_if<layer::MaxPool>(&spec)) {
      x = maxpool2d(x, p->kernel, p->stride);
    } else if (const auto* n = std::get_if<layer::Lrn>(&spec)) {
      x = local_response_norm(x, n->n, n->alpha, n->beta, n->k);
    } else if (std::holds_alternative<layer::Flatten>(spec)) {
      const std::size_t len = x.size();
      x = std::move(x).reshaped({len});
    } else if (const auto* d = std::get_if<layer::Dense>(&spec)) {
      x = dense(x, weights.at(d->name + ".weight"), weights.at(d->name + ".bias"));
    }
  }
  return x;
}

FeatureVector extract_features(const ModelGraph& graph, const WeightStore& weights, const Tensor& input,
                               FeatureLayer layer, bool post_relu, std::string image_id) {
  validate_weights(graph, weights);
  if (!input.all_finite()) fail(ErrorCode::NonFiniteInput, "input tensor has non-finite values");
  std::size_t last = graph.tap_index(layer);
  if (post_relu) ++last;
  Tensor out = forward(graph, weights, input, last);
  std::vector<float> values(out.values().begin(), out.values().end());
  return {std::move(values), graph.kind, layer, std::move(image_id)};
}

}  // namespace palmline
