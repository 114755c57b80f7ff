#include "palmline/model.hpp"

#include <cmath>
#include <random>

#include "palmline/error.hpp"
#include "palmline/features.hpp"
#include "palmline/rng.hpp"

namespace palmline {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::AlexNet: return "alexnet";
    case ModelKind::Vgg16: return "vgg16";
    case ModelKind::Vgg19: return "vgg19";
  }
  return "unknown";
}

std::string_view to_string(FeatureLayer layer) noexcept { return layer == FeatureLayer::Fc6 ? "fc6" : "fc7"; }

ModelKind parse_model_kind(std::string_view text) {
  if (text == "alexnet") return ModelKind::AlexNet;
  if (text == "vgg16") return ModelKind::Vgg16;
  if (text == "vgg19") return ModelKind::Vgg19;
  fail(ErrorCode::InvalidArgument, "unknown model '" + std::string(text) + "' (alexnet, vgg16, vgg19)");
}

FeatureLayer parse_feature_layer(std::string_view text) {
  if (text == "fc6") return FeatureLayer::Fc6;
  if (text == "fc7") return FeatureLayer::Fc7;
  fail(ErrorCode::InvalidArgument, "unknown layer '" + std::string(text) + "' (fc6, fc7)");
}

namespace {

void append_head(ModelGraph& g) {
  g.layers.emplace_back(layer::Flatten{});
  g.fc6_index = g.layers.size();
  g.layers.emplace_back(layer::Dense{"fc6", kFeatureDim});
  g.layers.emplace_back(layer::Relu{});
  g.fc7_index = g.layers.size();
  g.layers.emplace_back(layer::Dense{"fc7", kFeatureDim});
  g.layers.emplace_back(layer::Relu{});
}

ModelGraph alexnet() {
  ModelGraph g{ModelKind::AlexNet, 227, {}, 0, 0};
  const layer::Lrn lrn{5, 1e-4f, 0.75f, 2.0f};
  auto& l = g.layers;
  l.emplace_back(layer::Conv{"conv1", 96, 11, 11, 4, 0, 1});
  l.emplace_back(layer::Relu{});
  l.emplace_back(lrn);
  l.emplace_back(layer::MaxPool{3, 2});
  l.emplace_back(layer::Conv{"conv2", 256, 5, 5, 1, 2, 2});
  l.emplace_back(layer::Relu{});
  l.emplace_back(lrn);
  l.emplace_back(layer::MaxPool{3, 2});
  l.emplace_back(layer::Conv{"conv3", 384, 3, 3, 1, 1, 1});
  l.emplace_back(layer::Relu{});
  l.emplace_back(layer::Conv{"conv4", 384, 3, 3, 1, 1, 2});
  l.emplace_back(layer::Relu{});
  l.emplace_back(layer::Conv{"conv5", 256, 3, 3, 1, 1, 2});
  l.emplace_back(layer::Relu{});
  l.emplace_back(layer::MaxPool{3, 2});
  append_head(g);
  return g;
}

ModelGraph vgg(ModelKind kind, std::initializer_list<std::initializer_list<std::size_t>> blocks) {
  ModelGraph g{kind, 224, {}, 0, 0};
  std::size_t block = 1;
  for (const auto& widths : blocks) {
    std::size_t conv = 1;
    for (std::size_t w : widths) {
      g.layers.emplace_back(
          layer::Conv{"conv" + std::to_string(block) + "_" + std::to_string(conv), w, 3, 3, 1, 1, 1});
      g.layers.emplace_back(layer::Relu{});
      ++conv;
    }
    g.layers.emplace_back(layer::MaxPool{2, 2});
    ++block;
  }
  append_head(g);
  return g;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void bad_shape(std::size_t index, const std::string& what, const Shape& in) {
  fail(ErrorCode::ShapeMismatch,
       "layer " + std::to_string(index) + " (" + what + ") cannot accept input " + shape_to_string(in));
}

}  // namespace

ModelGraph build_model(ModelKind kind) {
  ModelGraph g = [&] {
    switch (kind) {
      case ModelKind::AlexNet: return alexnet();
      case ModelKind::Vgg16: return vgg(kind, {{64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512}});
      case ModelKind::Vgg19:
        return vgg(kind, {{64, 64}, {128, 128}, {256, 256, 256, 256}, {512, 512, 512, 512}, {512, 512, 512, 512}});
    }
    fail(ErrorCode::InvalidArgument, "unknown model kind");
  }();
  const auto shapes = propagate_shapes(g);
  if (shapes[g.fc6_index] != Shape{kFeatureDim} || shapes[g.fc7_index] != Shape{kFeatureDim})
    fail(ErrorCode::ShapeMismatch, "fc6/fc7 must emit 4096 features");
  return g;
}

std::vector<Shape> propagate_shapes(const ModelGraph& graph) {
  std::vector<Shape> shapes;
  shapes.reserve(graph.layers.size());
  Shape cur = graph.input_shape();
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    cur = std::visit(
        Overloaded{
            [&](const layer::Conv& c) -> Shape {
              if (cur.size() != 3 || c.stride == 0 || c.groups == 0 || cur[0] % c.groups != 0 ||
                  c.out_channels % c.groups != 0 || cur[1] + 2 * c.pad < c.kernel_h ||
                  cur[2] + 2 * c.pad < c.kernel_w)
                bad_shape(i, c.name, cur);
              return {c.out_channels, (cur[1] + 2 * c.pad - c.kernel_h) / c.stride + 1,
                      (cur[2] + 2 * c.pad - c.kernel_w) / c.stride + 1};
            },
            [&](const layer::Relu&) -> Shape { return cur; },
            [&](const layer::Lrn&) -> Shape {
              if (cur.size() != 3) bad_shape(i, "lrn", cur);
              return cur;
            },
            [&](const layer::MaxPool& p) -> Shape {
              if (cur.size() != 3 || p.stride == 0 || p.kernel > cur[1] || p.kernel > cur[2])
                bad_shape(i, "maxpool", cur);
              return {cur[0], (cur[1] - p.kernel) / p.stride + 1, (cur[2] - p.kernel) / p.stride + 1};
            },
            [&](const layer::Flatten&) -> Shape { return {shape_size(cur)}; },
            [&](const layer::Dense& d) -> Shape {
              if (cur.size() != 1) bad_shape(i, d.name, cur);
              return {d.out_features};
            },
        },
        graph.layers[i]);
    shapes.push_back(cur);
  }
  return shapes;
}

std::vector<ParameterSpec> parameter_specs(const ModelGraph& graph) {
  const auto shapes = propagate_shapes(graph);
  std::vector<ParameterSpec> specs;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const Shape& in = i == 0 ? graph.input_shape() : shapes[i - 1];
    if (const auto* c = std::get_if<layer::Conv>(&graph.layers[i])) {
      specs.push_back({c->name + ".weight", {c->out_channels, in[0] / c->groups, c->kernel_h, c->kernel_w}});
      specs.push_back({c->name + ".bias", {c->out_channels}});
    } else if (const auto* d = std::get_if<layer::Dense>(&graph.layers[i])) {
      specs.push_back({d->name + ".weight", {d->out_features, in[0]}});
      specs.push_back({d->name + ".bias", {d->out_features}});
    }
  }
  return specs;
}

std::size_t parameter_count(const ModelGraph& graph) {
  std::size_t n = 0;
  for (const auto& p : parameter_specs(graph)) n += shape_size(p.dims);
  return n;
}

void validate_weights(const ModelGraph& graph, const WeightStore& weights) {
  for (const auto& p : parameter_specs(graph)) {
    const Tensor* t = weights.find(p.name);
    if (!t) fail(ErrorCode::MissingParameter, p.name);
    if (t->dims() != p.dims)
      fail(ErrorCode::ShapeMismatch,
           p.name + ": expected " + shape_to_string(p.dims) + ", got " + shape_to_string(t->dims()));
  }
}

WeightStore random_weights(const ModelGraph& graph, std::uint64_t seed) {
  WeightStore store;
  std::size_t index = 0;
  for (const auto& p : parameter_specs(graph)) {
    Rng rng(derive_seed(seed, {index++}));
    const bool is_bias = p.dims.size() == 1;
    // fan_in = product of all non-output dims
    const double fan_in = static_cast<double>(shape_size(p.dims) / p.dims[0]);
    const float bound = is_bias ? 0.01f : static_cast<float>(std::sqrt(6.0 / fan_in));
    std::uniform_real_distribution<float> dist(-bound, bound);
    Tensor t(p.dims);
    for (float& v : t.values()) v = dist(rng);
    store.insert(p.name, std::move(t));
  }
  store.insert(std::string(kMetaPrefix) + "mean_rgb",
               Tensor({3}, {kDefaultMeanRgb[0], kDefaultMeanRgb[1], kDefaultMeanRgb[2]}));
  return store;
}

}  // namespace palmline
