#include "palmline/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "palmline/error.hpp"
#include "palmline/parallel.hpp"
#include "palmline/rng.hpp"

namespace palmline {

void LabeledFeatures::validate() const {
  if (classes < 2) fail(ErrorCode::SingleClass, "need at least 2 classes, got " + std::to_string(classes));
  if (dim == 0) fail(ErrorCode::DimensionMismatch, "feature dimension is zero");
  if (vectors.size() != labels.size() * dim)
    fail(ErrorCode::DimensionMismatch, std::to_string(vectors.size()) + " values for " +
                                           std::to_string(labels.size()) + " rows of dim " + std::to_string(dim));
  std::vector<std::size_t> per_class(classes, 0);
  for (std::size_t l : labels) {
    if (l >= classes) fail(ErrorCode::InvalidArgument, "label " + std::to_string(l) + " out of range");
    ++per_class[l];
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (per_class[c] == 0) fail(ErrorCode::ClassTooSmall, "class " + std::to_string(c) + " has no samples");
  if (!std::all_of(vectors.begin(), vectors.end(), [](float v) { return std::isfinite(v); }))
    fail(ErrorCode::NonFiniteInput, "feature vectors contain NaN or Inf");
}

SvmModel::SvmModel(std::size_t classes, std::size_t dim, std::vector<float> weights, double lambda,
                   bool normalized_inputs)
    : classes_(classes), dim_(dim), weights_(std::move(weights)), lambda_(lambda), normalized_(normalized_inputs) {
  if (classes_ < 2) fail(ErrorCode::SingleClass, "model needs at least 2 classes");
  if (weights_.size() != classes_ * (dim_ + 1))
    fail(ErrorCode::DimensionMismatch, "weights size does not match classes x (dim + 1)");
  if (!std::all_of(weights_.begin(), weights_.end(), [](float v) { return std::isfinite(v); }))
    fail(ErrorCode::NonFiniteInput, "model weights contain NaN or Inf");
}

namespace {

// x scaled to unit L2 norm when requested; zero vectors pass through.
std::vector<double> prepared(std::span<const float> x, bool normalize) {
  std::vector<double> out(x.begin(), x.end());
  if (normalize) {
    double norm = 0.0;
    for (double v : out) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& v : out) v /= norm;
  }
  return out;
}

double row_score(std::span<const float> w, const std::vector<double>& x) {
  double s = w[x.size()];
  for (std::size_t k = 0; k < x.size(); ++k) s += w[k] * x[k];
  return s;
}

}  // namespace

std::vector<double> SvmModel::scores(std::span<const float> x) const {
  if (x.size() != dim_)
    fail(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) + " features, model expects " +
                                           std::to_string(dim_));
  const auto px = prepared(x, normalized_);
  std::vector<double> s(classes_);
  for (std::size_t c = 0; c < classes_; ++c) s[c] = row_score(row(c), px);
  return s;
}

std::size_t SvmModel::predict(std::span<const float> x) const {
  const auto s = scores(x);
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

WeightStore SvmModel::to_store() const {
  WeightStore store;
  store.insert("svm.weights", Tensor({classes_, dim_ + 1}, weights_));
  store.insert("svm.meta", Tensor({2}, {static_cast<float>(lambda_), normalized_ ? 1.0f : 0.0f}));
  return store;
}

SvmModel SvmModel::from_store(const WeightStore& store) {
  const Tensor& w = store.at("svm.weights");
  const Tensor& meta = store.at("svm.meta");
  if (w.rank() != 2 || w.dim(1) < 2) fail(ErrorCode::ShapeMismatch, "svm.weights must be [C, D+1]");
  if (meta.dims() != Shape{2}) fail(ErrorCode::ShapeMismatch, "svm.meta must be [2]");
  return SvmModel(w.dim(0), w.dim(1) - 1, std::vector<float>(w.values().begin(), w.values().end()), meta[0],
                  meta[1] != 0.0f);
}

SvmModel train_sgd(const LabeledFeatures& data, const TrainConfig& config) {
  data.validate();
  if (!(config.lambda > 0.0)) fail(ErrorCode::InvalidArgument, "lambda must be > 0");
  if (config.epochs == 0) fail(ErrorCode::InvalidArgument, "epochs must be >= 1");

  const std::size_t n = data.size(), dim = data.dim, width = dim + 1;
  // Augmented rows [x / |x|, 1].
  std::vector<double> rows(n * width);
  for (std::size_t i = 0; i < n; ++i) {
    const auto px = prepared(data.row(i), config.l2_normalize_features);
    std::copy(px.begin(), px.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * width));
    rows[i * width + dim] = 1.0;
  }

  std::vector<float> weights(data.classes * width);
  parallel_for(data.classes, std::max(1u, config.threads), [&](std::size_t c) {
    // w = scale * v keeps the shrink step O(1).
    std::vector<double> v(width, 0.0);
    double scale = 1.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, {c}));
    std::uint64_t t = 0;
    const double radius = 1.0 / std::sqrt(config.lambda);
    // The returned model averages the iterates of the second half of the run.
    const std::uint64_t total = static_cast<std::uint64_t>(config.epochs) * n, average_from = total / 2;
    std::vector<double> sum(width, 0.0);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i : order) {
        ++t;
        const double eta = 1.0 / (config.lambda * static_cast<double>(t));
        const double* x = rows.data() + i * width;
        const double y = data.labels[i] == c ? 1.0 : -1.0;
        double dot = 0.0;
        for (std::size_t k = 0; k < width; ++k) dot += v[k] * x[k];
        const bool violated = y * scale * dot < 1.0;
        const double shrink = 1.0 - eta * config.lambda;
        if (shrink <= 0.0) {
          std::fill(v.begin(), v.end(), 0.0);
          scale = 1.0;
        } else {
          scale *= shrink;
        }
        if (violated) {
          const double step = eta * y / scale;
          for (std::size_t k = 0; k < width; ++k) v[k] += step * x[k];
          // project onto the ball of radius 1/sqrt(lambda)
          double sq = 0.0;
          for (double e : v) sq += e * e;
          const double norm = scale * std::sqrt(sq);
          if (norm > radius) scale *= radius / norm;
        }
        if (scale < 1e-9) {
          for (double& e : v) e *= scale;
          scale = 1.0;
        }
        if (t > average_from)
          for (std::size_t k = 0; k < width; ++k) sum[k] += scale * v[k];
      }
    }
    const double count = static_cast<double>(total - average_from);
    for (std::size_t k = 0; k < width; ++k) weights[c * width + k] = static_cast<float>(sum[k] / count);
  });
  return SvmModel(data.classes, dim, std::move(weights), config.lambda, config.l2_normalize_features);
}

double objective(const SvmModel& model, const LabeledFeatures& data) {
  if (data.dim != model.dim())
    fail(ErrorCode::DimensionMismatch, "data dim " + std::to_string(data.dim) + " vs model dim " +
                                           std::to_string(model.dim()));
  if (data.size() == 0) fail(ErrorCode::InvalidArgument, "objective over an empty dataset");
  double total = 0.0;
  for (std::size_t c = 0; c < model.classes(); ++c) {
    double norm2 = 0.0;
    for (float w : model.row(c)) norm2 += static_cast<double>(w) * w;
    total += 0.5 * model.lambda() * norm2;
  }
  double hinge = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = model.scores(data.row(i));
    for (std::size_t c = 0; c < model.classes(); ++c) {
      const double y = data.labels[i] == c ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - y * s[c]);
    }
  }
  return total + hinge / static_cast<double>(data.size());
}

double accuracy(const SvmModel& model, const LabeledFeatures& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += model.predict(data.row(i)) == data.labels[i];
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace palmline
