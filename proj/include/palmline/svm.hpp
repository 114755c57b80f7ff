#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "palmline/container.hpp"

namespace palmline {

/// N x D row-major samples with class indices in [0, classes).
struct LabeledFeatures {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<float> vectors;
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const float> row(std::size_t i) const noexcept { return {vectors.data() + i * dim, dim}; }

  /// Throws SingleClass, NonFiniteInput, DimensionMismatch or ClassTooSmall.
  void validate() const;
};

struct TrainConfig {
  double lambda = 1e-4;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  bool l2_normalize_features = true;
  unsigned threads = 1;  // never changes the result
};

/// One-vs-rest linear model. Row c holds D weights followed by the bias,
/// which acts on an appended constant-1 feature.
class SvmModel {
 public:
  SvmModel(std::size_t classes, std::size_t dim, std::vector<float> weights, double lambda, bool normalized_inputs);

  std::size_t classes() const noexcept { return classes_; }
  std::size_t dim() const noexcept { return dim_; }
  double lambda() const noexcept { return lambda_; }
  bool normalized_inputs() const noexcept { return normalized_; }
  std::span<const float> weights() const noexcept { return weights_; }
  std::span<const float> row(std::size_t c) const noexcept { return {weights_.data() + c * (dim_ + 1), dim_ + 1}; }

  /// Per-class scores after the stored normalization. Throws DimensionMismatch.
  std::vector<double> scores(std::span<const float> x) const;
  /// Argmax of scores, lowest index on ties.
  std::size_t predict(std::span<const float> x) const;

  /// Tensors "svm.weights" [C, D+1] and "svm.meta" [2] = (lambda, normalized).
  WeightStore to_store() const;
  static SvmModel from_store(const WeightStore& store);

 private:
  std::size_t classes_;
  std::size_t dim_;
  std::vector<float> weights_;
  double lambda_;
  bool normalized_;
};

/// Pegasos SGD on each one-vs-rest hinge problem: step size 1/(lambda t),
/// projection onto the 1/sqrt(lambda) ball, one seeded shuffle per epoch.
/// Class c shuffles from a seed derived from (config.seed, c). Returns the
/// average of the iterates over the second half of the steps.
SvmModel train_sgd(const LabeledFeatures& data, const TrainConfig& config);

inline std::size_t predict(const SvmModel& model, std::span<const float> x) { return model.predict(x); }

/// sum_c [ lambda/2 |w_c|^2 + mean_i max(0, 1 - y_ic w_c . x_i) ] using the
/// model's lambda and normalization.
double objective(const SvmModel& model, const LabeledFeatures& data);

/// Fraction of rows predicted correctly.
double accuracy(const SvmModel& model, const LabeledFeatures& data);

}  // namespace palmline
