#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "palmline/dataset.hpp"
#include "palmline/svm.hpp"

namespace palmline {

/// Per-class training count: round-half-up(ratio * n), clamped to [1, n - 1].
std::size_t train_count(std::size_t class_size, double ratio);

struct Split {
  std::vector<std::size_t> train;  // row indices, ascending
  std::vector<std::size_t> test;
};

/// Per subject, draws train_count rows uniformly without replacement; the rest
/// is test. Throws ClassTooSmall when a subject has fewer than 2 rows.
Split stratified_split(const FeatureTable& table, double ratio, std::uint64_t seed);

/// Rows of `table` at `indices`, labelled by subject position in table.subjects().
LabeledFeatures gather(const FeatureTable& table, const std::vector<std::size_t>& indices);

/// 0.1, 0.2, ..., 0.9.
std::vector<double> default_ratios();
/// "start:stop:step", stop inclusive within 1e-9. Throws InvalidArgument.
std::vector<double> parse_ratio_range(std::string_view spec);

struct SweepConfig {
  std::vector<double> ratios = default_ratios();
  std::size_t repeats = 10;
  std::uint64_t base_seed = 0;
  TrainConfig train;
  unsigned threads = 1;  // never changes the result
};

struct SweepRow {
  std::string model;
  std::string layer;
  double ratio = 0.0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation, 0 for one repeat
  std::size_t repeats = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

/// Seed for repeat `repeat` of ratio `ratio_index`.
std::uint64_t sweep_seed(std::uint64_t base_seed, std::size_t ratio_index, std::size_t repeat);

/// Every (ratio, repeat) pair splits, trains and scores top-1 accuracy; rows
/// carry the mean and sample std over repeats, one per ratio.
SweepReport run_sweep(const FeatureTable& table, const SweepConfig& config);

/// Concatenates reports and orders rows by (ratio, model, layer).
SweepReport merge_reports(const std::vector<SweepReport>& reports);

/// `model,layer,ratio,mean_accuracy,std_accuracy,repeats`; ratio with one
/// decimal, accuracies with six. Throws EmptyReport.
std::string emit_report_csv(const SweepReport& report);
SweepReport parse_report_csv(std::string_view csv);

/// Accuracy-vs-ratio line chart, one polyline per (model, layer). Throws EmptyReport.
std::string emit_plot_svg(const SweepReport& report);

}  // namespace palmline
