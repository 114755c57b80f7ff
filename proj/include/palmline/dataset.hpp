#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace palmline {

struct ManifestEntry {
  std::string subject_id;
  std::string session_id;
  std::string image_path;
};

/// At least two subjects, each with at least two entries, unique paths.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

/// Parses `subject_id,session_id,image_path` CSV. Throws ParseError (with
/// line number), DuplicatePath, TooFewSubjects or ClassTooSmall.
DatasetManifest load_manifest(std::string_view csv);
std::string write_manifest_csv(const DatasetManifest& manifest);

struct FeatureRow {
  std::string subject_id;
  std::string image_id;
  std::vector<float> feature;
};

struct FeatureTable {
  std::string model_kind = "unknown";
  std::string layer = "unknown";
  std::size_t dim = 0;
  std::vector<FeatureRow> rows;

  /// Throws DimensionMismatch or NonFiniteInput.
  void validate() const;
  /// Distinct subject ids in first-appearance order; a subject's position is its class index.
  std::vector<std::string> subjects() const;
};

/// `subject_id,image_id,f0,...,f{D-1}`, shortest round-trip float formatting.
std::string write_feature_csv(const FeatureTable& table);
/// Throws ParseError with the line number.
FeatureTable parse_feature_csv(std::string_view csv);

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_record(std::string_view line);

}  // namespace palmline
