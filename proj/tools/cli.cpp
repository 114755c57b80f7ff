#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "palmline/container.hpp"
#include "palmline/dataset.hpp"
#include "palmline/error.hpp"
#include "palmline/features.hpp"
#include "palmline/image_io.hpp"
#include "palmline/io_util.hpp"
#include "palmline/model.hpp"
#include "palmline/parallel.hpp"
#include "palmline/preprocess.hpp"
#include "palmline/sweep.hpp"
#include "palmline/synth.hpp"

namespace palmline::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;
  bool verbose = false;

  unsigned thread_count() const {
    if (const char* env = std::getenv("PALMLINE_THREADS"); env && *env) return default_thread_count();
    return threads ? std::max(1u, *threads) : default_thread_count();
  }
};

struct SegmentArgs {
  std::string input, out_mask, out_roi, model = "vgg16";
};

struct ExtractArgs {
  std::string model, weights, layer = "fc6", manifest, out;
  bool post_relu = true;
};

struct SweepArgs {
  std::vector<std::string> features, series;
  std::string ratios = "0.1:0.9:0.1", out_report, out_plot;
  std::size_t repeats = 10, epochs = 20;
  double lambda = 1e-4;
};

struct WeightsArgs {
  std::string model, out;
};

struct SynthHandArgs {
  std::string out_image, out_mask;
  std::optional<double> angle_deg;
  std::size_t width = 320, height = 240;
};

struct SynthFeaturesArgs {
  std::string out;
  std::size_t classes = 10, per_class = 15, dim = 64;
  double sigma = 0.1;
};

bool is_segmentation_failure(ErrorCode c) {
  return c == ErrorCode::DegenerateImage || c == ErrorCode::EmptyMask || c == ErrorCode::RoiTooSmall ||
         c == ErrorCode::EmptyImage;
}

int cmd_segment(const SegmentArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const ModelGraph graph = build_model(parse_model_kind(a.model));
  const ImageRgb image = read_image(a.input);
  PreprocessConfig config;
  config.seed = g.seed;
  PalmRoi roi;
  try {
    roi = extract_palm_roi_detailed(image, graph.input_side, config);
  } catch (const Error& e) {
    if (!is_segmentation_failure(e.code())) throw;
    err << "palmline segment: segmentation failed: " << e.what() << "\n";
    return kExitSegment;
  }
  const auto mask_png = encode_png(roi.normalized_mask);
  const auto roi_png = encode_png(roi.roi);
  write_file_atomic(a.out_mask, mask_png);
  write_file_atomic(a.out_roi, roi_png);
  if (g.verbose)
    out << "angle " << roi.angle * 180.0 / std::numbers::pi << " deg, square " << roi.square_full.side << " px at ("
        << roi.square_full.x << "," << roi.square_full.y << "), roi " << roi.roi.width << "x" << roi.roi.height
        << "\n";
  return kExitOk;
}

int cmd_extract(const ExtractArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const ModelGraph graph = build_model(parse_model_kind(a.model));
  const FeatureLayer layer = parse_feature_layer(a.layer);
  WeightStore weights;
  try {
    weights = load_container(a.weights);
    validate_weights(graph, weights);
  } catch (const Error& e) {
    err << "palmline extract: weights rejected: " << e.what() << "\n";
    return kExitWeights;
  }
  const auto mean_rgb = mean_rgb_from(weights);
  const DatasetManifest manifest = load_manifest(read_text_file(a.manifest));
  const fs::path base = fs::path(a.manifest).parent_path();

  PreprocessConfig config;
  config.seed = g.seed;
  const std::size_t n = manifest.entries.size();
  std::vector<std::optional<FeatureRow>> rows(n);
  std::vector<std::string> failures(n);
  parallel_for(n, g.thread_count(), [&](std::size_t i) {
    const ManifestEntry& entry = manifest.entries[i];
    const fs::path path = fs::path(entry.image_path).is_absolute() ? fs::path(entry.image_path) : base / entry.image_path;
    try {
      const ImageRgb image = read_image(path);
      const ImageRgb roi = extract_palm_roi(image, graph, config);
      const Tensor input = preprocess_input(roi, graph, mean_rgb);
      FeatureVector fv = extract_features(graph, weights, input, layer, a.post_relu, entry.image_path);
      rows[i] = FeatureRow{entry.subject_id, entry.image_path, std::move(fv.values)};
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  FeatureTable table;
  table.model_kind = std::string(to_string(graph.kind));
  table.layer = std::string(to_string(layer));
  table.dim = kFeatureDim;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i]) {
      table.rows.push_back(std::move(*rows[i]));
    } else {
      ++skipped;
      err << "palmline extract: skipped " << manifest.entries[i].image_path << ": " << failures[i] << "\n";
    }
  }
  write_file_atomic(a.out, write_feature_csv(table));
  if (g.verbose) out << "wrote " << table.rows.size() << " feature rows to " << a.out << "\n";
  if (skipped) {
    err << "palmline extract: warning: wrote " << table.rows.size() << " of " << n << " rows\n";
    return kExitSkipped;
  }
  return kExitOk;
}

int cmd_sweep(const SweepArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  if (!a.series.empty() && a.series.size() != a.features.size()) {
    err << "palmline sweep: --series needs one model:layer label per --features file\n";
    return kExitUsage;
  }
  SweepConfig config;
  config.ratios = parse_ratio_range(a.ratios);
  config.repeats = a.repeats;
  config.base_seed = g.seed;
  config.train.lambda = a.lambda;
  config.train.epochs = a.epochs;
  config.threads = g.thread_count();
  std::vector<SweepReport> reports;
  try {
    for (std::size_t i = 0; i < a.features.size(); ++i) {
      FeatureTable table = parse_feature_csv(read_text_file(a.features[i]));
      if (!a.series.empty()) {
        const auto colon = a.series[i].find(':');
        table.model_kind = a.series[i].substr(0, colon);
        table.layer = colon == std::string::npos ? "unknown" : a.series[i].substr(colon + 1);
      }
      reports.push_back(run_sweep(table, config));
    }
  } catch (const Error& e) {
    err << "palmline sweep: " << e.what() << "\n";
    return kExitSweep;
  }
  const SweepReport report = merge_reports(reports);
  const std::string csv = emit_report_csv(report);
  const std::string svg = a.out_plot.empty() ? std::string() : emit_plot_svg(report);
  write_file_atomic(a.out_report, csv);
  if (!a.out_plot.empty()) write_file_atomic(a.out_plot, svg);
  if (g.verbose) out << csv;
  return kExitOk;
}

int cmd_random_weights(const WeightsArgs& a, const Globals& g, std::ostream& out) {
  const ModelGraph graph = build_model(parse_model_kind(a.model));
  save_container(random_weights(graph, g.seed), a.out);
  if (g.verbose) out << "wrote " << parameter_count(graph) << " parameters to " << a.out << "\n";
  return kExitOk;
}

int cmd_synth_hand(const SynthHandArgs& a, const Globals& g) {
  HandSynthOptions opt;
  opt.width = a.width;
  opt.height = a.height;
  if (a.angle_deg) opt.angle = *a.angle_deg * std::numbers::pi / 180.0;
  const SyntheticHand hand = synthesize_hand_image(g.seed, opt);
  write_file_atomic(a.out_image, encode_png(hand.image));
  if (!a.out_mask.empty()) write_file_atomic(a.out_mask, encode_png(hand.mask));
  return kExitOk;
}

int cmd_synth_features(const SynthFeaturesArgs& a, const Globals& g) {
  write_file_atomic(a.out, write_feature_csv(synthesize_features(a.classes, a.per_class, a.dim, a.sigma, g.seed)));
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Palmprint ROI extraction, deep features and SVM evaluation sweeps", "palmline"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (PALMLINE_THREADS overrides; results never depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "Print progress to stdout");

  const auto models = CLI::IsMember({"alexnet", "vgg16", "vgg19"});

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Segment a hand image and crop the palm ROI");
  segment->add_option("--input", seg.input, "Input PNG/JPEG")->required()->check(CLI::ExistingFile);
  segment->add_option("--out-mask", seg.out_mask, "Cleaned, orientation-normalized mask PNG")->required();
  segment->add_option("--out-roi", seg.out_roi, "ROI PNG at the model input size")->required();
  segment->add_option("--model", seg.model, "Sets the ROI size")->check(models)->capture_default_str();

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Extract fc6/fc7 deep features for every manifest image");
  extract->add_option("--model", ex.model)->required()->check(models);
  extract->add_option("--weights", ex.weights, "PTWT weight container")->required()->check(CLI::ExistingFile);
  extract->add_option("--layer", ex.layer)->check(CLI::IsMember({"fc6", "fc7"}))->capture_default_str();
  extract->add_option("--manifest", ex.manifest, "subject_id,session_id,image_path CSV")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--out", ex.out, "Feature CSV")->required();
  extract->add_flag("--post-relu,!--pre-relu", ex.post_relu, "Tap features after the layer's ReLU (default)");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Training-ratio sweep with one-vs-rest SGD SVMs");
  sweep->add_option("--features", sw.features, "Feature CSV(s)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--series", sw.series, "model:layer label per features file");
  sweep->add_option("--ratios", sw.ratios, "start:stop:step, stop inclusive")->capture_default_str();
  sweep->add_option("--repeats", sw.repeats)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--lambda", sw.lambda)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--epochs", sw.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--out-report", sw.out_report, "Report CSV")->required();
  sweep->add_option("--out-plot", sw.out_plot, "Accuracy-vs-ratio SVG");

  WeightsArgs rw;
  auto* rweights = app.add_subcommand("random-weights", "Write a seeded random weight container for a model");
  rweights->add_option("--model", rw.model)->required()->check(models);
  rweights->add_option("--out", rw.out)->required();

  SynthHandArgs sh;
  auto* shand = app.add_subcommand("synth-hand", "Render a synthetic hand image");
  shand->add_option("--out-image", sh.out_image)->required();
  shand->add_option("--out-mask", sh.out_mask, "Ground-truth mask PNG");
  shand->add_option("--angle", sh.angle_deg, "Major-axis angle in degrees (default: drawn from the seed)");
  shand->add_option("--width", sh.width)->check(CLI::Range(32, 8192))->capture_default_str();
  shand->add_option("--height", sh.height)->check(CLI::Range(32, 8192))->capture_default_str();

  SynthFeaturesArgs sf;
  auto* sfeat = app.add_subcommand("synth-features", "Write Gaussian-blob features as a feature CSV");
  sfeat->add_option("--out", sf.out)->required();
  sfeat->add_option("--classes", sf.classes)->check(CLI::Range(2, 100000))->capture_default_str();
  sfeat->add_option("--per-class", sf.per_class)->check(CLI::Range(2, 100000))->capture_default_str();
  sfeat->add_option("--dim", sf.dim)->check(CLI::PositiveNumber)->capture_default_str();
  sfeat->add_option("--sigma", sf.sigma)->check(CLI::NonNegativeNumber)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (segment->parsed()) return cmd_segment(seg, g, out, err);
    if (extract->parsed()) return cmd_extract(ex, g, out, err);
    if (sweep->parsed()) return cmd_sweep(sw, g, out, err);
    if (rweights->parsed()) return cmd_random_weights(rw, g, out);
    if (shand->parsed()) return cmd_synth_hand(sh, g);
    if (sfeat->parsed()) return cmd_synth_features(sf, g);
  } catch (const std::exception& e) {
    err << "palmline " << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace palmline::cli
