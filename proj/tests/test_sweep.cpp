#include <doctest.h>

#include <cmath>
#include <numbers>
#include <map>
#include <set>
#include <sstream>

#include "palmline/dataset.hpp"
#include "palmline/error.hpp"
#include "palmline/preprocess.hpp"
#include "palmline/rng.hpp"
#include "palmline/sweep.hpp"
#include "palmline/synth.hpp"

using namespace palmline;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

std::string manifest_csv(std::size_t subjects, std::size_t per_subject) {
  std::string s = "subject_id,session_id,image_path\n";
  for (std::size_t i = 0; i < subjects; ++i)
    for (std::size_t j = 0; j < per_subject; ++j)
      s += "p" + std::to_string(i) + "," + (j < per_subject / 2 ? "1" : "2") + ",img/p" + std::to_string(i) + "_" +
           std::to_string(j) + ".jpg\n";
  return s;
}

std::size_t count_substr(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

// Nearest class mean, computed on the training rows only.
double nearest_centroid_accuracy(const FeatureTable& t, const Split& split) {
  const auto subjects = t.subjects();
  std::vector<std::vector<double>> mean(subjects.size(), std::vector<double>(t.dim, 0.0));
  std::vector<std::size_t> n(subjects.size(), 0);
  auto cls = [&](std::size_t row) {
    return static_cast<std::size_t>(std::find(subjects.begin(), subjects.end(), t.rows[row].subject_id) - subjects.begin());
  };
  for (std::size_t i : split.train) {
    const std::size_t c = cls(i);
    for (std::size_t d = 0; d < t.dim; ++d) mean[c][d] += t.rows[i].feature[d];
    ++n[c];
  }
  for (std::size_t c = 0; c < mean.size(); ++c)
    for (double& v : mean[c]) v /= static_cast<double>(n[c]);
  std::size_t correct = 0;
  for (std::size_t i : split.test) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < mean.size(); ++c) {
      double dist = 0.0;
      for (std::size_t d = 0; d < t.dim; ++d) dist += std::pow(t.rows[i].feature[d] - mean[c][d], 2);
      if (dist < best_d) best_d = dist, best = c;
    }
    correct += best == cls(i);
  }
  return static_cast<double>(correct) / static_cast<double>(split.test.size());
}

}  // namespace

TEST_CASE("manifest parsing") {
  const DatasetManifest small = load_manifest(manifest_csv(2, 2));
  CHECK(small.entries.size() == 4);
  CHECK(small.entries[3].image_path == "img/p1_1.jpg");
  CHECK(load_manifest(write_manifest_csv(small)).entries.size() == 4);

  CHECK(load_manifest(manifest_csv(200, 15)).entries.size() == 3000);

  std::string dup = manifest_csv(2, 2) + "p1,1,img/p0_0.jpg\n";
  CHECK(code_of([&] { load_manifest(dup); }) == ErrorCode::DuplicatePath);
  CHECK(code_of([] { load_manifest(manifest_csv(1, 4)); }) == ErrorCode::TooFewSubjects);
  CHECK(code_of([] { load_manifest("subject_id,session_id,image_path\na,1,x\na,1,y\nb,1,z\n"); }) ==
        ErrorCode::ClassTooSmall);
  CHECK(code_of([] { load_manifest("subject,session,path\n"); }) == ErrorCode::ParseError);
  try {
    load_manifest("subject_id,session_id,image_path\na,1,x\na,1\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("csv records with quotes") {
  CHECK(split_csv_record("a,\"b,c\",\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "d\"e"});
  CHECK(split_csv_record("x,,y") == std::vector<std::string>{"x", "", "y"});
}

TEST_CASE("feature CSV round-trips exactly") {
  FeatureTable t = synthesize_features(3, 4, 7, 0.3, 12);
  t.rows[0].feature[0] = 1e-38f;
  t.rows[1].feature[2] = -3.4028235e38f;
  t.rows[2].feature[6] = 0.1f;
  const FeatureTable back = parse_feature_csv(write_feature_csv(t));
  REQUIRE(back.rows.size() == t.rows.size());
  CHECK(back.dim == 7);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(back.rows[i].subject_id == t.rows[i].subject_id);
    CHECK(back.rows[i].image_id == t.rows[i].image_id);
    CHECK(back.rows[i].feature == t.rows[i].feature);
  }
  CHECK(write_feature_csv(back) == write_feature_csv(t));
  CHECK(code_of([] { parse_feature_csv("subject_id,image_id,f0\na,b,zz\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_feature_csv("subject_id,image_id,f0,f1\na,b,1\n"); }) == ErrorCode::ParseError);
}

TEST_CASE("train counts reproduce 2-of-15 and 14-of-15") {
  CHECK(train_count(15, 0.1) == 2);
  CHECK(train_count(15, 0.9) == 14);
  CHECK(train_count(15, 0.5) == 8);
  CHECK(train_count(2, 0.1) == 1);
  CHECK(train_count(2, 0.9) == 1);
  CHECK(train_count(10, 0.3) == 3);
}

TEST_CASE("stratified splits partition every class") {
  const FeatureTable t = synthesize_features(7, 15, 3, 0.1, 1);
  for (double ratio : default_ratios())
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Split s = stratified_split(t, ratio, seed);
      CHECK(std::is_sorted(s.train.begin(), s.train.end()));
      std::set<std::size_t> all(s.train.begin(), s.train.end());
      for (std::size_t i : s.test) CHECK(all.insert(i).second);
      CHECK(all.size() == t.rows.size());
      std::map<std::string, std::size_t> per;
      for (std::size_t i : s.train) ++per[t.rows[i].subject_id];
      for (const auto& [subject, n] : per) CHECK(n == train_count(15, ratio));
      CHECK(per.size() == 7);
    }
  const Split a = stratified_split(t, 0.1, 3);
  CHECK(a.train.size() == 7 * 2);
  CHECK(a.test.size() == 7 * 13);
  const Split b = stratified_split(t, 0.9, 3);
  CHECK(b.test.size() == 7);
  CHECK(stratified_split(t, 0.5, 3).train == stratified_split(t, 0.5, 3).train);
  CHECK(stratified_split(t, 0.5, 3).train != stratified_split(t, 0.5, 4).train);

  FeatureTable tiny = synthesize_features(2, 2, 3, 0.1, 1);
  tiny.rows.pop_back();
  CHECK(code_of([&] { stratified_split(tiny, 0.5, 0); }) == ErrorCode::ClassTooSmall);
}

TEST_CASE("ratio ranges") {
  const auto r = parse_ratio_range("0.1:0.9:0.1");
  REQUIRE(r.size() == 9);
  CHECK(r == default_ratios());
  CHECK(parse_ratio_range("0.5:0.5:0.1") == std::vector<double>{0.5});
  CHECK(code_of([] { parse_ratio_range("0.1:0.9"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_ratio_range("0.0:0.5:0.1"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_ratio_range("0.5:0.1:0.1"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_ratio_range("0.1:1.0:0.1"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sweep on well-separated blobs") {
  const FeatureTable t = synthesize_features(20, 15, 64, 0.05, 8);
  SweepConfig cfg;
  cfg.repeats = 3;
  const SweepReport r = run_sweep(t, cfg);
  REQUIRE(r.rows.size() == 9);
  for (const auto& row : r.rows) {
    CHECK(row.model == "synthetic");
    CHECK(row.layer == "blobs");
    CHECK(row.repeats == 3);
    CHECK(row.mean_accuracy >= 0.99);
  }
  CHECK(nearest_centroid_accuracy(t, stratified_split(t, 0.1, 0)) >= 0.99);
}

TEST_CASE("sweep statistics match a two-pass recomputation") {
  const FeatureTable t = synthesize_features(5, 8, 12, 0.9, 2);
  SweepConfig cfg;
  cfg.ratios = {0.3, 0.6};
  cfg.repeats = 4;
  cfg.base_seed = 77;
  const SweepReport r = run_sweep(t, cfg);
  REQUIRE(r.rows.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> acc;
    for (std::size_t rep = 0; rep < 4; ++rep) {
      const std::uint64_t seed = sweep_seed(77, k, rep);
      const Split s = stratified_split(t, cfg.ratios[k], seed);
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(seed, {1});
      acc.push_back(accuracy(train_sgd(gather(t, s.train), tc), gather(t, s.test)));
    }
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= 4.0;
    double var = 0.0;
    for (double a : acc) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / 3.0);
    CHECK(std::abs(r.rows[k].mean_accuracy - mean) <= 1e-12);
    CHECK(std::abs(r.rows[k].std_accuracy - sd) <= 1e-12);
  }
}

TEST_CASE("sweep output is deterministic across thread counts") {
  const FeatureTable t = synthesize_features(6, 10, 16, 0.5, 3);
  SweepConfig cfg;
  cfg.repeats = 3;
  cfg.base_seed = 5;
  const std::string one = emit_report_csv(run_sweep(t, cfg));
  cfg.threads = 4;
  CHECK(emit_report_csv(run_sweep(t, cfg)) == one);
  cfg.base_seed = 6;
  CHECK(emit_report_csv(run_sweep(t, cfg)) != one);
}

TEST_CASE("accuracy does not fall as training data grows") {
  for (double sigma : {0.1, 0.3}) {
    const FeatureTable t = synthesize_features(10, 15, 32, sigma, 4);
    SweepConfig cfg;
    cfg.ratios = {0.1, 0.9};
    cfg.repeats = 5;
    const SweepReport r = run_sweep(t, cfg);
    CHECK(r.rows[1].mean_accuracy >= r.rows[0].mean_accuracy - 0.02);
  }
}

TEST_CASE("report CSV and plot") {
  SweepReport one{{{"vgg16", "fc6", 0.5, 0.91234567, 0.0123456789, 10}}};
  const std::string csv = emit_report_csv(one);
  CHECK(csv == "model,layer,ratio,mean_accuracy,std_accuracy,repeats\nvgg16,fc6,0.5,0.912346,0.012346,10\n");
  const SweepReport back = parse_report_csv(csv);
  REQUIRE(back.rows.size() == 1);
  CHECK(std::abs(back.rows[0].mean_accuracy - std::round(0.91234567 * 1e6) / 1e6) <= 1e-9);
  CHECK(std::abs(back.rows[0].std_accuracy - std::round(0.0123456789 * 1e6) / 1e6) <= 1e-9);
  CHECK(std::abs(back.rows[0].ratio - 0.5) <= 1e-9);
  CHECK(back.rows[0].repeats == 10);

  SweepReport nine;
  for (double ratio : default_ratios()) nine.rows.push_back({"alexnet", "fc7", ratio, ratio, 0.01, 10});
  const std::string svg = emit_plot_svg(nine);
  CHECK(count_substr(svg, "<polyline") == 1);
  const auto pts_at = svg.find("points=\"");
  REQUIRE(pts_at != std::string::npos);
  const std::string pts = svg.substr(pts_at + 8, svg.find('"', pts_at + 8) - pts_at - 8);
  std::istringstream in(pts);
  std::string vertex;
  std::size_t vertices = 0;
  while (in >> vertex) ++vertices;
  CHECK(vertices == 9);

  SweepReport two = merge_reports({nine, one});
  CHECK(count_substr(emit_plot_svg(two), "<polyline") == 2);
  CHECK(two.rows.front().ratio == doctest::Approx(0.1));
  CHECK(two.rows[4].model == "alexnet");
  CHECK(two.rows[5].model == "vgg16");

  CHECK(code_of([] { emit_report_csv({}); }) == ErrorCode::EmptyReport);
  CHECK(code_of([] { emit_plot_svg({}); }) == ErrorCode::EmptyReport);
}

TEST_CASE("synthetic features") {
  const FeatureTable exact = synthesize_features(4, 5, 8, 0.0, 1);
  for (std::size_t i = 0; i < exact.rows.size(); ++i)
    CHECK(exact.rows[i].feature == exact.rows[i - i % 5].feature);
  CHECK(exact.subjects().size() == 4);
  CHECK(exact.rows[6].image_id == "s001_01");

  const FeatureTable t = synthesize_features(10, 30, 64, 0.05, 2);
  CHECK(nearest_centroid_accuracy(t, stratified_split(t, 0.5, 1)) >= 0.99);

  const FeatureTable again = synthesize_features(10, 30, 64, 0.05, 2);
  CHECK(write_feature_csv(again) == write_feature_csv(t));
}

TEST_CASE("synthetic hands") {
  constexpr double kDeg = std::numbers::pi / 180.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticHand h = synthesize_hand_image(seed);
    const double frac = static_cast<double>(h.mask.count()) / static_cast<double>(h.mask.bits.size());
    CHECK(frac > 0.05);
    CHECK(frac < 0.60);
    CHECK(std::abs(h.angle) <= 35 * kDeg + 1e-12);
  }
  HandSynthOptions opts;
  opts.angle = 25 * kDeg;
  const SyntheticHand h = synthesize_hand_image(4, opts);
  CHECK(std::abs(principal_angle(h.mask) - 25 * kDeg) <= 2 * kDeg);

  const SyntheticHand a = synthesize_hand_image(9), b = synthesize_hand_image(9);
  CHECK(a.image == b.image);
  CHECK(a.mask == b.mask);
  CHECK_FALSE(synthesize_hand_image(10).image == a.image);
}
