#include "palmline/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <unordered_map>

#include "palmline/error.hpp"
#include "palmline/parallel.hpp"
#include "palmline/rng.hpp"

namespace palmline {

std::size_t train_count(std::size_t class_size, double ratio) {
  if (class_size < 2) fail(ErrorCode::ClassTooSmall, "class has " + std::to_string(class_size) + " rows, need 2");
  // The epsilon absorbs representation error such as 0.7 * 15 = 10.4999...
  const double raw = std::floor(ratio * static_cast<double>(class_size) + 0.5 + 1e-9);
  const auto k = static_cast<std::size_t>(std::max(raw, 0.0));
  return std::clamp<std::size_t>(k, 1, class_size - 1);
}

namespace {

std::vector<std::vector<std::size_t>> rows_by_class(const FeatureTable& table) {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto [it, inserted] = index.emplace(table.rows[i].subject_id, classes.size());
    if (inserted) classes.emplace_back();
    classes[it->second].push_back(i);
  }
  return classes;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

Split stratified_split(const FeatureTable& table, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorCode::InvalidArgument, "split ratio must be in (0, 1)");
  Rng rng(seed);
  Split split;
  const auto classes = rows_by_class(table);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<std::size_t> rows = classes[c];
    if (rows.size() < 2)
      fail(ErrorCode::ClassTooSmall, "subject " + table.rows[rows[0]].subject_id + " has a single row");
    const std::size_t k = train_count(rows.size(), ratio);
    std::shuffle(rows.begin(), rows.end(), rng);
    split.train.insert(split.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
    split.test.insert(split.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

LabeledFeatures gather(const FeatureTable& table, const std::vector<std::size_t>& indices) {
  const auto subjects = table.subjects();
  std::unordered_map<std::string, std::size_t> label;
  for (std::size_t c = 0; c < subjects.size(); ++c) label.emplace(subjects[c], c);
  LabeledFeatures out;
  out.dim = table.dim;
  out.classes = subjects.size();
  out.vectors.reserve(indices.size() * table.dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const FeatureRow& r = table.rows.at(i);
    out.vectors.insert(out.vectors.end(), r.feature.begin(), r.feature.end());
    out.labels.push_back(label.at(r.subject_id));
  }
  return out;
}

std::vector<double> default_ratios() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

std::vector<double> parse_ratio_range(std::string_view spec) {
  double parts[3];
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? spec.find(':', pos) : spec.size();
    if (end == std::string_view::npos)
      fail(ErrorCode::InvalidArgument, "ratio range must be start:stop:step, got '" + std::string(spec) + "'");
    const std::string_view tok = spec.substr(pos, end - pos);
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), parts[i]);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
      fail(ErrorCode::InvalidArgument, "bad number '" + std::string(tok) + "' in ratio range");
    pos = end + 1;
  }
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0.0) || !(start > 0.0) || !(stop < 1.0) || start > stop + 1e-9)
    fail(ErrorCode::InvalidArgument, "ratio range needs 0 < start <= stop < 1 and step > 0");
  std::vector<double> ratios;
  for (std::size_t i = 0;; ++i) {
    const double r = start + static_cast<double>(i) * step;
    if (r > stop + 1e-9) break;
    ratios.push_back(std::round(r * 1e9) / 1e9);
  }
  return ratios;
}

std::uint64_t sweep_seed(std::uint64_t base_seed, std::size_t ratio_index, std::size_t repeat) {
  return derive_seed(base_seed, {ratio_index, repeat});
}

SweepReport run_sweep(const FeatureTable& table, const SweepConfig& config) {
  if (config.repeats == 0) fail(ErrorCode::InvalidArgument, "repeats must be >= 1");
  if (config.ratios.empty()) fail(ErrorCode::InvalidArgument, "no ratios to sweep");
  table.validate();
  const std::size_t jobs = config.ratios.size() * config.repeats;
  std::vector<double> acc(jobs);
  parallel_for(jobs, std::max(1u, config.threads), [&](std::size_t job) {
    const std::size_t ri = job / config.repeats, rep = job % config.repeats;
    const std::uint64_t seed = sweep_seed(config.base_seed, ri, rep);
    const Split split = stratified_split(table, config.ratios[ri], seed);
    TrainConfig tc = config.train;
    tc.seed = derive_seed(seed, {1});
    tc.threads = 1;
    const SvmModel model = train_sgd(gather(table, split.train), tc);
    acc[job] = accuracy(model, gather(table, split.test));
  });
  SweepReport report;
  for (std::size_t ri = 0; ri < config.ratios.size(); ++ri) {
    const double* a = acc.data() + ri * config.repeats;
    const double n = static_cast<double>(config.repeats);
    const double mean = std::accumulate(a, a + config.repeats, 0.0) / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < config.repeats; ++r) ss += (a[r] - mean) * (a[r] - mean);
    const double sd = config.repeats > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    report.rows.push_back({table.model_kind, table.layer, config.ratios[ri], mean, sd, config.repeats});
  }
  return report;
}

SweepReport merge_reports(const std::vector<SweepReport>& reports) {
  SweepReport out;
  for (const auto& r : reports) out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    const long ra = std::lround(a.ratio * 1e9), rb = std::lround(b.ratio * 1e9);
    if (ra != rb) return ra < rb;
    if (a.model != b.model) return a.model < b.model;
    return a.layer < b.layer;
  });
  return out;
}

std::string emit_report_csv(const SweepReport& report) {
  if (report.rows.empty()) fail(ErrorCode::EmptyReport, "report has no rows");
  std::string out = "model,layer,ratio,mean_accuracy,std_accuracy,repeats\n";
  char buf[128];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, ",%.1f,%.6f,%.6f,%zu\n", r.ratio, r.mean_accuracy, r.std_accuracy, r.repeats);
    out += r.model + "," + r.layer + buf;
  }
  return out;
}

SweepReport parse_report_csv(std::string_view csv) {
  SweepReport report;
  std::size_t line_no = 0;
  bool header = true;
  while (!csv.empty()) {
    const std::size_t nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_record(line);
    if (header) {
      if (f != std::vector<std::string>{"model", "layer", "ratio", "mean_accuracy", "std_accuracy", "repeats"})
        fail(ErrorCode::ParseError, "line 1: unexpected report header");
      header = false;
      continue;
    }
    if (f.size() != 6) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 6 fields");
    SweepRow row{f[0], f[1]};
    double* targets[] = {&row.ratio, &row.mean_accuracy, &row.std_accuracy};
    for (int k = 0; k < 3; ++k) {
      const std::string& s = f[2 + k];
      auto res = std::from_chars(s.data(), s.data() + s.size(), *targets[k]);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    auto res = std::from_chars(f[5].data(), f[5].data() + f[5].size(), row.repeats);
    if (res.ec != std::errc{} || res.ptr != f[5].data() + f[5].size())
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad repeats '" + f[5] + "'");
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string emit_plot_svg(const SweepReport& report) {
  if (report.rows.empty()) fail(ErrorCode::EmptyReport, "report has no rows");
  constexpr double width = 640, height = 420, left = 60, right = 160, top = 20, bottom = 50;
  constexpr double pw = width - left - right, ph = height - top - bottom;
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>> series;
  for (const auto& r : report.rows) series[{r.model, r.layer}].push_back({r.ratio, r.mean_accuracy});

  auto sx = [&](double ratio) { return left + ratio * pw; };
  auto sy = [&](double acc) { return top + (1.0 - acc) * ph; };
  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\" font-family=\"sans-serif\" font-size=\"12\">\n",
                width, height, width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, pw, ph);
  svg += buf;
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.1f</text>\n",
                  left, sy(v), left + pw, sy(v), left - 6, sy(v) + 4, v);
    svg += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.1f</text>\n", sx(v),
                  top + ph + 16, v);
    svg += buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">training ratio</text>\n"
                "<text x=\"14\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 14 %.1f)\">mean accuracy</text>\n",
                left + pw / 2, height - 12, top + ph / 2, top + ph / 2);
  svg += buf;
  std::size_t index = 0;
  for (auto& [key, points] : series) {
    std::sort(points.begin(), points.end());
    const char* color = colors[index % std::size(colors)];
    std::string pts;
    for (const auto& [ratio, acc] : points) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", pts.empty() ? "" : " ", sx(ratio), sy(acc));
      pts += buf;
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    const double ly = top + 16 + 18 * static_cast<double>(index);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\">",
                  left + pw + 12, ly, left + pw + 32, ly, color, left + pw + 38, ly + 4);
    svg += buf;
    svg += xml_escape(key.first + " " + key.second) + "</text>\n";
    ++index;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace palmline
