#include "palmline/dataset.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "palmline/error.hpp"

namespace palmline {

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  if (quoted) fail(ErrorCode::ParseError, "unterminated quote");
  return fields;
}

namespace {

// Calls fn(line_number, line) for each non-empty line, CR stripped.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    fn(line_no, line);
  }
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void append_float(std::string& out, float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

DatasetManifest load_manifest(std::string_view csv) {
  DatasetManifest manifest;
  bool header = true;
  std::set<std::string> paths;
  for_each_line(csv, [&](std::size_t line_no, std::string_view line) {
    std::vector<std::string> f;
    try {
      f = split_csv_record(line);
    } catch (const Error& e) {
      parse_error(line_no, e.what());
    }
    if (header) {
      if (f != std::vector<std::string>{"subject_id", "session_id", "image_path"})
        parse_error(line_no, "expected header subject_id,session_id,image_path");
      header = false;
      return;
    }
    if (f.size() != 3) parse_error(line_no, "expected 3 fields, got " + std::to_string(f.size()));
    if (f[0].empty() || f[2].empty()) parse_error(line_no, "empty subject_id or image_path");
    if (!paths.insert(f[2]).second) fail(ErrorCode::DuplicatePath, "line " + std::to_string(line_no) + ": " + f[2]);
    manifest.entries.push_back({std::move(f[0]), std::move(f[1]), std::move(f[2])});
  });
  if (header) parse_error(1, "missing header");
  std::map<std::string, std::size_t> per_subject;
  for (const auto& e : manifest.entries) ++per_subject[e.subject_id];
  if (per_subject.size() < 2)
    fail(ErrorCode::TooFewSubjects, "manifest has " + std::to_string(per_subject.size()) + " subject(s), need 2");
  for (const auto& [subject, count] : per_subject)
    if (count < 2) fail(ErrorCode::ClassTooSmall, "subject " + subject + " has a single image");
  return manifest;
}

std::string write_manifest_csv(const DatasetManifest& manifest) {
  std::string out = "subject_id,session_id,image_path\n";
  for (const auto& e : manifest.entries)
    out += quote_if_needed(e.subject_id) + "," + quote_if_needed(e.session_id) + "," +
           quote_if_needed(e.image_path) + "\n";
  return out;
}

void FeatureTable::validate() const {
  for (const auto& r : rows) {
    if (r.feature.size() != dim)
      fail(ErrorCode::DimensionMismatch, r.image_id + " has " + std::to_string(r.feature.size()) +
                                             " features, table dim " + std::to_string(dim));
    for (float v : r.feature)
      if (!std::isfinite(v)) fail(ErrorCode::NonFiniteInput, r.image_id + " has a non-finite feature");
  }
}

std::vector<std::string> FeatureTable::subjects() const {
  std::vector<std::string> out;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& r : rows)
    if (seen.emplace(r.subject_id, out.size()).second) out.push_back(r.subject_id);
  return out;
}

std::string write_feature_csv(const FeatureTable& table) {
  std::string out = "subject_id,image_id";
  for (std::size_t k = 0; k < table.dim; ++k) out += ",f" + std::to_string(k);
  out += '\n';
  for (const auto& r : table.rows) {
    out += quote_if_needed(r.subject_id);
    out += ',';
    out += quote_if_needed(r.image_id);
    for (float v : r.feature) {
      out += ',';
      append_float(out, v);
    }
    out += '\n';
  }
  return out;
}

FeatureTable parse_feature_csv(std::string_view csv) {
  FeatureTable table;
  bool header = true;
  for_each_line(csv, [&](std::size_t line_no, std::string_view line) {
    std::vector<std::string> f;
    try {
      f = split_csv_record(line);
    } catch (const Error& e) {
      parse_error(line_no, e.what());
    }
    if (header) {
      if (f.size() < 3 || f[0] != "subject_id" || f[1] != "image_id")
        parse_error(line_no, "expected header subject_id,image_id,f0,...");
      for (std::size_t k = 2; k < f.size(); ++k)
        if (f[k] != "f" + std::to_string(k - 2)) parse_error(line_no, "unexpected column '" + f[k] + "'");
      table.dim = f.size() - 2;
      header = false;
      return;
    }
    if (f.size() != table.dim + 2)
      parse_error(line_no, "expected " + std::to_string(table.dim + 2) + " fields, got " + std::to_string(f.size()));
    FeatureRow row{std::move(f[0]), std::move(f[1]), std::vector<float>(table.dim)};
    for (std::size_t k = 0; k < table.dim; ++k) {
      const std::string& s = f[k + 2];
      float v = 0.0f;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
        parse_error(line_no, "bad number '" + s + "' in column f" + std::to_string(k));
      row.feature[k] = v;
    }
    table.rows.push_back(std::move(row));
  });
  if (header) parse_error(1, "missing header");
  return table;
}

}  // namespace palmline
