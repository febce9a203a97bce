// Copyright 2026 The tsbalab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "tsba/data/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tsba {

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\n')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view token, double& out) {
  token = trim(token);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string file_stem(const std::filesystem::path& p) { return p.stem().string(); }

// Maps raw label tokens to contiguous ids ordered by ascending numeric value
// (lexicographic when any token is non-numeric).
struct LabelMap {
  std::vector<std::string> ordered;
  std::map<std::string, int> index;

  static LabelMap build(const std::vector<std::string>& raw) {
    LabelMap m;
    std::vector<std::string> uniq(raw.begin(), raw.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    bool numeric = std::all_of(uniq.begin(), uniq.end(), [](const std::string& s) {
      double v;
      return parse_double(s, v);
    });
    if (numeric) {
      std::stable_sort(uniq.begin(), uniq.end(), [](const std::string& a, const std::string& b) {
        double x = 0, y = 0;
        parse_double(a, x);
        parse_double(b, y);
        return x < y;
      });
    }
    m.ordered = uniq;
    for (std::size_t i = 0; i < uniq.size(); ++i) m.index[uniq[i]] = static_cast<int>(i);
    return m;
  }
};

inline std::string canonical_label(std::string_view token) {
  double v;
  if (parse_double(token, v)) return format_double(v);
  return std::string(trim(token));
}

}  // namespace detail

// UCR classic layout: one sample per line, label first, tab separated.
inline Dataset parse_univariate_tsv(std::istream& in, std::string name) {
  std::vector<std::string> raw_labels;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    auto fields = detail::split(view, '\t');
    if (fields.size() < 2) throw ParseError("expected label and at least one value", line_no);
    double probe;
    if (!detail::parse_double(fields[0], probe) && detail::trim(fields[0]).empty())
      throw ParseError("empty label", line_no);
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v;
      if (!detail::parse_double(fields[i], v))
        throw ParseError("malformed value '" + std::string(fields[i]) + "' in column " + std::to_string(i + 1),
                         line_no);
      values.push_back(v);
    }
    if (rows.empty()) {
      expected = values.size();
    } else if (values.size() != expected) {
      throw ShapeError("line " + std::to_string(line_no) + " has " + std::to_string(values.size()) +
                       " values, expected " + std::to_string(expected));
    }
    raw_labels.push_back(detail::canonical_label(fields[0]));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw EmptyDatasetError("no samples in '" + name + "'");
  if (expected < 2) throw ShapeError("series length must be at least 2");

  auto labels = detail::LabelMap::build(raw_labels);
  Dataset ds;
  ds.name = std::move(name);
  ds.num_classes = static_cast<int>(labels.ordered.size());
  ds.class_labels = labels.ordered;
  ds.length = static_cast<Index>(expected);
  ds.variables = 1;
  ds.samples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    TimeSeriesSample s;
    s.values = Eigen::Map<const MatrixD>(rows[i].data(), ds.length, 1);
    s.label = labels.index.at(raw_labels[i]);
    s.sample_id = ds.name + "#" + std::to_string(i);
    s.valid_length = ds.length;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

inline Dataset load_univariate_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_univariate_tsv(in, detail::file_stem(path));
}

inline void write_univariate_tsv(const Dataset& ds, std::ostream& out) {
  if (ds.variables != 1) throw ShapeError("univariate writer needs D=1");
  for (const auto& s : ds.samples) {
    out << ds.class_labels.at(static_cast<std::size_t>(s.label));
    for (Index t = 0; t < s.valid_length; ++t) out << '\t' << detail::format_double(s.values(t, 0));
    out << '\n';
  }
}

inline void write_univariate_tsv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_univariate_tsv(ds, out);
}

// One row per timestep, one column per variable.
inline MatrixD read_values_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing values file '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    std::vector<double> row;
    for (auto field : detail::split(view, ',')) {
      double v;
      if (!detail::parse_double(field, v))
        throw ParseError("malformed value '" + std::string(field) + "' in " + path.string(), line_no);
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ShapeError(path.string() + ": inconsistent column count at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyDatasetError("values file '" + path.string() + "' is empty");
  MatrixD m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t d = 0; d < rows[t].size(); ++d) m(static_cast<Index>(t), static_cast<Index>(d)) = rows[t][d];
  return m;
}

inline void write_values_csv(const MatrixD& values, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (Index t = 0; t < values.rows(); ++t) {
    for (Index d = 0; d < values.cols(); ++d) {
      if (d) out << ',';
      out << detail::format_double(values(t, d));
    }
    out << '\n';
  }
}

// Manifest: {"name": str, "num_classes": int, "samples": [{"label": str|num, "values_file": path}]}.
// Value file paths are resolved relative to the manifest. Shorter samples are
// zero padded at the tail to the longest one.
inline Dataset load_multivariate(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest '" + manifest_path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what(), 0);
  }
  const auto base = manifest_path.parent_path();
  const auto& entries = doc.at("samples");
  if (entries.empty()) throw EmptyDatasetError("manifest lists no samples");

  std::vector<std::string> raw_labels;
  std::vector<MatrixD> raw_values;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto& lab = e.at("label");
    raw_labels.push_back(lab.is_string() ? detail::canonical_label(lab.get<std::string>())
                                         : detail::format_double(lab.get<double>()));
    raw_values.push_back(read_values_csv(base / e.at("values_file").get<std::string>()));
    ids.push_back(e.contains("id") ? e["id"].get<std::string>() : std::to_string(i));
    if (raw_values.back().cols() != raw_values.front().cols())
      throw ShapeError("sample " + std::to_string(i) + " has " + std::to_string(raw_values.back().cols()) +
                       " variables, expected " + std::to_string(raw_values.front().cols()));
  }
  auto labels = detail::LabelMap::build(raw_labels);
  Dataset ds;
  ds.name = doc.value("name", detail::file_stem(manifest_path));
  ds.num_classes = static_cast<int>(labels.ordered.size());
  if (doc.contains("num_classes") && doc["num_classes"].get<int>() != ds.num_classes)
    throw ShapeError("manifest declares " + std::to_string(doc["num_classes"].get<int>()) + " classes, found " +
                     std::to_string(ds.num_classes));
  ds.class_labels = labels.ordered;
  ds.variables = raw_values.front().cols();
  ds.length = 0;
  for (const auto& v : raw_values) ds.length = std::max(ds.length, v.rows());
  for (std::size_t i = 0; i < raw_values.size(); ++i) {
    TimeSeriesSample s;
    s.valid_length = raw_values[i].rows();
    s.values = MatrixD::Zero(ds.length, ds.variables);
    s.values.topRows(s.valid_length) = raw_values[i];
    s.label = labels.index.at(raw_labels[i]);
    s.sample_id = ds.name + "#" + ids[i];
    ds.samples.push_back(std::move(s));
  }
  validate(ds);
  return ds;
}

// Valid (unpadded) region of a sample.
inline MatrixD crop_valid(const TimeSeriesSample& s) { return s.values.topRows(s.valid_length); }

}  // namespace tsba
