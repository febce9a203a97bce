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

#include "tsba/core/error.hpp"
#include "tsba/data/io.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace tsba {

// "key = value" lines; '#' starts a comment; keys are dotted paths.
// Reads are recorded so unknown keys can be reported after validation.
class FlatConfig {
 public:
  static FlatConfig parse(std::istream& in, std::filesystem::path base = {}) {
    FlatConfig c;
    c.base_ = std::move(base);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::string_view s = detail::trim(line);
      if (s.empty()) continue;
      auto eq = s.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", no);
      std::string key(detail::trim(s.substr(0, eq)));
      std::string value(detail::trim(s.substr(eq + 1)));
      if (key.empty()) throw ParseError("empty key", no);
      if (c.values_.count(key)) throw ParseError("duplicate key '" + key + "'", no);
      c.values_[key] = value;
    }
    return c;
  }

  static FlatConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
      return parse(in, path.parent_path());
    } catch (const ParseError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string str(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double num(const std::string& key, double fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    double v;
    if (!detail::parse_double(it->second, v)) throw ConfigError("'" + key + "' is not a number: " + it->second);
    return v;
  }

  long long integer(const std::string& key, long long fallback) const {
    const double v = num(key, static_cast<double>(fallback));
    if (v != std::floor(v)) throw ConfigError("'" + key + "' must be an integer");
    return static_cast<long long>(v);
  }

  bool flag(const std::string& key, bool fallback) const {
    const std::string v = str(key, fallback ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("'" + key + "' must be true or false");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    for (auto part : detail::split(str(key, ""), ',')) {
      auto t = detail::trim(part);
      if (!t.empty()) out.emplace_back(t);
    }
    return out;
  }

  // Paths are relative to the config file's directory.
  std::filesystem::path path(const std::string& key) const {
    std::filesystem::path p = str(key, "");
    if (p.empty() || p.is_absolute()) return p;
    return base_ / p;
  }

  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::filesystem::path& base() const { return base_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::filesystem::path base_;
};

}  // namespace tsba
