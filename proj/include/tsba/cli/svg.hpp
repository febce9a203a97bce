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

#include "tsba/core/fs.hpp"
#include "tsba/data/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace tsba {

struct PlotSeries {
  std::string name;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

namespace detail {
inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fixed(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::fixed << v;
  return os.str();
}
}  // namespace detail

// Minimal SVG line chart. An optional heat strip (values in [0, 1], resampled
// to the x axis) is drawn under the plot area.
inline std::string svg_line_plot(const std::string& title, const std::vector<PlotSeries>& series,
                                 const std::vector<double>& strip = {}) {
  const double W = 640, H = 320, left = 50, right = 20, top = 30;
  const double bottom = strip.empty() ? 30 : 60;
  const double pw = W - left - right, ph = H - top - bottom;
  double lo = INFINITY, hi = -INFINITY;
  std::size_t n = 0;
  for (const auto& s : series) {
    for (double v : s.y) lo = std::min(lo, v), hi = std::max(hi, v);
    n = std::max(n, s.y.size());
  }
  if (!(hi > lo)) hi = lo + 1;
  auto xpos = [&](std::size_t i, std::size_t len) {
    return left + (len > 1 ? pw * static_cast<double>(i) / static_cast<double>(len - 1) : 0.0);
  };
  auto ypos = [&](double v) { return top + ph * (1 - (v - lo) / (hi - lo)); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << detail::xml_escape(title)
     << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  os << "<text x=\"4\" y=\"" << top + 10 << "\" font-family=\"sans-serif\" font-size=\"10\">" << detail::fixed(hi)
     << "</text>\n";
  os << "<text x=\"4\" y=\"" << top + ph << "\" font-family=\"sans-serif\" font-size=\"10\">" << detail::fixed(lo)
     << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i)
      os << detail::fixed(xpos(i, s.y.size())) << ',' << detail::fixed(ypos(s.y[i])) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - right - 150 << "\" y=\"" << top + 14 + 14 * static_cast<double>(k)
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << s.color << "\">" << detail::xml_escape(s.name)
       << "</text>\n";
  }
  if (!strip.empty()) {
    const double sy = top + ph + 8, sh = 20, cw = pw / static_cast<double>(strip.size());
    for (std::size_t i = 0; i < strip.size(); ++i) {
      const double v = std::clamp(strip[i], 0.0, 1.0);
      const int r = static_cast<int>(std::lround(255 * v)), b = static_cast<int>(std::lround(255 * (1 - v)));
      os << "<rect x=\"" << detail::fixed(left + cw * static_cast<double>(i)) << "\" y=\"" << sy << "\" width=\""
         << detail::fixed(cw + 0.5) << "\" height=\"" << sh << "\" fill=\"rgb(" << r << ",64," << b << ")\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

// File-name-safe form of a sample id: anything outside [A-Za-z0-9._-] becomes '_'.
inline std::string sanitize_id(const std::string& id) {
  std::string out = id;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) c = '_';
  return out;
}

}  // namespace tsba
