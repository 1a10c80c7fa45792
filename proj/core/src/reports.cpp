/* Copyright 2026 The featlock Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "featlock/reports.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "featlock/errors.hpp"

namespace featlock {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write on " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string attack_table_svg(const std::vector<AttackSuiteResult>& rows, const std::string& title) {
  constexpr int kGroup = 90, kBar = 22, kLeft = 50, kTop = 40, kPlot = 220;
  const int width = kLeft + static_cast<int>(rows.size()) * kGroup + 140;
  const int height = kTop + kPlot + 50;
  static constexpr std::array<const char*, 3> kColors = {"#2b6cb0", "#c05621", "#718096"};
  static constexpr std::array<const char*, 3> kNames = {"Correct", "Plain", "Incorrect (mean)"};

  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = kTop + kPlot - kPlot * t / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#e2e8f0\"/>"
                  "<text x=\"%d\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n",
                  kLeft, y, width - 140, y, kLeft - 6, y + 4, t / 4.0);
    svg << buf;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::array<double, 3> values = {r.correct_map, r.plain_map, r.incorrect_map_mean};
    const int x0 = kLeft + static_cast<int>(i) * kGroup + 10;
    for (std::size_t k = 0; k < 3; ++k) {
      const double h = std::clamp(values[k], 0.0, 1.0) * kPlot;
      std::snprintf(buf, sizeof(buf), "<rect x=\"%d\" y=\"%.1f\" width=\"%d\" height=\"%.1f\" fill=\"%s\"/>\n",
                    x0 + static_cast<int>(k) * kBar, kTop + kPlot - h, kBar - 2, h, kColors[k]);
      svg << buf;
    }
    std::string label = r.method == "shf" ? "M=" + std::to_string(r.block_size)
                        : r.method == "baseline" ? "baseline"
                                                 : "site " + std::to_string(r.site);
    svg << "<text x=\"" << x0 + kBar * 3 / 2 << "\" y=\"" << kTop + kPlot + 16 << "\" text-anchor=\"middle\">" << label
        << "</text>\n";
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const int y = kTop + 10 + static_cast<int>(k) * 18;
    svg << "<rect x=\"" << width - 130 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\"" << kColors[k]
        << "\"/><text x=\"" << width - 115 << "\" y=\"" << y << "\">" << kNames[k] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

Image draw_detections(const Image& img, const std::vector<Detection>& detections) {
  static constexpr std::array<std::array<float, 3>, 6> kPalette = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                                                    {1, 1, 0}, {1, 0, 1}, {0, 1, 1}}};
  Image out = img;
  const auto H = static_cast<long>(img.height()), W = static_cast<long>(img.width());
  for (const auto& d : detections) {
    const auto& color = kPalette[static_cast<std::size_t>(d.label) % kPalette.size()];
    const long x0 = std::clamp(static_cast<long>(std::floor(d.box.xmin * W)), 0L, W - 1);
    const long x1 = std::clamp(static_cast<long>(std::ceil(d.box.xmax * W)) - 1, 0L, W - 1);
    const long y0 = std::clamp(static_cast<long>(std::floor(d.box.ymin * H)), 0L, H - 1);
    const long y1 = std::clamp(static_cast<long>(std::ceil(d.box.ymax * H)) - 1, 0L, H - 1);
    auto paint = [&](long y, long x) {
      for (std::size_t ch = 0; ch < std::min<std::size_t>(3, out.channels()); ++ch) out.at(ch, y, x) = color[ch];
    };
    for (long x = x0; x <= x1; ++x) {
      paint(y0, x);
      paint(y1, x);
    }
    for (long y = y0; y <= y1; ++y) {
      paint(y, x0);
      paint(y, x1);
    }
  }
  return out;
}

}  // namespace featlock
