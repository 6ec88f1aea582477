#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "evcharge/matrix.hpp"

namespace evcharge {

// Linear ramp from white (0) to dark blue (max cell).
inline std::string ramp_color(double v, double max) {
  auto const t = max > 0.0 ? std::clamp(v / max, 0.0, 1.0) : 0.0;
  auto const mix = [&](int lo, int hi) {
    return static_cast<int>(std::lround(lo + (hi - lo) * t));
  };
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", mix(255, 8), mix(255, 48),
                mix(255, 107));
  return buf;
}

// Self-contained SVG heatmap: arrival hour on the x axis, duration bin on
// the y axis (0 h at the top).
inline std::string heatmap_svg(charging_matrix const& m, std::string const& title) {
  constexpr int kCell = 16, kLeft = 48, kTop = 36;
  constexpr int kSize = static_cast<int>(charging_matrix::kDim) * kCell;
  double max = 0.0;
  for (auto const v : m.cells()) {
    max = std::max(max, v);
  }

  std::string out;
  char buf[256];
  auto const emit = [&](int n) { out.append(buf, static_cast<std::size_t>(n)); };
  emit(std::snprintf(
      buf, sizeof(buf),
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
      "font-family=\"sans-serif\" font-size=\"10\">\n",
      kLeft + kSize + 16, kTop + kSize + 40));
  std::string escaped;
  for (char const c : title) {
    switch (c) {
      case '<': escaped += "&lt;"; break;
      case '>': escaped += "&gt;"; break;
      case '&': escaped += "&amp;"; break;
      default: escaped.push_back(c);
    }
  }
  out += "<text x=\"" + std::to_string(kLeft) + "\" y=\"14\" font-size=\"12\">" +
         escaped + "</text>\n";
  for (std::size_t i = 0; i < charging_matrix::kDim; ++i) {
    for (std::size_t j = 0; j < charging_matrix::kDim; ++j) {
      auto const v = m(i, j);
      emit(std::snprintf(buf, sizeof(buf),
                         "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                         "fill=\"%s\"><title>%zu h, %zu h: %.6g</title></rect>\n",
                         kLeft + static_cast<int>(i) * kCell,
                         kTop + static_cast<int>(j) * kCell, kCell, kCell,
                         ramp_color(v, max).c_str(), i, j, v));
    }
  }
  for (int h = 0; h < 24; h += 2) {
    emit(std::snprintf(buf, sizeof(buf),
                       "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%d</text>\n",
                       kLeft + h * kCell + kCell / 2, kTop + kSize + 12, h));
    emit(std::snprintf(buf, sizeof(buf),
                       "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%d</text>\n",
                       kLeft - 4, kTop + h * kCell + kCell / 2 + 4, h));
  }
  emit(std::snprintf(buf, sizeof(buf),
                     "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">arrival hour"
                     "</text>\n",
                     kLeft + kSize / 2, kTop + kSize + 28));
  emit(std::snprintf(buf, sizeof(buf),
                     "<text x=\"12\" y=\"%d\" transform=\"rotate(-90 12 %d)\" "
                     "text-anchor=\"middle\">duration (h)</text>\n",
                     kTop + kSize / 2, kTop + kSize / 2));
  emit(std::snprintf(buf, sizeof(buf),
                     "<text x=\"%d\" y=\"28\" text-anchor=\"end\">max %.4g</text>\n",
                     kLeft + kSize, max));
  out += "</svg>\n";
  return out;
}

}  // namespace evcharge
