#pragma once

// Standalone SVG reliability diagram: per-bin accuracy against mean
// confidence on [0,1]^2 with the dashed identity diagonal. Output is
// deterministic; nothing in it depends on the clock.

#include <cstdio>
#include <string>
#include <vector>

#include "seqcal/metrics.hpp"

namespace seqcal {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

inline std::string reliability_diagram_svg(const std::vector<ReliabilityBin>& bins,
                                           const std::string& title = "") {
  const double size = 480.0;
  const double margin = 48.0;
  const double plot = size - 2.0 * margin;
  auto x = [&](double v) { return margin + v * plot; };
  auto y = [&](double v) { return size - margin - v * plot; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" "
         "viewBox=\"0 0 480 480\">\n";
  svg += "<rect width=\"480\" height=\"480\" fill=\"white\"/>\n";

  // axes with ticks at 0, 0.25, ..., 1
  svg += "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">\n";
  svg += "<rect x=\"" + detail::svg_num(margin) + "\" y=\"" + detail::svg_num(margin) +
         "\" width=\"" + detail::svg_num(plot) + "\" height=\"" + detail::svg_num(plot) + "\"/>\n";
  svg += "</g>\n";
  svg += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    svg += "<text x=\"" + detail::svg_num(x(v) - 8) + "\" y=\"" + detail::svg_num(size - margin + 16) +
           "\">" + detail::svg_num(v) + "</text>\n";
    svg += "<text x=\"" + detail::svg_num(margin - 34) + "\" y=\"" + detail::svg_num(y(v) + 4) +
           "\">" + detail::svg_num(v) + "</text>\n";
  }
  svg += "<text x=\"" + detail::svg_num(size / 2 - 34) + "\" y=\"" + detail::svg_num(size - 10) +
         "\">confidence</text>\n";
  svg += "<text x=\"14\" y=\"" + detail::svg_num(size / 2 + 30) +
         "\" transform=\"rotate(-90 14 " + detail::svg_num(size / 2 + 30) + ")\">accuracy</text>\n";
  if (!title.empty())
    svg += "<text x=\"" + detail::svg_num(margin) + "\" y=\"24\" font-size=\"14\">" + title +
           "</text>\n";
  svg += "</g>\n";

  // identity diagonal
  svg += "<line x1=\"" + detail::svg_num(x(0)) + "\" y1=\"" + detail::svg_num(y(0)) + "\" x2=\"" +
         detail::svg_num(x(1)) + "\" y2=\"" + detail::svg_num(y(1)) +
         "\" stroke=\"#888\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";

  // per-bin accuracy curve over occupied bins
  std::string points;
  for (const auto& bin : bins) {
    if (bin.count == 0) continue;
    if (!points.empty()) points += " ";
    points += detail::svg_num(x(bin.confidence)) + "," + detail::svg_num(y(bin.accuracy));
  }
  if (!points.empty()) {
    svg += "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"" + points +
           "\"/>\n";
    for (const auto& bin : bins) {
      if (bin.count == 0) continue;
      svg += "<circle cx=\"" + detail::svg_num(x(bin.confidence)) + "\" cy=\"" +
             detail::svg_num(y(bin.accuracy)) + "\" r=\"3\" fill=\"#1f6fb2\"/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace seqcal
