// Copyright 2026 The forgetlab Authors. All Rights Reserved.
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

#include "forgetlab/svg_plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>

#include "forgetlab/errors.h"

namespace forgetlab {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;  // room for the legend
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b"};

std::string Fixed(double value, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

std::string Escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Range {
  double lo;
  double hi;
};

Range Padded(double lo, double hi) {
  if (hi <= lo) {
    const double pad = std::max(std::abs(lo) * 0.05, 0.5);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string AxisLabel(Projection projection, bool x_axis) {
  if (projection == Projection::kRetFt) {
    return x_axis ? "L_ret (retained post-training loss)"
                  : "L_ft (fine-tuning loss)";
  }
  return x_axis ? "L_pre (retained pretraining loss)"
                : "L_ret (retained post-training loss)";
}

std::string RenderFrontierSvg(Projection projection,
                              const std::vector<MethodSeries>& series) {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -x_lo;
  double y_lo = x_lo;
  double y_hi = -x_lo;
  size_t total = 0;
  for (const MethodSeries& s : series) {
    for (const FrontierPoint& p : s.points) {
      x_lo = std::min(x_lo, p.x);
      x_hi = std::max(x_hi, p.x);
      y_lo = std::min(y_lo, p.y);
      y_hi = std::max(y_hi, p.y);
      ++total;
    }
  }
  if (total == 0) throw ConfigError("nothing to plot: no run points");
  const Range xr = Padded(x_lo, x_hi);
  const Range yr = Padded(y_lo, y_hi);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) {
    return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  auto py = [&](double y) {
    return kTop + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * plot_h;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         Fixed(kWidth, 0) + "\" height=\"" + Fixed(kHeight, 0) +
         "\" viewBox=\"0 0 " + Fixed(kWidth, 0) + " " + Fixed(kHeight, 0) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<title>" + std::string(ProjectionName(projection)) +
         " frontier</title>\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + Fixed(kWidth, 0) + "\" height=\"" +
         Fixed(kHeight, 0) + "\" fill=\"white\"/>\n";

  // Axes and ticks.
  const std::string x0 = Fixed(kLeft);
  const std::string x1 = Fixed(kLeft + plot_w);
  const std::string y0 = Fixed(kTop + plot_h);
  const std::string y1 = Fixed(kTop);
  svg += "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  svg += "<line x1=\"" + x0 + "\" y1=\"" + y0 + "\" x2=\"" + x1 + "\" y2=\"" +
         y0 + "\"/>\n";
  svg += "<line x1=\"" + x0 + "\" y1=\"" + y0 + "\" x2=\"" + x0 + "\" y2=\"" +
         y1 + "\"/>\n";
  svg += "</g>\n<g class=\"ticks\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    svg += "<text x=\"" + Fixed(px(xv)) + "\" y=\"" +
           Fixed(kTop + plot_h + 16) + "\" text-anchor=\"middle\">" +
           Fixed(xv, 3) + "</text>\n";
    svg += "<text x=\"" + Fixed(kLeft - 6) + "\" y=\"" + Fixed(py(yv) + 4) +
           "\" text-anchor=\"end\">" + Fixed(yv, 3) + "</text>\n";
  }
  svg += "</g>\n";
  svg += "<text class=\"xlabel\" x=\"" + Fixed(kLeft + plot_w / 2) +
         "\" y=\"" + Fixed(kHeight - 18) + "\" text-anchor=\"middle\">" +
         Escape(AxisLabel(projection, true)) + "</text>\n";
  svg += "<text class=\"ylabel\" x=\"16\" y=\"" + Fixed(kTop + plot_h / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         Fixed(kTop + plot_h / 2) + ")\">" +
         Escape(AxisLabel(projection, false)) + "</text>\n";

  for (size_t m = 0; m < series.size(); ++m) {
    const MethodSeries& s = series[m];
    if (s.points.empty()) continue;
    const char* color = kPalette[m % std::size(kPalette)];
    const std::string method = Escape(s.method);
    svg += "<g class=\"scatter\" data-method=\"" + method + "\" fill=\"" +
           color + "\" fill-opacity=\"0.5\">\n";
    for (const FrontierPoint& p : s.points) {
      svg += "<circle cx=\"" + Fixed(px(p.x)) + "\" cy=\"" + Fixed(py(p.y)) +
             "\" r=\"3\"><title>" + Escape(p.run_id) + "</title></circle>\n";
    }
    svg += "</g>\n";

    const ParetoFrontier front = ParetoFront(s.points);
    std::string d;
    for (size_t i = 0; i < front.points.size(); ++i) {
      const FrontierPoint& p = front.points[i];
      if (i == 0) {
        d += "M " + Fixed(px(p.x)) + " " + Fixed(py(p.y));
      } else {
        // Horizontal run at the previous y, then drop to this point.
        d += " H " + Fixed(px(p.x)) + " V " + Fixed(py(p.y));
      }
    }
    svg += "<path class=\"staircase\" data-method=\"" + method + "\" d=\"" +
           d + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";

    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(m);
    const double lx = kLeft + plot_w + 16.0;
    svg += "<g class=\"legend\"><line x1=\"" + Fixed(lx) + "\" y1=\"" +
           Fixed(ly) + "\" x2=\"" + Fixed(lx + 20) + "\" y2=\"" + Fixed(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/><text x=\"" +
           Fixed(lx + 26) + "\" y=\"" + Fixed(ly + 4) + "\">" + method +
           "</text></g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace forgetlab
