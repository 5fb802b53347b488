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

// Self-contained SVG frontier panels: scatter of every run plus one
// staircase per method frontier. Output depends only on the input.

#ifndef FORGETLAB_SVG_PLOT_H_
#define FORGETLAB_SVG_PLOT_H_

#include <string>
#include <vector>

#include "forgetlab/frontier.h"

namespace forgetlab {

struct MethodSeries {
  std::string method;  // e.g. "mixed", "unmixed"
  std::vector<FrontierPoint> points;
};

// Axis label for each coordinate of a projection.
std::string AxisLabel(Projection projection, bool x_axis);

// Throws ConfigError if there are no points at all.
std::string RenderFrontierSvg(Projection projection,
                              const std::vector<MethodSeries>& series);

}  // namespace forgetlab

#endif  // FORGETLAB_SVG_PLOT_H_
