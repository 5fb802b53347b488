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

// Two-dimensional Pareto frontiers over run metrics (lower is better on
// both axes), frontier comparison, and hypervolume.

#ifndef FORGETLAB_FRONTIER_H_
#define FORGETLAB_FRONTIER_H_

#include <string>
#include <vector>

#include "forgetlab/pipeline.h"

namespace forgetlab {

// RET_FT = (L_ret, L_ft), PRE_RET = (L_pre, L_ret).
enum class Projection { kRetFt, kPreRet };

const char* ProjectionName(Projection projection);
// Accepts "RET_FT" / "PRE_RET". Throws ConfigError otherwise.
Projection ParseProjection(const std::string& name);

struct FrontierPoint {
  double x = 0.0;
  double y = 0.0;
  std::string run_id;
};

FrontierPoint ProjectMetrics(const CheckpointMetrics& metrics,
                             Projection projection, const std::string& run_id);

struct ParetoFrontier {
  std::string projection;
  std::string method;
  std::vector<FrontierPoint> points;  // ascending x, strictly descending y
};

// Non-dominated subset; among identical coordinates the lowest run_id is
// kept. Throws ConfigError on empty input or non-finite coordinates.
ParetoFrontier ParetoFront(const std::vector<FrontierPoint>& points,
                           const std::string& projection = "",
                           const std::string& method = "");

struct DominanceReport {
  // Per point of B: some point of A is within tol on both axes.
  std::vector<bool> weakly_dominated;
  // Per point of B: some point of A Pareto-dominates it outright.
  std::vector<bool> strictly_dominated;
  double fraction = 0.0;
  int strict_count = 0;
};

// How much of B is covered by A. Throws ConfigError if the projection
// labels differ.
DominanceReport Dominates(const ParetoFrontier& a, const ParetoFrontier& b,
                          double tol);

// Area dominated by the front inside the box up to ref. Throws ConfigError
// if a point lies outside the box.
double Hypervolume(const ParetoFrontier& front, double ref_x, double ref_y);

// Columns: projection,run_id,x,y,on_front,method (method = front.method).
// Rows follow `points` order.
std::string FrontierCsvHeader();
std::string FrontierCsvRows(const std::vector<FrontierPoint>& points,
                            const ParetoFrontier& front);

}  // namespace forgetlab

#endif  // FORGETLAB_FRONTIER_H_
