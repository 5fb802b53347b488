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

#include "forgetlab/frontier.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "forgetlab/errors.h"
#include "forgetlab/numeric_format.h"

namespace forgetlab {

const char* ProjectionName(Projection projection) {
  switch (projection) {
    case Projection::kRetFt:
      return "RET_FT";
    case Projection::kPreRet:
      return "PRE_RET";
  }
  return "unknown";
}

Projection ParseProjection(const std::string& name) {
  if (name == "RET_FT") return Projection::kRetFt;
  if (name == "PRE_RET") return Projection::kPreRet;
  throw ConfigError("unknown projection '" + name +
                    "' (expected RET_FT or PRE_RET)");
}

FrontierPoint ProjectMetrics(const CheckpointMetrics& metrics,
                             Projection projection,
                             const std::string& run_id) {
  if (projection == Projection::kRetFt) {
    return {metrics.l_ret, metrics.l_ft, run_id};
  }
  return {metrics.l_pre, metrics.l_ret, run_id};
}

ParetoFrontier ParetoFront(const std::vector<FrontierPoint>& points,
                           const std::string& projection,
                           const std::string& method) {
  if (points.empty()) throw ConfigError("pareto front of an empty set");
  for (const FrontierPoint& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ConfigError("non-finite frontier coordinate for run " + p.run_id);
    }
  }
  std::vector<FrontierPoint> sorted = points;
  std::sort(sorted.begin(), sorted.end(),
            [](const FrontierPoint& a, const FrontierPoint& b) {
              if (a.x != b.x) return a.x < b.x;
              if (a.y != b.y) return a.y < b.y;
              return a.run_id < b.run_id;
            });
  ParetoFrontier front;
  front.projection = projection;
  front.method = method;
  double best_y = std::numeric_limits<double>::infinity();
  for (const FrontierPoint& p : sorted) {
    if (p.y < best_y) {
      front.points.push_back(p);
      best_y = p.y;
    }
  }
  return front;
}

DominanceReport Dominates(const ParetoFrontier& a, const ParetoFrontier& b,
                          double tol) {
  if (a.projection != b.projection) {
    throw ConfigError("cannot compare frontiers of projections '" +
                      a.projection + "' and '" + b.projection + "'");
  }
  DominanceReport report;
  int weak = 0;
  for (const FrontierPoint& q : b.points) {
    bool covered = false;
    bool strict = false;
    for (const FrontierPoint& p : a.points) {
      if (p.x <= q.x + tol && p.y <= q.y + tol) covered = true;
      if (p.x <= q.x && p.y <= q.y && (p.x < q.x || p.y < q.y)) strict = true;
    }
    report.weakly_dominated.push_back(covered);
    report.strictly_dominated.push_back(strict);
    weak += covered ? 1 : 0;
    report.strict_count += strict ? 1 : 0;
  }
  report.fraction =
      b.points.empty() ? 1.0
                       : static_cast<double>(weak) /
                             static_cast<double>(b.points.size());
  return report;
}

double Hypervolume(const ParetoFrontier& front, double ref_x, double ref_y) {
  for (const FrontierPoint& p : front.points) {
    if (!(p.x <= ref_x && p.y <= ref_y)) {
      throw ConfigError("frontier point (" + FormatDouble(p.x) + ", " +
                        FormatDouble(p.y) + ") lies outside the reference box");
    }
  }
  double area = 0.0;
  const size_t m = front.points.size();
  for (size_t i = 0; i < m; ++i) {
    const double next_x = i + 1 < m ? front.points[i + 1].x : ref_x;
    area += (next_x - front.points[i].x) * (ref_y - front.points[i].y);
  }
  return area;
}

std::string FrontierCsvHeader() {
  return "projection,run_id,x,y,on_front,method\n";
}

std::string FrontierCsvRows(const std::vector<FrontierPoint>& points,
                            const ParetoFrontier& front) {
  std::set<std::string> on_front;
  for (const FrontierPoint& p : front.points) on_front.insert(p.run_id);
  std::string out;
  for (const FrontierPoint& p : points) {
    out += front.projection + "," + p.run_id + "," + FormatDouble(p.x) + "," +
           FormatDouble(p.y) + "," + (on_front.count(p.run_id) ? "1" : "0") +
           "," + front.method + "\n";
  }
  return out;
}

}  // namespace forgetlab
