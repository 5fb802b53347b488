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

// Acceptance suite on the reference family R1 (identity basis). Prints one
// PASS/FAIL line per criterion and exits 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "forgetlab/commands.h"
#include "forgetlab/experiment_config.h"
#include "forgetlab/frontier.h"
#include "forgetlab/linear_net.h"
#include "forgetlab/pipeline.h"
#include "forgetlab/spectral_tasks.h"
#include "forgetlab/theorems.h"

namespace forgetlab {
namespace {

namespace fs = std::filesystem;

const std::string kConfigDir = FORGETLAB_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string Num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::shared_ptr<const TaskFamily> R1() {
  return std::make_shared<const TaskFamily>(ReferenceFamily());
}

OptimizerSettings Opt(double eta, int64_t steps, double lambda = 0.0) {
  OptimizerSettings s;
  s.eta = eta;
  s.max_steps = steps;
  s.ridge_lambda = lambda;
  return s;
}

bool SameBits(double a, double b) { return std::memcmp(&a, &b, 8) == 0; }

// Relative error, or absolute error where both values are below 1e-8.
double EntryError(double exact, double approx) {
  const double scale = std::max(std::abs(exact), std::abs(approx));
  return scale < 1e-8 ? std::abs(exact - approx)
                      : std::abs(exact - approx) / scale;
}

Outcome GradientCorrectness() {
  const TaskFamily f = ReferenceFamily();
  const StageDistribution* dists[3] = {&f.pre, &f.post, &f.ft};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 0.7);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    NetworkState s;
    s.w1 = Eigen::MatrixXd::NullaryExpr(6, 6, [&] { return normal(rng); });
    s.w2 = Eigen::MatrixXd::NullaryExpr(6, 6, [&] { return normal(rng); });
    for (const StageDistribution* d : dists) {
      const Gradients g = PopulationGradient(s, *d, f);
      for (int which = 0; which < 2; ++which) {
        for (int r = 0; r < 6; ++r) {
          for (int c = 0; c < 6; ++c) {
            NetworkState plus = s;
            NetworkState minus = s;
            (which == 0 ? plus.w1 : plus.w2)(r, c) += h;
            (which == 0 ? minus.w1 : minus.w2)(r, c) -= h;
            const double fd = (PopulationLoss(plus, *d, f) -
                               PopulationLoss(minus, *d, f)) /
                              (2.0 * h);
            const double exact = (which == 0 ? g.w1 : g.w2)(r, c);
            worst = std::max(worst, EntryError(exact, fd));
          }
        }
      }
    }
  }
  return {worst <= 1e-5, "worst_error=" + Num(worst) + " (tol 1e-5)"};
}

Outcome FrozenDirections() {
  OptimizerSettings ft = Opt(0.02, 10'000);
  ft.snapshot_every = 1;
  const std::array<StagePlan, 3> plans = {
      MakePretrainPlan(0.5, Opt(0.02, 0), 2000),
      MakePosttrainPlan(0.0, Opt(0.01, 0, 0.1), 300),
      MakeFinetunePlan(ft, 10'000)};
  PipelineOptions options;
  options.keep_trajectories = true;
  const PipelineRun run =
      RunPipeline(R1(), plans, InitScaledIdentity(6, 12.0), options);
  if (!run.complete() || run.trajectories.size() != 3) {
    return {false, "pipeline did not complete: " + run.failure};
  }
  const Trajectory& stage3 = run.trajectories[2];
  const Snapshot& first = stage3.snapshots.front();
  int moved = 0;
  for (const Snapshot& snap : stage3.snapshots) {
    for (int i : {4, 5}) {
      moved += SameBits(snap.aligned_diag(i), first.aligned_diag(i)) ? 0 : 1;
    }
  }
  const FrozenDirectionReport report =
      CheckFrozenDirections(stage3, run.family->ft);
  const bool pass = moved == 0 && report.pass && !report.vacuous &&
                    stage3.snapshots.size() == 10'001;
  return {pass, "snapshots=" + std::to_string(stage3.snapshots.size()) +
                    " changed_entries=" + std::to_string(moved) +
                    " sigma4=" + Num(first.aligned_diag(4)) +
                    " sigma5=" + Num(first.aligned_diag(5))};
}

Outcome DiagonalEquivalence() {
  const TaskFamily f = ReferenceFamily();
  const StageDistribution mixed = MixDistributions(f.pre, f.post, 0.5);
  const double eta = 0.02;
  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(6, std::exp(-24.0));
  NetworkState s = InitScaledIdentity(6, 12.0);
  const TrainConfig config = TrainConfig::Create(Opt(eta, 1));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
  double worst = 0.0;
  for (int step = 0; step < 10'000; ++step) {
    s = GradientStep(s, mixed, f, config);
    sigma = DerivedDiagStep(sigma, mixed.target_spectrum, eta, 0.0, zero,
                            mixed.input_variances);
    const AlignedSpectrum a = ComputeAlignedSpectrum(s, f.basis);
    worst = std::max(worst, (a.diag - sigma).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8, "max_deviation=" + Num(worst) + " (tol 1e-8)"};
}

Outcome SequentialLearning() {
  const TaskFamily f = ReferenceFamily();
  OptimizerSettings s = Opt(0.02, 40'000);
  s.snapshot_every = 1;
  const Trajectory t =
      Train(InitScaledIdentity(6, 12.0), f.pre, f, TrainConfig::Create(s));
  const SequentialOrderReport r = CheckSequentialOrder(t, f.pre);

  // Learnable coordinates by descending cross-covariance must cross in
  // exactly that order.
  const Eigen::VectorXd cross = CrossCovarianceSpectrum(f.pre);
  std::vector<int> expected;
  for (int i = 0; i < 6; ++i) {
    if (cross(i) > 0.0) expected.push_back(i);
  }
  std::stable_sort(expected.begin(), expected.end(),
                   [&](int a, int b) { return cross(a) > cross(b); });
  std::vector<int> crossed;
  for (int i = 0; i < 6; ++i) {
    if (r.crossing_step[i] >= 0) crossed.push_back(i);
  }
  std::stable_sort(crossed.begin(), crossed.end(), [&](int a, int b) {
    return r.crossing_step[a] < r.crossing_step[b];
  });
  bool strict = true;
  for (size_t i = 1; i < crossed.size(); ++i) {
    strict = strict && r.crossing_step[crossed[i - 1]] <
                           r.crossing_step[crossed[i]];
  }
  const bool specialized_silent =
      r.crossing_step[4] < 0 && r.crossing_step[5] < 0;
  std::string steps;
  for (int64_t c : r.crossing_step) steps += std::to_string(c) + ",";
  steps.pop_back();
  const bool pass = r.pass && r.violations.empty() && crossed == expected &&
                    strict && specialized_silent;
  return {pass, "crossing_steps=[" + steps + "]"};
}

Outcome TheoremOne() {
  const TheoremReport r = VerifyTheorem1(ReferenceFamily(), 0.5);
  const double ratio = r.Measured("mixed_specialized_min_ratio");
  const double unmixed = r.Measured("unmixed_specialized_max_abs");
  const bool pass = r.pass && ratio >= 0.9 && unmixed <= 1e-3;
  return {pass, "mixed_min_ratio=" + Num(ratio) +
                    " unmixed_max_abs=" + Num(unmixed)};
}

Outcome TheoremTwo() {
  const TheoremReport r = VerifyTheorem2(ReferenceFamily(), 0.5);
  const double mixed_dev = r.Measured("mixed_max_deviation");
  const double unmixed_dev = r.Measured("unmixed_max_deviation");
  const double inconsistent =
      r.Measured("mixed_inconsistent_max_abs_all_steps");
  const double offdiag = r.Measured("mixed_offdiag_norm");
  const bool pass = r.pass && mixed_dev <= 0.1 && unmixed_dev <= 0.1 &&
                    inconsistent == 0.0 && offdiag <= 1e-6;
  return {pass, "mixed_dev=" + Num(mixed_dev) + " unmixed_dev=" +
                    Num(unmixed_dev) + " inconsistent=" + Num(inconsistent) +
                    " offdiag=" + Num(offdiag)};
}

Outcome TheoremThree() {
  const TaskFamily f = ReferenceFamily();
  const TheoremReport r = VerifyTheorem3(f, 0.5);
  const double mixed = r.Measured("delta_mixed");
  const double unmixed = r.Measured("delta_unmixed");
  const double bound = UnmixedForgettingLowerBound(f, 0.1);
  const bool pass = r.pass && std::abs(bound - 6.48) <= 1e-12 &&
                    std::abs(mixed) <= 1e-8 && unmixed >= 6.48;
  return {pass, "delta_mixed=" + Num(mixed) + " delta_unmixed=" +
                    Num(unmixed) + " bound=" + Num(bound)};
}

Outcome FrontierShift() {
  const ExperimentConfig config =
      LoadExperimentConfig(kConfigDir + "/r1_sweep.cfg");
  const SweepBase base{config.plans[0], config.plans[1], config.plans[2]};
  const SweepResult sweep =
      RunSweep(config.family, *config.sweep, base, config.InitialState());
  std::vector<FrontierPoint> mixed;
  std::vector<FrontierPoint> unmixed;
  for (const PipelineRun& run : sweep.runs) {
    if (!run.complete()) return {false, "run failed: " + run.failure};
    (run.plans[0].mix_fraction > 0.0 ? mixed : unmixed)
        .push_back(ProjectMetrics(*run.metrics, Projection::kRetFt,
                                  run.provenance.run_id));
  }
  if (mixed.size() != 15 || unmixed.size() != 15) {
    return {false, "expected 15 runs per method"};
  }
  const ParetoFrontier a = ParetoFront(mixed, "RET_FT", "mixed");
  const ParetoFrontier b = ParetoFront(unmixed, "RET_FT", "unmixed");
  const DominanceReport d = Dominates(a, b, 1e-6);
  auto min_ret = [](const std::vector<FrontierPoint>& pts) {
    double m = pts.front().x;
    for (const FrontierPoint& p : pts) m = std::min(m, p.x);
    return m;
  };
  const double gap = min_ret(unmixed) - min_ret(mixed);
  const bool pass = d.fraction == 1.0 && d.strict_count >= 1 && gap >= 1.0;
  return {pass, "dominated_fraction=" + Num(d.fraction) +
                    " strict=" + std::to_string(d.strict_count) +
                    " L_ret_gap=" + Num(gap) + " (need >= 1.0)"};
}

Outcome ComputeMatched() {
  const auto family = R1();
  ComputeMatchedSettings settings;
  settings.pretrain = Opt(0.02, 2000);
  settings.posttrain = Opt(0.0005, 0);
  const int64_t budget = 400;
  const std::vector<double> allocs = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> l_im;
  std::vector<double> l_ret;
  for (double alloc : allocs) {
    auto [pre, post] = ComputeMatchedPlans(*family, budget, alloc, settings);
    const std::array<StagePlan, 3> plans = {
        pre, post, MakeFinetunePlan(Opt(0.02, 0), 2000)};
    const PipelineRun run =
        RunPipeline(family, plans, InitScaledIdentity(6, 12.0));
    if (!run.complete()) return {false, "run failed: " + run.failure};
    l_im.push_back(run.metrics->l_im);
    l_ret.push_back(run.metrics->l_ret);
  }
  bool pass = l_im.back() > l_im.front() && l_ret.back() < l_ret.front();
  for (size_t i = 1; i < allocs.size(); ++i) {
    pass = pass && l_im[i] >= l_im[i - 1] - 1e-3;
    pass = pass && l_ret[i] <= l_ret[i - 1] + 1e-3;
  }
  std::string im = "L_im=[";
  std::string ret = "L_ret=[";
  for (size_t i = 0; i < allocs.size(); ++i) {
    im += Num(l_im[i]) + (i + 1 < allocs.size() ? "," : "]");
    ret += Num(l_ret[i]) + (i + 1 < allocs.size() ? "," : "]");
  }
  return {pass, im + " " + ret};
}

Outcome Replay() {
  auto plans = [](double replay) {
    return std::array<StagePlan, 3>{
        MakePretrainPlan(0.5, Opt(0.02, 0), 2000),
        MakePosttrainPlan(replay, Opt(0.01, 0, 0.1), 300),
        MakeFinetunePlan(Opt(0.01, 0), 200)};
  };
  const PipelineRun plain =
      RunPipeline(R1(), plans(0.0), InitScaledIdentity(6, 12.0));
  const PipelineRun replay =
      RunPipeline(R1(), plans(0.1), InitScaledIdentity(6, 12.0));
  if (!plain.complete() || !replay.complete()) return {false, "run failed"};
  const TaskFamily& f = *plain.family;
  const double a = PopulationLoss(*plain.theta_post, f.pre, f);
  const double b = PopulationLoss(*replay.theta_post, f.pre, f);
  const bool matched = plain.plans[1].budget_steps ==
                       replay.plans[1].budget_steps;
  return {matched && a - b >= 1e-3,
          "L_pre(rho=0)=" + Num(a) + " L_pre(rho=0.1)=" + Num(b) +
              " margin=" + Num(a - b)};
}

std::vector<FrontierPoint> RandomPoints(std::mt19937_64& rng, int count,
                                        bool coarse) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 9);
  std::vector<FrontierPoint> out;
  for (int i = 0; i < count; ++i) {
    const std::string id = "p" + std::to_string(1000 + i);
    if (coarse) {
      out.push_back({grid(rng) / 10.0, grid(rng) / 10.0, id});
    } else {
      out.push_back({unit(rng), unit(rng), id});
    }
  }
  return out;
}

Outcome ParetoOracle() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> size(1, 200);
  int mismatches = 0;
  for (int set = 0; set < 100; ++set) {
    const std::vector<FrontierPoint> pts =
        RandomPoints(rng, size(rng), set % 3 == 0);
    std::set<std::string> oracle;
    for (const FrontierPoint& p : pts) {
      bool keep = true;
      for (const FrontierPoint& q : pts) {
        const bool dominates =
            q.x <= p.x && q.y <= p.y && (q.x < p.x || q.y < p.y);
        const bool duplicate = q.x == p.x && q.y == p.y && q.run_id < p.run_id;
        if (dominates || duplicate) keep = false;
      }
      if (keep) oracle.insert(p.run_id);
    }
    std::set<std::string> got;
    for (const FrontierPoint& p : ParetoFront(pts).points) got.insert(p.run_id);
    mismatches += got == oracle ? 0 : 1;
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> front_size(1, 40);
  const int samples = 1'000'000;
  int outside = 0;
  double worst_sigmas = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const ParetoFrontier front =
        ParetoFront(RandomPoints(rng, front_size(rng), false));
    const double exact = Hypervolume(front, 1.0, 1.0);
    int64_t hits = 0;
    for (int s = 0; s < samples; ++s) {
      const double ux = unit(rng);
      const double uy = unit(rng);
      for (const FrontierPoint& p : front.points) {
        if (p.x > ux) break;
        if (p.y <= uy) {
          ++hits;
          break;
        }
      }
    }
    const double f = static_cast<double>(hits) / samples;
    const double se = std::sqrt(f * (1.0 - f) / samples);
    const double err = std::abs(f - exact);
    if (err > 3.0 * se + 1e-12) ++outside;
    if (se > 0.0) worst_sigmas = std::max(worst_sigmas, err / se);
  }
  return {mismatches == 0 && outside == 0,
          "oracle_mismatches=" + std::to_string(mismatches) +
              "/100 hv_outside_3sigma=" + std::to_string(outside) +
              "/50 worst=" + Num(worst_sigmas) + "sigma"};
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() / "forgetlab_acceptance";
  fs::remove_all(root);
  std::ostringstream sink;
  bool ok = true;
  auto run_twice = [&](const char* config, const char* file,
                       int (*cmd)(const CommandOptions&, std::ostream&,
                                  std::ostream&)) {
    std::string bytes[2];
    for (int i = 0; i < 2; ++i) {
      CommandOptions o;
      o.config_path = kConfigDir + "/" + config;
      o.out_dir = (root / (std::string(file) + std::to_string(i))).string();
      ok = ok && cmd(o, sink, sink) == kExitOk;
      bytes[i] = Slurp(*o.out_dir + "/" + file);
    }
    ok = ok && !bytes[0].empty() && bytes[0] == bytes[1];
    return bytes[0].size();
  };
  const size_t sim =
      run_twice("r1_simulate.cfg", "simulate_records.jsonl", CmdSimulate);
  const size_t sweep =
      run_twice("r1_sweep.cfg", "sweep_records.jsonl", CmdSweep);
  fs::remove_all(root);
  return {ok, "simulate_bytes=" + std::to_string(sim) +
                  " sweep_bytes=" + std::to_string(sweep) + " identical"};
}

int Main() {
  const std::vector<Criterion> criteria = {
      {"gradient_correctness", 5, GradientCorrectness},
      {"frozen_directions", 5, FrozenDirections},
      {"diagonal_equivalence", 10, DiagonalEquivalence},
      {"sequential_learning", 15, SequentialLearning},
      {"theorem1_mixing_learns_specialized", 15, TheoremOne},
      {"theorem2_posttrain_targets", 10, TheoremTwo},
      {"theorem3_forgetting_gap", 10, TheoremThree},
      {"frontier_shift", 60, FrontierShift},
      {"compute_matched_allocation", 30, ComputeMatched},
      {"replay_retention", 10, Replay},
      {"pareto_oracle_and_hypervolume", 20, ParetoOracle},
      {"determinism", 10, Determinism},
  };
  int failures = 0;
  double total = 0.0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start)
            .count();
    total += seconds;
    // Runtime budgets are reported, not enforced: they assume a laptop core.
    std::printf("%-4s %2zu %-34s %s [%.2fs, budget %.0fs]\n",
                outcome.pass ? "PASS" : "FAIL", i + 1, c.name,
                outcome.detail.c_str(), seconds, c.budget_seconds);
    failures += outcome.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed in %.2fs\n",
              static_cast<int>(criteria.size()) - failures, criteria.size(),
              total);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace forgetlab

int main() { return forgetlab::Main(); }
