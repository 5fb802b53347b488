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

// Three-stage runs: (mixed) pretraining, ridge-anchored post-training with
// optional replay, unregularized downstream fine-tuning.

#ifndef FORGETLAB_PIPELINE_H_
#define FORGETLAB_PIPELINE_H_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forgetlab/linear_net.h"
#include "forgetlab/spectral_tasks.h"

namespace forgetlab {

enum class StageId { kPretrain, kPosttrain, kFinetune };

const char* StageIdName(StageId stage);

struct StagePlan {
  StageId stage = StageId::kPretrain;
  // Fraction of D_post mixed into pretraining. Pretrain only.
  double mix_fraction = 0.0;
  // Fraction of D_pre replayed during post-training. Posttrain only.
  double replay_fraction = 0.0;
  // settings.max_steps is ignored; budget_steps governs the stage length.
  OptimizerSettings settings;
  int64_t budget_steps = 0;

  // Throws ConfigError on out-of-range fractions or fractions used on the
  // wrong stage.
  void Validate() const;

  // Gradient steps' worth of specialized (D_post) data this stage consumes:
  // mix_fraction * budget for pretraining, (1 - replay) * budget for
  // post-training, 0 for fine-tuning.
  int64_t SpecializedExposureSteps() const;
};

StagePlan MakePretrainPlan(double mix_fraction, const OptimizerSettings& s,
                           int64_t steps);
StagePlan MakePosttrainPlan(double replay_fraction,
                            const OptimizerSettings& s, int64_t steps);
StagePlan MakeFinetunePlan(const OptimizerSettings& s, int64_t steps);

struct CheckpointMetrics {
  double l_im = 0.0;   // theta_post on D_post
  double l_ret = 0.0;  // theta_ft on D_post
  double l_ft = 0.0;   // theta_ft on D_ft
  double l_pre = 0.0;  // theta_ft on D_pre
  double delta = 0.0;  // l_ret - l_im
};

CheckpointMetrics ComputeMetrics(const TaskFamily& family,
                                 const NetworkState& theta_post,
                                 const NetworkState& theta_ft);

struct Provenance {
  uint64_t seed = 0;
  std::string config_hash;  // family + initial state + seed
  std::string run_id;       // config_hash + the three plans
};

enum class RunStatus { kComplete, kDiverged };

struct PipelineRun {
  std::shared_ptr<const TaskFamily> family;
  std::array<StagePlan, 3> plans;
  std::optional<NetworkState> theta_pre;
  std::optional<NetworkState> theta_post;
  std::optional<NetworkState> theta_ft;
  std::optional<CheckpointMetrics> metrics;
  Provenance provenance;
  RunStatus status = RunStatus::kComplete;
  std::optional<StageId> failed_stage;
  std::string failure;
  // One per executed stage when PipelineOptions::keep_trajectories is set.
  std::vector<Trajectory> trajectories;

  bool complete() const { return status == RunStatus::kComplete; }
};

struct PipelineOptions {
  uint64_t seed = 0;
  bool keep_trajectories = false;
};

// Distributions each stage trains on.
StageDistribution PretrainDistribution(const TaskFamily& family,
                                       const StagePlan& plan);
StageDistribution PosttrainDistribution(const TaskFamily& family,
                                        const StagePlan& plan);

// Plans must be ordered pretrain, posttrain, finetune. A diverging stage
// stops the run; completed checkpoints are kept and the run is marked.
PipelineRun RunPipeline(std::shared_ptr<const TaskFamily> family,
                        const std::array<StagePlan, 3>& plans,
                        const NetworkState& init,
                        const PipelineOptions& options = {});

// Stages 2-3 from an already pretrained checkpoint (stage 1 is recorded in
// the run's plans but not re-executed).
PipelineRun RunFromPretrained(std::shared_ptr<const TaskFamily> family,
                              const std::array<StagePlan, 3>& plans,
                              const NetworkState& init,
                              const NetworkState& theta_pre,
                              const PipelineOptions& options = {});

// L_ret - L_im. Throws ConfigError for an incomplete run.
double ComputeForgetting(const PipelineRun& run);

// Fixed total budget B of specialized exposure split between pretraining
// and post-training. Pretraining keeps its full length P
// (pretrain.max_steps) and mixes D_post at fraction round(alloc * B) / P,
// so its exposure is round(alloc * B) step-equivalents; post-training gets
// the remaining B - round(alloc * B) steps on pure D_post.
struct ComputeMatchedSettings {
  OptimizerSettings pretrain;   // max_steps = pretraining length P
  OptimizerSettings posttrain;  // max_steps ignored
};

std::pair<StagePlan, StagePlan> ComputeMatchedPlans(
    const TaskFamily& family, int64_t total_budget, double alloc_fraction,
    const ComputeMatchedSettings& settings);

// Cartesian product of Stage-2 and Stage-3 hyperparameters on top of one
// Stage-1 checkpoint per mix fraction.
struct SweepGrid {
  std::vector<double> mix_fractions{0.0};
  std::vector<double> eta2;
  std::vector<double> ridge_lambda{0.0};
  std::vector<double> replay_fraction{0.0};
  std::vector<double> eta3;
  std::vector<int64_t> steps3;

  size_t size() const;
};

struct SweepBase {
  StagePlan pretrain;   // mix_fraction overridden per grid point
  StagePlan posttrain;  // eta, ridge_lambda, replay overridden
  StagePlan finetune;   // eta, budget overridden
};

struct SweepOptions {
  uint64_t seed = 0;
  int threads = 1;
  // Grid points whose run id is listed here are neither trained nor
  // returned (resuming an interrupted sweep).
  std::set<std::string> skip_run_ids;
};

struct SweepResult {
  std::vector<PipelineRun> runs;  // sorted by run_id
  int64_t pretrain_executions = 0;
};

// Throws ConfigError on an empty grid. Individual run failures are recorded
// in the run; the sweep continues.
SweepResult RunSweep(std::shared_ptr<const TaskFamily> family,
                     const SweepGrid& grid, const SweepBase& base,
                     const NetworkState& init,
                     const SweepOptions& options = {});

// Canonical text of a plan; feeds provenance hashes.
std::string DescribePlan(const StagePlan& plan);

}  // namespace forgetlab

#endif  // FORGETLAB_PIPELINE_H_
