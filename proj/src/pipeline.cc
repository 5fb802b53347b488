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

#include "forgetlab/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "forgetlab/errors.h"
#include "forgetlab/numeric_format.h"

namespace forgetlab {

const char* StageIdName(StageId stage) {
  switch (stage) {
    case StageId::kPretrain:
      return "pretrain";
    case StageId::kPosttrain:
      return "posttrain";
    case StageId::kFinetune:
      return "finetune";
  }
  return "unknown";
}

void StagePlan::Validate() const {
  const std::string name = StageIdName(stage);
  if (!(mix_fraction >= 0.0 && mix_fraction <= 1.0)) {
    throw ConfigError(name + ": mix_fraction must lie in [0, 1], got " +
                      FormatDouble(mix_fraction));
  }
  if (!(replay_fraction >= 0.0 && replay_fraction <= 1.0)) {
    throw ConfigError(name + ": replay_fraction must lie in [0, 1], got " +
                      FormatDouble(replay_fraction));
  }
  if (stage != StageId::kPretrain && mix_fraction != 0.0) {
    throw ConfigError(name + ": mix_fraction only applies to pretraining");
  }
  if (stage != StageId::kPosttrain && replay_fraction != 0.0) {
    throw ConfigError(name + ": replay_fraction only applies to post-training");
  }
  if (stage != StageId::kPosttrain && settings.ridge_lambda != 0.0) {
    throw ConfigError(name +
                      ": ridge anchoring only applies to post-training");
  }
  if (budget_steps < 0) {
    throw ConfigError(name + ": budget_steps must be >= 0");
  }
}

int64_t StagePlan::SpecializedExposureSteps() const {
  switch (stage) {
    case StageId::kPretrain:
      return std::llround(mix_fraction * static_cast<double>(budget_steps));
    case StageId::kPosttrain:
      return std::llround((1.0 - replay_fraction) *
                          static_cast<double>(budget_steps));
    case StageId::kFinetune:
      return 0;
  }
  return 0;
}

StagePlan MakePretrainPlan(double mix_fraction, const OptimizerSettings& s,
                           int64_t steps) {
  StagePlan plan;
  plan.stage = StageId::kPretrain;
  plan.mix_fraction = mix_fraction;
  plan.settings = s;
  plan.budget_steps = steps;
  return plan;
}

StagePlan MakePosttrainPlan(double replay_fraction,
                            const OptimizerSettings& s, int64_t steps) {
  StagePlan plan;
  plan.stage = StageId::kPosttrain;
  plan.replay_fraction = replay_fraction;
  plan.settings = s;
  plan.budget_steps = steps;
  return plan;
}

StagePlan MakeFinetunePlan(const OptimizerSettings& s, int64_t steps) {
  StagePlan plan;
  plan.stage = StageId::kFinetune;
  plan.settings = s;
  plan.budget_steps = steps;
  return plan;
}

CheckpointMetrics ComputeMetrics(const TaskFamily& family,
                                 const NetworkState& theta_post,
                                 const NetworkState& theta_ft) {
  CheckpointMetrics m;
  m.l_im = PopulationLoss(theta_post, family.post, family);
  m.l_ret = PopulationLoss(theta_ft, family.post, family);
  m.l_ft = PopulationLoss(theta_ft, family.ft, family);
  m.l_pre = PopulationLoss(theta_ft, family.pre, family);
  m.delta = m.l_ret - m.l_im;
  return m;
}

StageDistribution PretrainDistribution(const TaskFamily& family,
                                       const StagePlan& plan) {
  return MixDistributions(family.pre, family.post, plan.mix_fraction);
}

StageDistribution PosttrainDistribution(const TaskFamily& family,
                                        const StagePlan& plan) {
  return MixDistributions(family.post, family.pre, plan.replay_fraction);
}

std::string DescribePlan(const StagePlan& plan) {
  const OptimizerSettings& s = plan.settings;
  std::string out = "stage=";
  out += StageIdName(plan.stage);
  out += " mix=" + FormatDouble(plan.mix_fraction);
  out += " replay=" + FormatDouble(plan.replay_fraction);
  out += " eta=" + FormatDouble(s.eta);
  out += " lambda=" + FormatDouble(s.ridge_lambda);
  out += " steps=" + std::to_string(plan.budget_steps);
  out += " gamma=" + FormatDouble(s.gamma_bound);
  if (s.stop_rule.kind == StopRule::Kind::kLossPlateau) {
    out += " stop=plateau:" + FormatDouble(s.stop_rule.threshold) + ":" +
           std::to_string(s.stop_rule.patience);
  } else {
    out += " stop=fixed";
  }
  return out;
}

namespace {

std::string ExperimentHash(const TaskFamily& family, const NetworkState& init,
                           uint64_t seed) {
  std::string text = SerializeTaskFamilySpec(family);
  const Eigen::Map<const Eigen::VectorXd> w1(init.w1.data(), init.w1.size());
  const Eigen::Map<const Eigen::VectorXd> w2(init.w2.data(), init.w2.size());
  text += "init_w1=" + FormatVector(w1) + "\n";
  text += "init_w2=" + FormatVector(w2) + "\n";
  text += "seed=" + std::to_string(seed) + "\n";
  return HashHex(text);
}

std::string RunIdOf(const std::string& config_hash,
                    const std::array<StagePlan, 3>& plans) {
  std::string text = config_hash;
  for (const StagePlan& plan : plans) text += "\n" + DescribePlan(plan);
  return HashHex(text);
}

void ValidatePlans(const std::array<StagePlan, 3>& plans) {
  const StageId order[3] = {StageId::kPretrain, StageId::kPosttrain,
                            StageId::kFinetune};
  for (int i = 0; i < 3; ++i) {
    if (plans[i].stage != order[i]) {
      throw ConfigError(std::string("plan ") + std::to_string(i) +
                        " must be the " + StageIdName(order[i]) + " stage");
    }
    plans[i].Validate();
  }
}

OptimizerSettings WithBudget(const StagePlan& plan) {
  OptimizerSettings s = plan.settings;
  s.max_steps = plan.budget_steps;
  return s;
}

std::vector<StageDistribution> Probes(const TaskFamily& family) {
  return {family.pre, family.post, family.ft};
}

// Stage 1 alone; shared by RunPipeline and RunSweep.
Trajectory RunPretrain(const TaskFamily& family, const StagePlan& plan,
                       const NetworkState& init, bool keep) {
  const TrainConfig config = TrainConfig::Create(WithBudget(plan));
  return Train(init, PretrainDistribution(family, plan), family, config,
               keep ? Probes(family) : std::vector<StageDistribution>{});
}

// Stages 2 and 3; fills the run in place.
void RunLaterStages(PipelineRun& run, bool keep) {
  const TaskFamily& family = *run.family;
  const std::vector<StageDistribution> probes =
      keep ? Probes(family) : std::vector<StageDistribution>{};
  StageId current = StageId::kPosttrain;
  try {
    const StagePlan& post = run.plans[1];
    const TrainConfig post_config =
        TrainConfig::Create(WithBudget(post), run.theta_pre->Product());
    Trajectory post_traj = Train(*run.theta_pre,
                                 PosttrainDistribution(family, post), family,
                                 post_config, probes);
    run.theta_post = post_traj.final_state;
    if (keep) run.trajectories.push_back(std::move(post_traj));

    current = StageId::kFinetune;
    const TrainConfig ft_config = TrainConfig::Create(WithBudget(run.plans[2]));
    Trajectory ft_traj =
        Train(*run.theta_post, family.ft, family, ft_config, probes);
    run.theta_ft = ft_traj.final_state;
    if (keep) run.trajectories.push_back(std::move(ft_traj));
    run.metrics = ComputeMetrics(family, *run.theta_post, *run.theta_ft);
  } catch (const DivergenceError& e) {
    run.status = RunStatus::kDiverged;
    run.failed_stage = current;
    run.failure = e.what();
  }
}

PipelineRun NewRun(std::shared_ptr<const TaskFamily> family,
                   const std::array<StagePlan, 3>& plans,
                   const NetworkState& init, uint64_t seed) {
  if (!family) throw ConfigError("pipeline run needs a task family");
  ValidatePlans(plans);
  if (init.n() != family->n()) {
    throw ConfigError("initial state dimension does not match the family");
  }
  PipelineRun run;
  run.plans = plans;
  run.provenance.seed = seed;
  run.provenance.config_hash = ExperimentHash(*family, init, seed);
  run.provenance.run_id = RunIdOf(run.provenance.config_hash, plans);
  run.family = std::move(family);
  return run;
}

}  // namespace

PipelineRun RunPipeline(std::shared_ptr<const TaskFamily> family,
                        const std::array<StagePlan, 3>& plans,
                        const NetworkState& init,
                        const PipelineOptions& options) {
  PipelineRun run = NewRun(std::move(family), plans, init, options.seed);
  try {
    Trajectory pre =
        RunPretrain(*run.family, plans[0], init, options.keep_trajectories);
    run.theta_pre = pre.final_state;
    if (options.keep_trajectories) run.trajectories.push_back(std::move(pre));
  } catch (const DivergenceError& e) {
    run.status = RunStatus::kDiverged;
    run.failed_stage = StageId::kPretrain;
    run.failure = e.what();
    return run;
  }
  RunLaterStages(run, options.keep_trajectories);
  return run;
}

PipelineRun RunFromPretrained(std::shared_ptr<const TaskFamily> family,
                              const std::array<StagePlan, 3>& plans,
                              const NetworkState& init,
                              const NetworkState& theta_pre,
                              const PipelineOptions& options) {
  PipelineRun run = NewRun(std::move(family), plans, init, options.seed);
  run.theta_pre = theta_pre;
  RunLaterStages(run, options.keep_trajectories);
  return run;
}

double ComputeForgetting(const PipelineRun& run) {
  if (!run.complete() || !run.metrics) {
    throw ConfigError("forgetting is undefined for incomplete run " +
                      run.provenance.run_id);
  }
  return run.metrics->delta;
}

std::pair<StagePlan, StagePlan> ComputeMatchedPlans(
    const TaskFamily& /*family*/, int64_t total_budget, double alloc_fraction,
    const ComputeMatchedSettings& settings) {
  if (total_budget <= 0) {
    throw ConfigError("total budget must be positive");
  }
  if (!(alloc_fraction >= 0.0 && alloc_fraction <= 1.0)) {
    throw ConfigError("allocation fraction must lie in [0, 1], got " +
                      FormatDouble(alloc_fraction));
  }
  const int64_t length = settings.pretrain.max_steps;
  const int64_t exposure =
      std::llround(alloc_fraction * static_cast<double>(total_budget));
  if (length <= 0 || exposure > length) {
    throw ConfigError("pretraining length " + std::to_string(length) +
                      " cannot absorb " + std::to_string(exposure) +
                      " specialized exposure steps");
  }
  const double mix =
      static_cast<double>(exposure) / static_cast<double>(length);
  StagePlan pre = MakePretrainPlan(mix, settings.pretrain, length);
  StagePlan post =
      MakePosttrainPlan(0.0, settings.posttrain, total_budget - exposure);
  pre.Validate();
  post.Validate();
  return {pre, post};
}

size_t SweepGrid::size() const {
  return mix_fractions.size() * eta2.size() * ridge_lambda.size() *
         replay_fraction.size() * eta3.size() * steps3.size();
}

namespace {

// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <typename Fn>
void ParallelFor(size_t count, int threads, Fn fn) {
  const size_t workers =
      std::min(count, static_cast<size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace

SweepResult RunSweep(std::shared_ptr<const TaskFamily> family,
                     const SweepGrid& grid, const SweepBase& base,
                     const NetworkState& init, const SweepOptions& options) {
  if (!family) throw ConfigError("sweep needs a task family");
  if (grid.size() == 0) {
    throw ConfigError("sweep grid is empty: every axis needs a value");
  }
  const std::string config_hash =
      ExperimentHash(*family, init, options.seed);

  // Plan every grid point first so skipped run ids never train.
  struct Planned {
    size_t mix_index;
    std::array<StagePlan, 3> plans;
  };
  std::vector<Planned> planned;
  for (size_t m = 0; m < grid.mix_fractions.size(); ++m) {
    for (double eta2 : grid.eta2) {
      for (double lambda : grid.ridge_lambda) {
        for (double replay : grid.replay_fraction) {
          for (double eta3 : grid.eta3) {
            for (int64_t steps3 : grid.steps3) {
              std::array<StagePlan, 3> plans{base.pretrain, base.posttrain,
                                             base.finetune};
              plans[0].mix_fraction = grid.mix_fractions[m];
              plans[1].settings.eta = eta2;
              plans[1].settings.ridge_lambda = lambda;
              plans[1].replay_fraction = replay;
              plans[2].settings.eta = eta3;
              plans[2].budget_steps = steps3;
              ValidatePlans(plans);
              // Surface learning-rate violations before any training.
              for (const StagePlan& plan : plans) {
                TrainConfig::Create(WithBudget(plan), init.Product());
              }
              if (options.skip_run_ids.count(RunIdOf(config_hash, plans))) {
                continue;
              }
              planned.push_back({m, plans});
            }
          }
        }
      }
    }
  }

  // One Stage-1 checkpoint per mix fraction that still has work.
  std::vector<char> needed(grid.mix_fractions.size(), 0);
  for (const Planned& p : planned) needed[p.mix_index] = 1;
  std::vector<std::optional<NetworkState>> pretrained(
      grid.mix_fractions.size());
  std::vector<std::string> pretrain_failure(grid.mix_fractions.size());
  std::vector<size_t> to_pretrain;
  for (size_t m = 0; m < needed.size(); ++m) {
    if (needed[m]) to_pretrain.push_back(m);
  }
  ParallelFor(to_pretrain.size(), options.threads, [&](size_t i) {
    const size_t m = to_pretrain[i];
    StagePlan plan = base.pretrain;
    plan.mix_fraction = grid.mix_fractions[m];
    try {
      pretrained[m] = RunPretrain(*family, plan, init, false).final_state;
    } catch (const DivergenceError& e) {
      pretrain_failure[m] = e.what();
    }
  });

  SweepResult result;
  result.pretrain_executions = static_cast<int64_t>(to_pretrain.size());
  result.runs.resize(planned.size());
  PipelineOptions run_options;
  run_options.seed = options.seed;
  ParallelFor(planned.size(), options.threads, [&](size_t i) {
    const Planned& p = planned[i];
    if (pretrained[p.mix_index]) {
      result.runs[i] = RunFromPretrained(family, p.plans, init,
                                         *pretrained[p.mix_index],
                                         run_options);
    } else {
      PipelineRun run = NewRun(family, p.plans, init, options.seed);
      run.status = RunStatus::kDiverged;
      run.failed_stage = StageId::kPretrain;
      run.failure = pretrain_failure[p.mix_index];
      result.runs[i] = std::move(run);
    }
  });
  std::stable_sort(result.runs.begin(), result.runs.end(),
                   [](const PipelineRun& a, const PipelineRun& b) {
                     return a.provenance.run_id < b.provenance.run_id;
                   });
  return result;
}

}  // namespace forgetlab
