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

// Experiment configuration files. Sections and keys (all optional; missing
// keys take the reference-family defaults, unknown keys are errors):
//
//   [family]    n k sigma_inv sigma_pre_inc sigma_post_inc sigma_ft_inc
//               beta c_mis basis(identity|random_orthogonal) basis_seed
//               validate
//   [run]       seed tau threads output_dir trajectories
//   [pretrain]  mix_fraction eta steps gamma stop plateau_threshold
//               plateau_patience snapshot_every
//   [posttrain] replay_fraction ridge_lambda eta steps gamma stop ...
//   [finetune]  eta steps gamma stop ...
//   [sweep]     mix_fractions eta2 ridge_lambda replay_fraction eta3 steps3
//   [verify]    checks alpha epsilon literal_unmixed learned_fraction
//               unlearned_threshold pretrain_eta pretrain_steps post_eta
//               post_lambda post_steps ft_eta ft_steps frozen_steps

#ifndef FORGETLAB_EXPERIMENT_CONFIG_H_
#define FORGETLAB_EXPERIMENT_CONFIG_H_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forgetlab/pipeline.h"
#include "forgetlab/spectral_tasks.h"
#include "forgetlab/theorems.h"

namespace forgetlab {

struct VerifySelection {
  // Subset of: theorem1 theorem2 theorem3 frozen sequential.
  std::vector<std::string> checks;
  double alpha = 0.5;
  Theorem1Settings theorem1;
  FinetuneCheckSettings finetune;  // .posttrain drives the theorem2 check
  int64_t frozen_steps = 10'000;
};

struct ExperimentConfig {
  std::shared_ptr<const TaskFamily> family;
  uint64_t seed = 0;
  double tau = 12.0;
  int threads = 1;
  std::string output_dir;  // empty: use the environment or the default
  bool trajectories = false;
  std::array<StagePlan, 3> plans;
  std::optional<SweepGrid> sweep;
  VerifySelection verify;

  NetworkState InitialState() const;
};

inline constexpr char kVerifyCheckNames[][12] = {
    "theorem1", "theorem2", "theorem3", "frozen", "sequential"};

// Throws ConfigError (with the offending section/key) on any problem.
// seed_override replaces [run] seed before anything depends on it.
ExperimentConfig ParseExperimentConfig(
    const std::string& text, std::optional<uint64_t> seed_override = {});
ExperimentConfig LoadExperimentConfig(
    const std::string& path, std::optional<uint64_t> seed_override = {});

// Canonical rendering of every parsed field; equal texts mean equal configs.
std::string CanonicalConfigText(const ExperimentConfig& config);

}  // namespace forgetlab

#endif  // FORGETLAB_EXPERIMENT_CONFIG_H_
