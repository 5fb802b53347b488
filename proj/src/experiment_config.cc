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

#include "forgetlab/experiment_config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "forgetlab/errors.h"
#include "forgetlab/kv_document.h"
#include "forgetlab/numeric_format.h"

namespace forgetlab {
namespace {

std::vector<std::string> SplitWords(const std::string& text) {
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

std::vector<int64_t> ToSteps(const std::vector<double>& values,
                             const std::string& where) {
  std::vector<int64_t> out;
  for (double v : values) {
    if (!(v >= 0.0) || std::floor(v) != v) {
      throw ConfigError(where + ": step counts must be non-negative integers");
    }
    out.push_back(static_cast<int64_t>(v));
  }
  return out;
}

std::shared_ptr<const TaskFamily> ReadFamily(KeyValueReader& r,
                                             uint64_t seed) {
  const TaskSpectra ref = ReferenceSpectra();
  const char* s = "family";
  const int n = static_cast<int>(r.Int(s, "n", 6));
  const int k = static_cast<int>(r.Int(s, "k", 2));
  const bool is_reference_shape = (n == 6 && k == 2);
  TaskSpectra spectra;
  auto vec = [&](const char* key, const Eigen::VectorXd& fallback) {
    if (r.String(s, key, "").empty()) {
      if (!is_reference_shape) {
        throw ConfigError(std::string("[family] ") + key +
                          " is required when n, k differ from 6, 2");
      }
      return fallback;
    }
    return r.Vector(s, key);
  };
  spectra.sigma_inv = vec("sigma_inv", ref.sigma_inv);
  spectra.sigma_pre_inc = vec("sigma_pre_inc", ref.sigma_pre_inc);
  spectra.sigma_post_inc = vec("sigma_post_inc", ref.sigma_post_inc);
  spectra.sigma_ft_inc = vec("sigma_ft_inc", ref.sigma_ft_inc);
  spectra.beta = r.Double(s, "beta", ref.beta);
  spectra.c_mis = r.Double(s, "c_mis", ref.c_mis);
  const std::string basis = r.String(s, "basis", "identity");
  const uint64_t basis_seed =
      static_cast<uint64_t>(r.Int(s, "basis_seed", static_cast<int64_t>(seed)));
  BasisMode mode;
  if (basis == "identity") {
    mode = BasisMode::Identity();
  } else if (basis == "random_orthogonal") {
    mode = BasisMode::RandomOrthogonal(basis_seed);
  } else {
    throw ConfigError("[family] basis must be identity or random_orthogonal, "
                      "got '" + basis + "'");
  }
  BuildOptions options;
  options.validate_spectra = r.Bool(s, "validate", true);
  return std::make_shared<const TaskFamily>(
      BuildTaskFamily(FeaturePartition(n, k), spectra, mode, options));
}

OptimizerSettings ReadOptimizer(KeyValueReader& r, const char* s,
                                const OptimizerSettings& defaults) {
  OptimizerSettings o = defaults;
  o.eta = r.Double(s, "eta", defaults.eta);
  o.gamma_bound = r.Double(s, "gamma", defaults.gamma_bound);
  o.snapshot_every = r.Int(s, "snapshot_every", defaults.snapshot_every);
  const std::string stop = r.String(s, "stop", "fixed");
  const double threshold = r.Double(s, "plateau_threshold", 1e-9);
  const int64_t patience = r.Int(s, "plateau_patience", 10);
  if (stop == "fixed") {
    o.stop_rule = StopRule::FixedSteps();
  } else if (stop == "plateau") {
    o.stop_rule = StopRule::LossPlateau(threshold, static_cast<int>(patience));
  } else {
    throw ConfigError(std::string("[") + s +
                      "] stop must be fixed or plateau, got '" + stop + "'");
  }
  return o;
}

}  // namespace

NetworkState ExperimentConfig::InitialState() const {
  return InitScaledIdentity(family->n(), tau);
}

ExperimentConfig ParseExperimentConfig(const std::string& text,
                                       std::optional<uint64_t> seed_override) {
  const KeyValueDocument doc = KeyValueDocument::Parse(text);
  KeyValueReader r(doc);
  ExperimentConfig c;

  const int64_t seed = r.Int("run", "seed", 0);
  if (seed < 0) throw ConfigError("[run] seed must be non-negative");
  c.seed = seed_override.value_or(static_cast<uint64_t>(seed));
  c.tau = r.Double("run", "tau", 12.0);
  c.threads = static_cast<int>(r.Int("run", "threads", 1));
  if (c.threads < 1) throw ConfigError("[run] threads must be >= 1");
  c.output_dir = r.String("run", "output_dir", "");
  c.trajectories = r.Bool("run", "trajectories", false);
  c.family = ReadFamily(r, c.seed);
  if (!(c.tau > 0.0)) throw ConfigError("[run] tau must be positive");

  OptimizerSettings base;
  base.eta = 0.02;
  c.plans[0] = MakePretrainPlan(
      r.Double("pretrain", "mix_fraction", 0.5),
      ReadOptimizer(r, "pretrain", base), r.Int("pretrain", "steps", 2000));

  OptimizerSettings post = ReadOptimizer(r, "posttrain", [] {
    OptimizerSettings o;
    o.eta = 0.01;
    return o;
  }());
  post.ridge_lambda = r.Double("posttrain", "ridge_lambda", 0.1);
  c.plans[1] = MakePosttrainPlan(r.Double("posttrain", "replay_fraction", 0.01),
                                 post, r.Int("posttrain", "steps", 300));

  OptimizerSettings ft_defaults;
  ft_defaults.eta = 0.01;
  c.plans[2] = MakeFinetunePlan(ReadOptimizer(r, "finetune", ft_defaults),
                                r.Int("finetune", "steps", 200));
  for (const StagePlan& plan : c.plans) {
    plan.Validate();
    OptimizerSettings check = plan.settings;
    check.max_steps = plan.budget_steps;
    TrainConfig::Create(check, c.InitialState().Product());
  }

  if (r.HasSection("sweep")) {
    SweepGrid g;
    g.mix_fractions = r.DoubleList("sweep", "mix_fractions", {0.0, 0.5});
    g.eta2 = r.DoubleList("sweep", "eta2", {0.005, 0.01, 0.015});
    g.ridge_lambda = r.DoubleList("sweep", "ridge_lambda", {0.1});
    g.replay_fraction = r.DoubleList("sweep", "replay_fraction", {0.01});
    g.eta3 =
        r.DoubleList("sweep", "eta3", {0.001, 0.002, 0.005, 0.01, 0.02});
    g.steps3 = ToSteps(r.DoubleList("sweep", "steps3", {200.0}),
                       "[sweep] steps3");
    c.sweep = g;
  }

  VerifySelection& v = c.verify;
  const std::string checks = r.String(
      "verify", "checks", "theorem1 theorem2 theorem3 frozen sequential");
  v.checks = SplitWords(checks);
  for (const std::string& name : v.checks) {
    const bool known =
        std::any_of(std::begin(kVerifyCheckNames), std::end(kVerifyCheckNames),
                    [&](const char* k) { return name == k; });
    if (!known) throw ConfigError("[verify] unknown check '" + name + "'");
  }
  v.alpha = r.Double("verify", "alpha", 0.5);
  v.theorem1.tau = c.tau;
  v.theorem1.eta = r.Double("verify", "pretrain_eta", 0.02);
  v.theorem1.steps = r.Int("verify", "pretrain_steps", 40'000);
  v.theorem1.learned_fraction = r.Double("verify", "learned_fraction", 0.9);
  v.theorem1.unlearned_threshold =
      r.Double("verify", "unlearned_threshold", 1e-3);
  PosttrainCheckSettings& p = v.finetune.posttrain;
  p.epsilon = r.Double("verify", "epsilon", 0.1);
  p.literal_unmixed = r.Bool("verify", "literal_unmixed", false);
  p.eta = r.Double("verify", "post_eta", 0.02);
  p.ridge_lambda = r.Double("verify", "post_lambda", 0.02);
  p.steps = r.Int("verify", "post_steps", 10'000);
  v.finetune.eta = r.Double("verify", "ft_eta", 0.02);
  v.finetune.steps = r.Int("verify", "ft_steps", 20'000);
  v.frozen_steps = r.Int("verify", "frozen_steps", 10'000);

  r.Finish();
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::string& path,
                                      std::optional<uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseExperimentConfig(buffer.str(), seed_override);
}

std::string CanonicalConfigText(const ExperimentConfig& c) {
  std::string out = SerializeTaskFamilySpec(*c.family);
  out += "seed=" + std::to_string(c.seed) + "\n";
  out += "tau=" + FormatDouble(c.tau) + "\n";
  out += "threads=" + std::to_string(c.threads) + "\n";
  out += "output_dir=" + c.output_dir + "\n";
  out += std::string("trajectories=") + (c.trajectories ? "1" : "0") + "\n";
  for (const StagePlan& plan : c.plans) {
    out += DescribePlan(plan) +
           " snapshot=" + std::to_string(plan.settings.snapshot_every) + "\n";
  }
  if (c.sweep) {
    auto list = [](const std::vector<double>& values) {
      std::string s;
      for (double x : values) s += FormatDouble(x) + " ";
      return s;
    };
    out += "sweep.mix=" + list(c.sweep->mix_fractions) + "\n";
    out += "sweep.eta2=" + list(c.sweep->eta2) + "\n";
    out += "sweep.lambda=" + list(c.sweep->ridge_lambda) + "\n";
    out += "sweep.replay=" + list(c.sweep->replay_fraction) + "\n";
    out += "sweep.eta3=" + list(c.sweep->eta3) + "\n";
    out += "sweep.steps3=";
    for (int64_t s : c.sweep->steps3) out += std::to_string(s) + " ";
    out += "\n";
  }
  const VerifySelection& v = c.verify;
  out += "verify.checks=";
  for (const std::string& name : v.checks) out += name + " ";
  out += "\nverify.alpha=" + FormatDouble(v.alpha);
  out += "\nverify.t1=" + FormatDouble(v.theorem1.eta) + " " +
         std::to_string(v.theorem1.steps) + " " +
         FormatDouble(v.theorem1.learned_fraction) + " " +
         FormatDouble(v.theorem1.unlearned_threshold);
  const PosttrainCheckSettings& p = v.finetune.posttrain;
  out += "\nverify.post=" + FormatDouble(p.eta) + " " +
         FormatDouble(p.ridge_lambda) + " " + std::to_string(p.steps) + " " +
         FormatDouble(p.epsilon) + " " + (p.literal_unmixed ? "1" : "0");
  out += "\nverify.ft=" + FormatDouble(v.finetune.eta) + " " +
         std::to_string(v.finetune.steps) + " " +
         std::to_string(v.frozen_steps) + "\n";
  return out;
}

}  // namespace forgetlab
