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

// Two-layer linear network theta = W1 W2 trained on exact population
// squared losses. Everything here is deterministic; the only sampling path is
// StochasticStep.

#ifndef FORGETLAB_LINEAR_NET_H_
#define FORGETLAB_LINEAR_NET_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forgetlab/spectral_tasks.h"

namespace forgetlab {

struct NetworkState {
  Eigen::MatrixXd w1;
  Eigen::MatrixXd w2;
  int64_t step = 0;

  int n() const { return static_cast<int>(w1.rows()); }
  // Never cached; always W1 * W2 of the current factors.
  Eigen::MatrixXd Product() const { return w1 * w2; }
};

// W1 = W2 = exp(-tau) I. Throws ConfigError unless tau > 0.
NetworkState InitScaledIdentity(int n, double tau);

// W1 = U diag(sqrt(s)), W2 = diag(sqrt(s)) V^T.
NetworkState InitFromSpectrum(const SpectralBasis& basis,
                              const Eigen::VectorXd& spectrum);

struct StopRule {
  enum class Kind { kFixedSteps, kLossPlateau };
  Kind kind = Kind::kFixedSteps;
  // Relative improvement of the training loss between probe intervals
  // below which an interval counts as stalled.
  double threshold = 1e-9;
  int patience = 10;

  static StopRule FixedSteps() { return {}; }
  static StopRule LossPlateau(double threshold = 1e-9, int patience = 10) {
    return {Kind::kLossPlateau, threshold, patience};
  }
};

// Optimizer hyperparameters without the ridge anchor, which is usually a
// checkpoint only known once the previous stage has run.
struct OptimizerSettings {
  double eta = 0.02;
  double ridge_lambda = 0.0;
  int64_t max_steps = 1000;
  StopRule stop_rule;
  double gamma_bound = 5.0;
  int64_t snapshot_every = 50;
};

class TrainConfig {
 public:
  // Throws ConfigError if 4 eta (lambda + 2) Gamma >= 1, if lambda > 0
  // without an anchor, or on non-positive eta / gamma / cadence.
  static TrainConfig Create(const OptimizerSettings& settings,
                            std::optional<Eigen::MatrixXd> ridge_anchor = {});

  const OptimizerSettings& settings() const { return settings_; }
  double eta() const { return settings_.eta; }
  double ridge_lambda() const { return settings_.ridge_lambda; }
  const std::optional<Eigen::MatrixXd>& ridge_anchor() const {
    return ridge_anchor_;
  }

 private:
  TrainConfig(const OptimizerSettings& settings,
              std::optional<Eigen::MatrixXd> anchor)
      : settings_(settings), ridge_anchor_(std::move(anchor)) {}

  OptimizerSettings settings_;
  std::optional<Eigen::MatrixXd> ridge_anchor_;
};

// 4 eta (lambda + 2) Gamma; TrainConfig requires this to be < 1.
double LearningRateBoundValue(const OptimizerSettings& settings);

struct AlignedSpectrum {
  Eigen::VectorXd diag;
  double offdiag_norm = 0.0;
};

// Diagonal of U^T theta V and the Frobenius norm of everything else.
AlignedSpectrum ComputeAlignedSpectrum(const NetworkState& state,
                                       const SpectralBasis& basis);

// tr((theta - A) Sigma_x (theta - A)^T), A = U diag(target) V^T,
// Sigma_x = V diag(variances) V^T.
double PopulationLoss(const NetworkState& state, const StageDistribution& dist,
                      const SpectralBasis& basis);
double PopulationLoss(const NetworkState& state, const StageDistribution& dist,
                      const TaskFamily& family);

struct Ridge {
  double lambda = 0.0;
  Eigen::MatrixXd anchor;
};

struct Gradients {
  Eigen::MatrixXd w1;
  Eigen::MatrixXd w2;
};

// Exact gradients of PopulationLoss (+ lambda ||theta - anchor||_F^2).
Gradients PopulationGradient(const NetworkState& state,
                             const StageDistribution& dist,
                             const SpectralBasis& basis,
                             const std::optional<Ridge>& ridge = {});
Gradients PopulationGradient(const NetworkState& state,
                             const StageDistribution& dist,
                             const TaskFamily& family,
                             const std::optional<Ridge>& ridge = {});

// One simultaneous update of both factors from the pre-step gradients.
// Throws DivergenceError if the result has a non-finite entry.
NetworkState GradientStep(const NetworkState& state,
                          const StageDistribution& dist,
                          const SpectralBasis& basis,
                          const TrainConfig& config);
NetworkState GradientStep(const NetworkState& state,
                          const StageDistribution& dist,
                          const TaskFamily& family, const TrainConfig& config);

struct Snapshot {
  int64_t step = 0;
  std::vector<double> probe_losses;  // one per probe distribution
  Eigen::VectorXd aligned_diag;
  double offdiag_norm = 0.0;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;  // steps 0, c, 2c, ... (c = cadence)
  NetworkState final_state;
  int64_t snapshot_every = 50;
  bool stopped_by_plateau = false;
};

// Iterates GradientStep until the stop rule fires or max_steps is reached.
// Snapshots are taken at every multiple of the cadence, including step 0.
// The plateau rule is evaluated on the training loss at the same cadence.
Trajectory Train(const NetworkState& initial, const StageDistribution& dist,
                 const SpectralBasis& basis, const TrainConfig& config,
                 const std::vector<StageDistribution>& probes = {});
Trajectory Train(const NetworkState& initial, const StageDistribution& dist,
                 const TaskFamily& family, const TrainConfig& config,
                 const std::vector<StageDistribution>& probes = {});

// One line per snapshot: {"step":..,"losses":[..],"aligned_diag":[..],
// "offdiag_norm":..} with 17 significant digits.
std::string TrajectoryToJsonLines(const Trajectory& trajectory);

// The scalar recursion exactly as printed for the idealized setting:
//   s' = s - 2 eta s (s^2 - t^2) + 2 eta lambda (s^2 - s0^2).
Eigen::VectorXd IdealizedDiagStep(const Eigen::VectorXd& sigma,
                                  const Eigen::VectorXd& target, double eta,
                                  double lambda,
                                  const Eigen::VectorXd& sigma0);

// Product-space recursion obtained from gradient descent on
//   v (a b - t)^2 + lambda (a b - s0)^2
// with balanced factors a = b = sqrt(s):
//   s' = s (1 - 2 eta [v (s - t) + lambda (s - s0)])^2.
// Matches the full matrix dynamics for identity bases and balanced
// diagonal initializations.
Eigen::VectorXd DerivedDiagStep(const Eigen::VectorXd& sigma,
                                const Eigen::VectorXd& target, double eta,
                                double lambda, const Eigen::VectorXd& sigma0,
                                const Eigen::VectorXd& variance);

// Minibatch SGD on inputs sampled from the Gaussian implied by dist, with
// optional inverted-dropout masking of the hidden layer W2 x. Deterministic
// given seed.
NetworkState StochasticStep(const NetworkState& state,
                            const StageDistribution& dist,
                            const SpectralBasis& basis,
                            const TrainConfig& config, int64_t batch,
                            double hidden_mask_rate, uint64_t seed);

}  // namespace forgetlab

#endif  // FORGETLAB_LINEAR_NET_H_
