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

#include "forgetlab/linear_net.h"

#include <cmath>
#include <random>

#include "forgetlab/errors.h"
#include "forgetlab/numeric_format.h"

namespace forgetlab {

NetworkState InitScaledIdentity(int n, double tau) {
  if (!(tau > 0.0)) throw ConfigError("init scale requires tau > 0");
  const double scale = std::exp(-tau);
  NetworkState state;
  state.w1 = scale * Eigen::MatrixXd::Identity(n, n);
  state.w2 = state.w1;
  return state;
}

NetworkState InitFromSpectrum(const SpectralBasis& basis,
                              const Eigen::VectorXd& spectrum) {
  if (spectrum.size() != basis.u.rows()) {
    throw ConfigError("spectrum length does not match the basis");
  }
  if ((spectrum.array() < 0.0).any()) {
    throw ConfigError("spectrum entries must be non-negative");
  }
  const Eigen::VectorXd root = spectrum.cwiseSqrt();
  NetworkState state;
  state.w1 = basis.u * root.asDiagonal();
  state.w2 = root.asDiagonal() * basis.v.transpose();
  return state;
}

double LearningRateBoundValue(const OptimizerSettings& settings) {
  return 4.0 * settings.eta * (settings.ridge_lambda + 2.0) *
         settings.gamma_bound;
}

TrainConfig TrainConfig::Create(const OptimizerSettings& settings,
                                std::optional<Eigen::MatrixXd> ridge_anchor) {
  if (!(settings.eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(settings.ridge_lambda >= 0.0)) {
    throw ConfigError("ridge_lambda must be non-negative");
  }
  if (!(settings.gamma_bound > 0.0)) {
    throw ConfigError("gamma_bound must be positive");
  }
  if (settings.max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (settings.snapshot_every < 1) {
    throw ConfigError("snapshot cadence must be >= 1");
  }
  if (settings.stop_rule.kind == StopRule::Kind::kLossPlateau &&
      settings.stop_rule.patience < 1) {
    throw ConfigError("plateau patience must be >= 1");
  }
  if (!(LearningRateBoundValue(settings) < 1.0)) {
    throw ConfigError(
        "learning-rate bound violated: 4*eta*(lambda+2)*Gamma = " +
        FormatDouble(LearningRateBoundValue(settings)) + " must be < 1");
  }
  if (settings.ridge_lambda > 0.0 && !ridge_anchor.has_value()) {
    throw ConfigError("ridge_lambda > 0 requires a ridge anchor");
  }
  return TrainConfig(settings, std::move(ridge_anchor));
}

AlignedSpectrum ComputeAlignedSpectrum(const NetworkState& state,
                                       const SpectralBasis& basis) {
  const Eigen::MatrixXd aligned =
      basis.u.transpose() * state.Product() * basis.v;
  AlignedSpectrum out;
  out.diag = aligned.diagonal();
  Eigen::MatrixXd off = aligned;
  off.diagonal().setZero();
  out.offdiag_norm = off.norm();
  return out;
}

namespace {

// (theta - A) V, the residual expressed in the input eigenbasis.
Eigen::MatrixXd ResidualInInputBasis(const NetworkState& state,
                                     const StageDistribution& dist,
                                     const SpectralBasis& basis) {
  if (dist.n() != state.n() || basis.v.rows() != state.n()) {
    throw ConfigError("dimension mismatch between state and distribution");
  }
  return (state.Product() - TargetMap(basis, dist)) * basis.v;
}

}  // namespace

double PopulationLoss(const NetworkState& state, const StageDistribution& dist,
                      const SpectralBasis& basis) {
  const Eigen::MatrixXd residual = ResidualInInputBasis(state, dist, basis);
  double loss = 0.0;
  for (int j = 0; j < residual.cols(); ++j) {
    const double variance = dist.input_variances(j);
    if (variance == 0.0) continue;
    loss += variance * residual.col(j).squaredNorm();
  }
  return loss;
}

double PopulationLoss(const NetworkState& state, const StageDistribution& dist,
                      const TaskFamily& family) {
  return PopulationLoss(state, dist, family.basis);
}

Gradients PopulationGradient(const NetworkState& state,
                             const StageDistribution& dist,
                             const SpectralBasis& basis,
                             const std::optional<Ridge>& ridge) {
  // dL/dtheta = 2 (theta - A) Sigma_x with Sigma_x = V diag(v) V^T.
  Eigen::MatrixXd d_theta =
      2.0 * ResidualInInputBasis(state, dist, basis) *
      dist.input_variances.asDiagonal() * basis.v.transpose();
  if (ridge.has_value() && ridge->lambda > 0.0) {
    if (ridge->anchor.rows() != state.n() ||
        ridge->anchor.cols() != state.n()) {
      throw ConfigError("ridge anchor dimension mismatch");
    }
    d_theta += 2.0 * ridge->lambda * (state.Product() - ridge->anchor);
  }
  Gradients grads;
  grads.w1 = d_theta * state.w2.transpose();
  grads.w2 = state.w1.transpose() * d_theta;
  return grads;
}

Gradients PopulationGradient(const NetworkState& state,
                             const StageDistribution& dist,
                             const TaskFamily& family,
                             const std::optional<Ridge>& ridge) {
  return PopulationGradient(state, dist, family.basis, ridge);
}

namespace {

std::optional<Ridge> RidgeOf(const TrainConfig& config) {
  if (config.ridge_lambda() > 0.0) {
    return Ridge{config.ridge_lambda(), *config.ridge_anchor()};
  }
  return std::nullopt;
}

void CheckFinite(const NetworkState& state) {
  if (!state.w1.allFinite() || !state.w2.allFinite()) {
    throw DivergenceError(
        "non-finite parameters at step " + std::to_string(state.step),
        state.step);
  }
}

}  // namespace

NetworkState GradientStep(const NetworkState& state,
                          const StageDistribution& dist,
                          const SpectralBasis& basis,
                          const TrainConfig& config) {
  const Gradients grads =
      PopulationGradient(state, dist, basis, RidgeOf(config));
  NetworkState next;
  next.w1 = state.w1 - config.eta() * grads.w1;
  next.w2 = state.w2 - config.eta() * grads.w2;
  next.step = state.step + 1;
  CheckFinite(next);
  return next;
}

NetworkState GradientStep(const NetworkState& state,
                          const StageDistribution& dist,
                          const TaskFamily& family,
                          const TrainConfig& config) {
  return GradientStep(state, dist, family.basis, config);
}

namespace {

Snapshot TakeSnapshot(const NetworkState& state, const SpectralBasis& basis,
                      const std::vector<StageDistribution>& probes) {
  Snapshot snap;
  snap.step = state.step;
  snap.probe_losses.reserve(probes.size());
  for (const StageDistribution& probe : probes) {
    snap.probe_losses.push_back(PopulationLoss(state, probe, basis));
  }
  const AlignedSpectrum aligned = ComputeAlignedSpectrum(state, basis);
  snap.aligned_diag = aligned.diag;
  snap.offdiag_norm = aligned.offdiag_norm;
  return snap;
}

}  // namespace

Trajectory Train(const NetworkState& initial, const StageDistribution& dist,
                 const SpectralBasis& basis, const TrainConfig& config,
                 const std::vector<StageDistribution>& probes) {
  const OptimizerSettings& settings = config.settings();
  const int64_t cadence = settings.snapshot_every;
  const bool plateau = settings.stop_rule.kind == StopRule::Kind::kLossPlateau;

  Trajectory trajectory;
  trajectory.snapshot_every = cadence;
  NetworkState state = initial;
  double previous_loss = 0.0;
  int stalled = 0;
  for (int64_t t = 0;; ++t) {
    if (t % cadence == 0) {
      trajectory.snapshots.push_back(TakeSnapshot(state, basis, probes));
      if (plateau) {
        const double loss = PopulationLoss(state, dist, basis);
        if (t > 0) {
          const double scale = std::max(std::abs(previous_loss), 1e-300);
          const double improvement = (previous_loss - loss) / scale;
          stalled = improvement < settings.stop_rule.threshold ? stalled + 1
                                                                : 0;
          if (stalled >= settings.stop_rule.patience) {
            trajectory.stopped_by_plateau = true;
            break;
          }
        }
        previous_loss = loss;
      }
    }
    if (t >= settings.max_steps) break;
    state = GradientStep(state, dist, basis, config);
  }
  trajectory.final_state = std::move(state);
  return trajectory;
}

Trajectory Train(const NetworkState& initial, const StageDistribution& dist,
                 const TaskFamily& family, const TrainConfig& config,
                 const std::vector<StageDistribution>& probes) {
  return Train(initial, dist, family.basis, config, probes);
}

std::string TrajectoryToJsonLines(const Trajectory& trajectory) {
  std::string out;
  for (const Snapshot& snap : trajectory.snapshots) {
    out += "{\"step\":" + std::to_string(snap.step) + ",\"losses\":[";
    for (size_t i = 0; i < snap.probe_losses.size(); ++i) {
      if (i > 0) out += ',';
      out += FormatDouble(snap.probe_losses[i]);
    }
    out += "],\"aligned_diag\":[";
    for (Eigen::Index i = 0; i < snap.aligned_diag.size(); ++i) {
      if (i > 0) out += ',';
      out += FormatDouble(snap.aligned_diag(i));
    }
    out += "],\"offdiag_norm\":" + FormatDouble(snap.offdiag_norm) + "}\n";
  }
  return out;
}

Eigen::VectorXd IdealizedDiagStep(const Eigen::VectorXd& sigma,
                                  const Eigen::VectorXd& target, double eta,
                                  double lambda,
                                  const Eigen::VectorXd& sigma0) {
  if (sigma.size() != target.size() || sigma.size() != sigma0.size()) {
    throw ConfigError("diagonal step vectors must have equal length");
  }
  Eigen::VectorXd next(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma(i);
    next(i) = s - 2.0 * eta * s * (s * s - target(i) * target(i)) +
              2.0 * eta * lambda * (s * s - sigma0(i) * sigma0(i));
  }
  return next;
}

Eigen::VectorXd DerivedDiagStep(const Eigen::VectorXd& sigma,
                                const Eigen::VectorXd& target, double eta,
                                double lambda, const Eigen::VectorXd& sigma0,
                                const Eigen::VectorXd& variance) {
  if (sigma.size() != target.size() || sigma.size() != sigma0.size() ||
      sigma.size() != variance.size()) {
    throw ConfigError("diagonal step vectors must have equal length");
  }
  Eigen::VectorXd next(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma(i);
    const double factor =
        1.0 - 2.0 * eta *
                  (variance(i) * (s - target(i)) + lambda * (s - sigma0(i)));
    next(i) = s * factor * factor;
  }
  return next;
}

NetworkState StochasticStep(const NetworkState& state,
                            const StageDistribution& dist,
                            const SpectralBasis& basis,
                            const TrainConfig& config, int64_t batch,
                            double hidden_mask_rate, uint64_t seed) {
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (!(hidden_mask_rate >= 0.0 && hidden_mask_rate < 1.0)) {
    throw ConfigError("hidden_mask_rate must lie in [0, 1)");
  }
  const int n = state.n();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution keep(1.0 - hidden_mask_rate);

  Eigen::MatrixXd z(n, batch);
  for (int64_t b = 0; b < batch; ++b) {
    for (int i = 0; i < n; ++i) z(i, b) = normal(rng);
  }
  const Eigen::MatrixXd x =
      basis.v * (dist.input_variances.cwiseSqrt().asDiagonal() * z);
  const Eigen::MatrixXd y = TargetMap(basis, dist) * x;

  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(n, batch);
  if (hidden_mask_rate > 0.0) {
    const double scale = 1.0 / (1.0 - hidden_mask_rate);
    for (int64_t b = 0; b < batch; ++b) {
      for (int i = 0; i < n; ++i) mask(i, b) = keep(rng) ? scale : 0.0;
    }
  }
  const Eigen::MatrixXd hidden = mask.cwiseProduct(state.w2 * x);
  const Eigen::MatrixXd residual = state.w1 * hidden - y;
  const double inv_batch = 1.0 / static_cast<double>(batch);

  Eigen::MatrixXd grad_w1 = 2.0 * inv_batch * residual * hidden.transpose();
  Eigen::MatrixXd grad_w2 =
      2.0 * inv_batch *
      mask.cwiseProduct(state.w1.transpose() * residual) * x.transpose();
  if (const std::optional<Ridge> ridge = RidgeOf(config)) {
    const Eigen::MatrixXd d_theta =
        2.0 * ridge->lambda * (state.Product() - ridge->anchor);
    grad_w1 += d_theta * state.w2.transpose();
    grad_w2 += state.w1.transpose() * d_theta;
  }
  NetworkState next;
  next.w1 = state.w1 - config.eta() * grad_w1;
  next.w2 = state.w2 - config.eta() * grad_w2;
  next.step = state.step + 1;
  CheckFinite(next);
  return next;
}

}  // namespace forgetlab
