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

// Numerical checks of the three forgetting claims, plus two trajectory
// diagnostics: frozen zero-variance directions and the order in which
// directions are learned.

#ifndef FORGETLAB_THEOREMS_H_
#define FORGETLAB_THEOREMS_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "forgetlab/linear_net.h"
#include "forgetlab/spectral_tasks.h"

namespace forgetlab {

struct TheoremReport {
  std::string theorem_id;
  bool pass = false;
  std::vector<std::pair<std::string, double>> measured;
  std::vector<std::pair<std::string, double>> thresholds;
  std::string oracle;  // how the reference values were obtained
  std::vector<std::string> notes;

  // Throws std::out_of_range for an unknown name.
  double Measured(const std::string& name) const;
  double Threshold(const std::string& name) const;
};

// Fixed point of DerivedDiagStep, iterated from `start` until the
// stationarity residual |v (s - t) + lambda (s - s0)| falls below `tol` in
// every coordinate. A coordinate sitting exactly at zero is a fixed point
// (the saddle) and is left there. Throws DivergenceError if the iteration
// leaves the finite range or max_iters is exhausted.
Eigen::VectorXd ScalarFixedPoint(const Eigen::VectorXd& start,
                                 const StageDistribution& dist, double eta,
                                 double lambda, const Eigen::VectorXd& anchor,
                                 double tol = 1e-12,
                                 int64_t max_iters = 50'000'000);

enum class CheckpointKind { kMixed, kUnmixed };

// Aligned spectrum of the idealized pretrained checkpoint.
//   mixed:   (sigma_inv, 0_k, alpha beta 1_k)
//   unmixed: (sigma_inv, sigma_pre_inc, 0_k)
// With literal_unmixed the unmixed variant instead carries sigma_post_inc on
// the inconsistent block, the form found in one statement of the result.
Eigen::VectorXd IdealizedSpectrum(const TaskFamily& family,
                                  CheckpointKind kind, double alpha,
                                  bool literal_unmixed = false);
NetworkState IdealizedCheckpoint(const TaskFamily& family, CheckpointKind kind,
                                 double alpha, bool literal_unmixed = false);

// Post-training targets: (sigma_inv, 0_k, beta 1_k) for the mixed model,
// (sigma_inv, sigma_post_inc, 0_k) for the unmixed model.
Eigen::VectorXd PosttrainTarget(const TaskFamily& family, CheckpointKind kind);

struct Theorem1Settings {
  double tau = 12.0;
  double eta = 0.02;
  int64_t steps = 40'000;
  double learned_fraction = 0.9;
  double unlearned_threshold = 1e-3;
  double gamma_bound = 5.0;
};

// Pretrains from InitScaledIdentity(n, tau) on mix(D_pre, D_post, alpha)
// and on D_pre alone. Passes iff every specialized aligned entry of the
// mixed model reaches learned_fraction of its scalar fixed point and every
// specialized entry of the unmixed model stays below unlearned_threshold.
TheoremReport VerifyTheorem1(const TaskFamily& family, double alpha,
                             const Theorem1Settings& settings = {});

struct PosttrainCheckSettings {
  double eta = 0.02;
  double ridge_lambda = 0.02;
  int64_t steps = 10'000;
  double epsilon = 0.1;
  double offdiag_tolerance = 1e-6;
  bool literal_unmixed = false;
  double gamma_bound = 5.0;
};

// c_mis / (2 c_mis - 4 beta); epsilon must lie strictly below it.
double EpsilonUpperBound(const TaskSpectra& spectra);

// Throws PreconditionError unless 0 < epsilon < EpsilonUpperBound.
void ValidatePosttrainEpsilon(const TaskSpectra& spectra, double epsilon);

// Post-trains both idealized checkpoints on D_post, anchored at themselves.
// Passes iff each aligned diagonal lands within epsilon of its target, the
// off-diagonal mass stays below tolerance, and the mixed model's
// inconsistent entries are exactly zero at every step. Throws
// PreconditionError if epsilon violates EpsilonUpperBound.
TheoremReport VerifyTheorem2(const TaskFamily& family, double alpha,
                             const PosttrainCheckSettings& settings = {});

struct FinetuneCheckSettings {
  PosttrainCheckSettings posttrain;
  double eta = 0.02;
  int64_t steps = 20'000;
  double mixed_tolerance = 1e-8;
};

// k (c_mis^2 - 4 beta eps - 2 c_mis eps).
double UnmixedForgettingLowerBound(const TaskFamily& family, double epsilon);

// Epsilon admissible for the post-training check whose forgetting bound is
// also positive; a non-positive bound would make the check vacuous. Throws
// PreconditionError naming the violated inequality.
void ValidateForgettingEpsilon(const TaskFamily& family, double epsilon);

// Continues from the post-trained checkpoints with unregularized fine-tuning
// on D_ft. Epsilon must pass ValidateForgettingEpsilon. Passes iff
// Delta_mixed <= mixed_tolerance and Delta_unmixed is at least
// UnmixedForgettingLowerBound.
TheoremReport VerifyTheorem3(const TaskFamily& family, double alpha,
                             const FinetuneCheckSettings& settings = {});

struct FrozenDirectionReport {
  bool pass = true;
  std::vector<int> zero_variance_coordinates;
  std::vector<int> moved_coordinates;
  bool vacuous = false;  // no zero-variance coordinates to check
};

// Every aligned entry on a zero-variance coordinate of `dist` must be
// bitwise constant across the trajectory's snapshots.
FrozenDirectionReport CheckFrozenDirections(const Trajectory& trajectory,
                                            const StageDistribution& dist);

struct SequentialOrderSettings {
  double eta = 0.02;
  // Zero-covariance coordinates count as learned once they exceed this.
  double unlearned_threshold = 1e-3;
  // Cross-covariances within this relative distance are treated as tied.
  double tie_tolerance = 1e-12;
};

struct SequentialOrderReport {
  bool pass = true;
  Eigen::VectorXd cross_covariance;
  Eigen::VectorXd fixed_point;
  // Step of the first snapshot past half the fixed point, -1 if never.
  std::vector<int64_t> crossing_step;
  std::vector<int> unlearned;  // never crossed within the trajectory
  std::vector<std::pair<int, int>> violations;  // (larger, smaller) sigma_xy
};

// Learning order check: for sigma_xy_i > sigma_xy_j, i must cross strictly
// before j (a coordinate that never crosses is later than any that does).
// Coordinates with sigma_xy <= 0 cross only by exceeding
// unlearned_threshold in magnitude. Ties are exempt. Exact crossing times
// need snapshots at every step; coarser cadences report snapshot steps.
SequentialOrderReport CheckSequentialOrder(
    const Trajectory& trajectory, const StageDistribution& dist,
    const SequentialOrderSettings& settings = {});

// Uniform views of the two diagnostics for records and the CLI.
TheoremReport ToReport(const FrozenDirectionReport& report);
TheoremReport ToReport(const SequentialOrderReport& report);

}  // namespace forgetlab

#endif  // FORGETLAB_THEOREMS_H_
