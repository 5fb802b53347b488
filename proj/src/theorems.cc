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

#include "forgetlab/theorems.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "forgetlab/errors.h"
#include "forgetlab/numeric_format.h"

namespace forgetlab {
namespace {

double Lookup(const std::vector<std::pair<std::string, double>>& entries,
              const std::string& name) {
  for (const auto& [key, value] : entries) {
    if (key == name) return value;
  }
  throw std::out_of_range("no entry named " + name);
}

bool BitwiseEqual(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

double MaxAbs(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

double TheoremReport::Measured(const std::string& name) const {
  return Lookup(measured, name);
}

double TheoremReport::Threshold(const std::string& name) const {
  return Lookup(thresholds, name);
}

Eigen::VectorXd ScalarFixedPoint(const Eigen::VectorXd& start,
                                 const StageDistribution& dist, double eta,
                                 double lambda, const Eigen::VectorXd& anchor,
                                 double tol, int64_t max_iters) {
  const int n = dist.n();
  if (start.size() != n || anchor.size() != n) {
    throw ConfigError("fixed-point vectors must match the distribution");
  }
  const Eigen::VectorXd& v = dist.input_variances;
  const Eigen::VectorXd& t = dist.target_spectrum;
  Eigen::VectorXd s = start;
  // A coordinate whose drive v t + lambda s0 is non-positive decays toward
  // zero only sublinearly; zero is its fixed point.
  std::vector<char> active(n, 0);
  for (int i = 0; i < n; ++i) {
    if (s(i) == 0.0) continue;
    if (v(i) * t(i) + lambda * anchor(i) <= 0.0 && v(i) + lambda > 0.0) {
      s(i) = 0.0;
      continue;
    }
    active[i] = 1;
  }
  auto residual = [&](int i) {
    return std::abs(v(i) * (s(i) - t(i)) + lambda * (s(i) - anchor(i)));
  };
  for (int64_t iter = 0;; ++iter) {
    bool converged = true;
    for (int i = 0; i < n; ++i) {
      if (active[i] && residual(i) > tol) converged = false;
    }
    if (converged) return s;
    if (iter >= max_iters) {
      throw DivergenceError("scalar fixed point did not converge", iter);
    }
    s = DerivedDiagStep(s, t, eta, lambda, anchor, v);
    if (!s.allFinite()) {
      throw DivergenceError("scalar fixed-point iteration diverged", iter);
    }
  }
}

Eigen::VectorXd IdealizedSpectrum(const TaskFamily& family,
                                  CheckpointKind kind, double alpha,
                                  bool literal_unmixed) {
  const FeaturePartition& p = family.partition;
  const TaskSpectra& s = family.spectra;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p.n());
  out.head(p.d_invariant()) = s.sigma_inv;
  if (kind == CheckpointKind::kMixed) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw ConfigError("mixed checkpoint needs alpha in (0, 1], got " +
                        FormatDouble(alpha));
    }
    out.tail(p.k()).setConstant(alpha * s.beta);
  } else {
    out.segment(p.inconsistent_begin(), p.k()) =
        literal_unmixed ? s.sigma_post_inc : s.sigma_pre_inc;
  }
  return out;
}

NetworkState IdealizedCheckpoint(const TaskFamily& family, CheckpointKind kind,
                                 double alpha, bool literal_unmixed) {
  return InitFromSpectrum(
      family.basis, IdealizedSpectrum(family, kind, alpha, literal_unmixed));
}

Eigen::VectorXd PosttrainTarget(const TaskFamily& family,
                                CheckpointKind kind) {
  const FeaturePartition& p = family.partition;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p.n());
  out.head(p.d_invariant()) = family.spectra.sigma_inv;
  if (kind == CheckpointKind::kMixed) {
    out.tail(p.k()).setConstant(family.spectra.beta);
  } else {
    out.segment(p.inconsistent_begin(), p.k()) = family.spectra.sigma_post_inc;
  }
  return out;
}

TheoremReport VerifyTheorem1(const TaskFamily& family, double alpha,
                             const Theorem1Settings& settings) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1]");
  }
  OptimizerSettings opt;
  opt.eta = settings.eta;
  opt.max_steps = settings.steps;
  opt.gamma_bound = settings.gamma_bound;
  opt.snapshot_every = std::max<int64_t>(settings.steps, 1);
  const TrainConfig config = TrainConfig::Create(opt);
  const NetworkState init = InitScaledIdentity(family.n(), settings.tau);
  const StageDistribution mixed_dist =
      MixDistributions(family.pre, family.post, alpha);

  const NetworkState mixed =
      Train(init, mixed_dist, family, config).final_state;
  const NetworkState unmixed =
      Train(init, family.pre, family, config).final_state;
  const Eigen::VectorXd mixed_diag =
      ComputeAlignedSpectrum(mixed, family.basis).diag;
  const Eigen::VectorXd unmixed_diag =
      ComputeAlignedSpectrum(unmixed, family.basis).diag;
  Eigen::VectorXd oracle = ScalarFixedPoint(
      ComputeAlignedSpectrum(init, family.basis).diag, mixed_dist,
      settings.eta, 0.0, Eigen::VectorXd::Zero(family.n()));
  // Without cross-covariance a coordinate has nothing to learn; its start
  // value is stationary but is not a learned target.
  const Eigen::VectorXd cross = CrossCovarianceSpectrum(mixed_dist);
  for (int i = 0; i < family.n(); ++i) {
    if (!(cross(i) > 0.0)) oracle(i) = 0.0;
  }

  const FeaturePartition& p = family.partition;
  const int k = p.k();
  const int b = p.specialized_begin();
  double min_ratio = std::numeric_limits<double>::infinity();
  double min_target = std::numeric_limits<double>::infinity();
  for (int i = b; i < b + k; ++i) {
    min_target = std::min(min_target, oracle(i));
    min_ratio = std::min(min_ratio, oracle(i) > 0.0
                                        ? mixed_diag(i) / oracle(i)
                                        : 0.0);
  }

  TheoremReport report;
  report.theorem_id = "theorem1_early_exposure";
  report.oracle =
      "derived scalar dynamics on the mixed distribution iterated to a "
      "1e-12 stationarity residual from the initial aligned spectrum";
  report.measured = {
      {"mixed_specialized_min", mixed_diag.tail(k).minCoeff()},
      {"mixed_specialized_min_ratio", min_ratio},
      {"oracle_specialized_min_target", min_target},
      {"unmixed_specialized_max_abs", MaxAbs(unmixed_diag.tail(k))},
  };
  report.thresholds = {
      {"learned_fraction", settings.learned_fraction},
      {"unlearned_threshold", settings.unlearned_threshold},
  };
  const bool learned = min_target > 0.0 &&
                       min_ratio >= settings.learned_fraction;
  const bool not_learned =
      MaxAbs(unmixed_diag.tail(k)) <= settings.unlearned_threshold;
  report.pass = learned && not_learned;
  if (!(min_target > 0.0)) {
    report.notes.push_back(
        "oracle target is zero: the mixed arm sees no specialized signal");
  }
  return report;
}

double EpsilonUpperBound(const TaskSpectra& spectra) {
  const double denom = 2.0 * spectra.c_mis - 4.0 * spectra.beta;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return spectra.c_mis / denom;
}

void ValidatePosttrainEpsilon(const TaskSpectra& spectra, double epsilon) {
  const double bound = EpsilonUpperBound(spectra);
  if (!(epsilon > 0.0 && epsilon < bound)) {
    throw PreconditionError("epsilon = " + FormatDouble(epsilon) +
                            " violates 0 < epsilon < c_mis / (2 c_mis - "
                            "4 beta) = " +
                            FormatDouble(bound));
  }
}

namespace {

struct PosttrainArm {
  NetworkState start;
  NetworkState end;
  Trajectory trajectory;
  Eigen::VectorXd target;
  Eigen::VectorXd fixed_point;
};

PosttrainArm RunPosttrainArm(const TaskFamily& family, CheckpointKind kind,
                             double alpha,
                             const PosttrainCheckSettings& settings) {
  PosttrainArm arm;
  const Eigen::VectorXd spectrum =
      IdealizedSpectrum(family, kind, alpha, settings.literal_unmixed);
  arm.start = InitFromSpectrum(family.basis, spectrum);
  OptimizerSettings opt;
  opt.eta = settings.eta;
  opt.ridge_lambda = settings.ridge_lambda;
  opt.max_steps = settings.steps;
  opt.gamma_bound = settings.gamma_bound;
  opt.snapshot_every = 1;
  const TrainConfig config = TrainConfig::Create(opt, arm.start.Product());
  arm.trajectory = Train(arm.start, family.post, family, config);
  arm.end = arm.trajectory.final_state;
  arm.target = PosttrainTarget(family, kind);
  arm.fixed_point = ScalarFixedPoint(spectrum, family.post, settings.eta,
                                     settings.ridge_lambda, spectrum);
  return arm;
}

// Largest |entry| over the given block across every snapshot.
double BlockMaxAbsOverTrajectory(const Trajectory& trajectory, int begin,
                                 int count) {
  double out = 0.0;
  for (const Snapshot& snap : trajectory.snapshots) {
    out = std::max(out, MaxAbs(snap.aligned_diag.segment(begin, count)));
  }
  return out;
}

}  // namespace

TheoremReport VerifyTheorem2(const TaskFamily& family, double alpha,
                             const PosttrainCheckSettings& settings) {
  ValidatePosttrainEpsilon(family.spectra, settings.epsilon);
  const PosttrainArm mixed =
      RunPosttrainArm(family, CheckpointKind::kMixed, alpha, settings);
  const PosttrainArm unmixed =
      RunPosttrainArm(family, CheckpointKind::kUnmixed, alpha, settings);
  const FeaturePartition& p = family.partition;
  const int k = p.k();

  const AlignedSpectrum mixed_end =
      ComputeAlignedSpectrum(mixed.end, family.basis);
  const AlignedSpectrum unmixed_end =
      ComputeAlignedSpectrum(unmixed.end, family.basis);
  const double mixed_dev = MaxAbs(mixed_end.diag - mixed.target);
  const double unmixed_dev = MaxAbs(unmixed_end.diag - unmixed.target);
  const double mixed_shift = MaxAbs(mixed.fixed_point - mixed.target);
  const double unmixed_shift = MaxAbs(unmixed.fixed_point - unmixed.target);
  const double mixed_inconsistent = BlockMaxAbsOverTrajectory(
      mixed.trajectory, p.inconsistent_begin(), k);
  const double unmixed_specialized = BlockMaxAbsOverTrajectory(
      unmixed.trajectory, p.specialized_begin(), k);

  TheoremReport report;
  report.theorem_id = "theorem2_posttraining";
  report.oracle =
      "ridge-anchored derived scalar dynamics iterated to a 1e-12 "
      "stationarity residual from each idealized spectrum";
  report.measured = {
      {"mixed_max_deviation", mixed_dev},
      {"unmixed_max_deviation", unmixed_dev},
      {"mixed_offdiag_norm", mixed_end.offdiag_norm},
      {"unmixed_offdiag_norm", unmixed_end.offdiag_norm},
      {"mixed_inconsistent_max_abs_all_steps", mixed_inconsistent},
      {"unmixed_specialized_max_abs_all_steps", unmixed_specialized},
      {"mixed_ridge_shift", mixed_shift},
      {"unmixed_ridge_shift", unmixed_shift},
      {"mixed_oracle_gap", MaxAbs(mixed_end.diag - mixed.fixed_point)},
      {"unmixed_oracle_gap", MaxAbs(unmixed_end.diag - unmixed.fixed_point)},
  };
  report.thresholds = {
      {"epsilon", settings.epsilon},
      {"ridge_shift_max", settings.epsilon / 2.0},
      {"offdiag_tolerance", settings.offdiag_tolerance},
      {"epsilon_upper_bound", EpsilonUpperBound(family.spectra)},
  };
  report.pass = mixed_dev <= settings.epsilon &&
                unmixed_dev <= settings.epsilon &&
                mixed_end.offdiag_norm <= settings.offdiag_tolerance &&
                unmixed_end.offdiag_norm <= settings.offdiag_tolerance &&
                mixed_inconsistent == 0.0 &&
                mixed_shift <= settings.epsilon / 2.0 &&
                unmixed_shift <= settings.epsilon / 2.0;
  if (settings.literal_unmixed) {
    report.notes.push_back("unmixed start uses sigma_post_inc (literal)");
  }
  return report;
}

double UnmixedForgettingLowerBound(const TaskFamily& family, double epsilon) {
  const TaskSpectra& s = family.spectra;
  return family.partition.k() *
         (s.c_mis * s.c_mis - 4.0 * s.beta * epsilon -
          2.0 * s.c_mis * epsilon);
}

void ValidateForgettingEpsilon(const TaskFamily& family, double epsilon) {
  ValidatePosttrainEpsilon(family.spectra, epsilon);
  const TaskSpectra& s = family.spectra;
  const double limit = s.c_mis * s.c_mis / (4.0 * s.beta + 2.0 * s.c_mis);
  if (!(epsilon < limit)) {
    throw PreconditionError(
        "epsilon = " + FormatDouble(epsilon) +
        " violates epsilon < c_mis^2 / (4 beta + 2 c_mis) = " +
        FormatDouble(limit) + "; the forgetting bound would be non-positive");
  }
}

TheoremReport VerifyTheorem3(const TaskFamily& family, double alpha,
                             const FinetuneCheckSettings& settings) {
  const double epsilon = settings.posttrain.epsilon;
  ValidateForgettingEpsilon(family, epsilon);
  const PosttrainArm mixed = RunPosttrainArm(family, CheckpointKind::kMixed,
                                             alpha, settings.posttrain);
  const PosttrainArm unmixed = RunPosttrainArm(
      family, CheckpointKind::kUnmixed, alpha, settings.posttrain);

  OptimizerSettings opt;
  opt.eta = settings.eta;
  opt.max_steps = settings.steps;
  opt.gamma_bound = settings.posttrain.gamma_bound;
  opt.snapshot_every = 1;
  const TrainConfig config = TrainConfig::Create(opt);
  const Trajectory mixed_ft = Train(mixed.end, family.ft, family, config);
  const Trajectory unmixed_ft = Train(unmixed.end, family.ft, family, config);

  auto forgetting = [&](const NetworkState& post, const NetworkState& ft) {
    return PopulationLoss(ft, family.post, family) -
           PopulationLoss(post, family.post, family);
  };
  const double delta_mixed = forgetting(mixed.end, mixed_ft.final_state);
  const double delta_unmixed =
      forgetting(unmixed.end, unmixed_ft.final_state);
  const double bound = UnmixedForgettingLowerBound(family, epsilon);

  // The three mechanisms behind a zero mixed gap, measured separately.
  const FeaturePartition& p = family.partition;
  const Eigen::VectorXd post_diag =
      ComputeAlignedSpectrum(mixed.end, family.basis).diag;
  double invariant_drift = 0.0;
  for (const Snapshot& snap : mixed_ft.snapshots) {
    invariant_drift = std::max(
        invariant_drift, MaxAbs(snap.aligned_diag.head(p.d_invariant()) -
                                post_diag.head(p.d_invariant())));
  }
  const double inconsistent_max = BlockMaxAbsOverTrajectory(
      mixed_ft, p.inconsistent_begin(), p.k());
  const FrozenDirectionReport frozen =
      CheckFrozenDirections(mixed_ft, family.ft);

  TheoremReport report;
  report.theorem_id = "theorem3_forgetting";
  report.oracle =
      "closed-form bound k (c_mis^2 - 4 beta eps - 2 c_mis eps) against "
      "simulated fine-tuning from the post-trained idealized checkpoints";
  report.measured = {
      {"delta_mixed", delta_mixed},
      {"delta_unmixed", delta_unmixed},
      {"mixed_invariant_max_drift", invariant_drift},
      {"mixed_inconsistent_max_abs_all_steps", inconsistent_max},
      {"mixed_specialized_frozen", frozen.pass ? 1.0 : 0.0},
  };
  report.thresholds = {
      {"mixed_tolerance", settings.mixed_tolerance},
      {"unmixed_lower_bound", bound},
      {"epsilon", epsilon},
  };
  report.pass =
      delta_mixed <= settings.mixed_tolerance && delta_unmixed >= bound;
  if (settings.steps == 0) {
    report.notes.push_back("degenerate: no fine-tuning steps were taken");
  }
  return report;
}

FrozenDirectionReport CheckFrozenDirections(const Trajectory& trajectory,
                                            const StageDistribution& dist) {
  FrozenDirectionReport report;
  for (int i = 0; i < dist.n(); ++i) {
    if (dist.input_variances(i) == 0.0) {
      report.zero_variance_coordinates.push_back(i);
    }
  }
  report.vacuous = report.zero_variance_coordinates.empty();
  if (trajectory.snapshots.empty()) return report;
  const Eigen::VectorXd& first = trajectory.snapshots.front().aligned_diag;
  for (int i : report.zero_variance_coordinates) {
    for (const Snapshot& snap : trajectory.snapshots) {
      if (!BitwiseEqual(snap.aligned_diag(i), first(i))) {
        report.moved_coordinates.push_back(i);
        break;
      }
    }
  }
  report.pass = report.moved_coordinates.empty();
  return report;
}

SequentialOrderReport CheckSequentialOrder(
    const Trajectory& trajectory, const StageDistribution& dist,
    const SequentialOrderSettings& settings) {
  if (trajectory.snapshots.empty()) {
    throw ConfigError("sequential order needs a non-empty trajectory");
  }
  const int n = dist.n();
  SequentialOrderReport report;
  report.cross_covariance = CrossCovarianceSpectrum(dist);
  report.fixed_point = ScalarFixedPoint(
      trajectory.snapshots.front().aligned_diag, dist, settings.eta, 0.0,
      Eigen::VectorXd::Zero(n));
  const Eigen::VectorXd& c = report.cross_covariance;

  report.crossing_step.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    for (const Snapshot& snap : trajectory.snapshots) {
      const double s = snap.aligned_diag(i);
      const bool crossed = c(i) > 0.0
                               ? s > 0.5 * report.fixed_point(i)
                               : std::abs(s) > settings.unlearned_threshold;
      if (crossed) {
        report.crossing_step[i] = snap.step;
        break;
      }
    }
    if (report.crossing_step[i] < 0) report.unlearned.push_back(i);
  }

  auto later = [&](int i, int j) {  // true iff i does not cross before j
    const int64_t ti = report.crossing_step[i];
    const int64_t tj = report.crossing_step[j];
    if (ti < 0) return true;
    return tj >= 0 && ti >= tj;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double scale = std::max(std::abs(c(i)), std::abs(c(j)));
      if (c(i) - c(j) <= settings.tie_tolerance * scale) continue;
      // Two coordinates that never cross impose no order.
      if (report.crossing_step[i] < 0 && report.crossing_step[j] < 0) {
        continue;
      }
      if (later(i, j)) report.violations.emplace_back(i, j);
    }
  }
  report.pass = report.violations.empty();
  return report;
}

TheoremReport ToReport(const FrozenDirectionReport& frozen) {
  TheoremReport report;
  report.theorem_id = "frozen_directions";
  report.pass = frozen.pass;
  report.oracle = "bitwise comparison against the first snapshot";
  report.measured = {
      {"zero_variance_coordinates",
       static_cast<double>(frozen.zero_variance_coordinates.size())},
      {"moved_coordinates",
       static_cast<double>(frozen.moved_coordinates.size())},
  };
  report.thresholds = {{"moved_coordinates_max", 0.0}};
  if (frozen.vacuous) {
    report.notes.push_back("no zero-variance coordinates");
  }
  return report;
}

TheoremReport ToReport(const SequentialOrderReport& order) {
  TheoremReport report;
  report.theorem_id = "sequential_order";
  report.pass = order.pass;
  report.oracle =
      "half of the derived scalar fixed point per coordinate; order from "
      "the cross-covariance spectrum";
  for (size_t i = 0; i < order.crossing_step.size(); ++i) {
    report.measured.emplace_back("crossing_step_" + std::to_string(i),
                                 static_cast<double>(order.crossing_step[i]));
  }
  report.measured.emplace_back("violations",
                               static_cast<double>(order.violations.size()));
  report.thresholds = {{"violations_max", 0.0}};
  for (int i : order.unlearned) {
    report.notes.push_back("coordinate " + std::to_string(i) + " unlearned");
  }
  return report;
}

}  // namespace forgetlab
