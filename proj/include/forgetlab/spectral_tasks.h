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

// Task families for the three-stage pipeline. All three ground-truth maps
// share one singular basis (U, V); each stage is described spectrally by the
// diagonal of its input covariance in the V basis and the target singular
// values it sees. Coordinates are laid out as
//
//   [0, n-2k)     invariant     same target in every stage
//   [n-2k, n-k)   inconsistent  post-training target exceeds pre and ft
//   [n-k, n)      specialized   active only under post-training inputs

#ifndef FORGETLAB_SPECTRAL_TASKS_H_
#define FORGETLAB_SPECTRAL_TASKS_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace forgetlab {

class FeaturePartition {
 public:
  // Throws ConfigError unless k >= 1 and n > 2k.
  FeaturePartition(int n, int k);

  int n() const { return n_; }
  int k() const { return k_; }
  int d_invariant() const { return n_ - 2 * k_; }

  int invariant_begin() const { return 0; }
  int inconsistent_begin() const { return n_ - 2 * k_; }
  int specialized_begin() const { return n_ - k_; }

  bool IsInvariant(int i) const { return i < inconsistent_begin(); }
  bool IsInconsistent(int i) const {
    return i >= inconsistent_begin() && i < specialized_begin();
  }
  bool IsSpecialized(int i) const { return i >= specialized_begin(); }

  bool operator==(const FeaturePartition&) const = default;

 private:
  int n_;
  int k_;
};

struct TaskSpectra {
  Eigen::VectorXd sigma_inv;       // length n-2k
  Eigen::VectorXd sigma_pre_inc;   // length k
  Eigen::VectorXd sigma_post_inc;  // length k
  Eigen::VectorXd sigma_ft_inc;    // length k
  double beta = 0.0;               // specialized target under post-training
  double c_mis = 0.0;              // misalignment gap
};

// Throws ConfigError naming the first violated inequality.
void ValidateSpectra(const FeaturePartition& partition,
                     const TaskSpectra& spectra);

struct SpectralBasis {
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
};

SpectralBasis IdentityBasis(int n);
// Q factor of a seeded standard Gaussian matrix, columns sign-normalized so
// that R has a positive diagonal. U and V use independent draws.
SpectralBasis RandomOrthogonalBasis(int n, uint64_t seed);

struct BasisMode {
  enum class Kind { kIdentity, kRandomOrthogonal };
  Kind kind = Kind::kIdentity;
  uint64_t seed = 0;

  static BasisMode Identity() { return {}; }
  static BasisMode RandomOrthogonal(uint64_t seed) {
    return {Kind::kRandomOrthogonal, seed};
  }
  bool operator==(const BasisMode&) const = default;
};

SpectralBasis MakeBasis(int n, const BasisMode& mode);

struct StageDistribution {
  Eigen::VectorXd input_variances;  // diagonal of V^T Sigma_x V
  Eigen::VectorXd target_spectrum;  // diagonal of U^T A V for this stage

  int n() const { return static_cast<int>(input_variances.size()); }
};

enum class Stage { kPre, kPost, kFt };

const char* StageName(Stage stage);

struct TaskFamily {
  FeaturePartition partition{3, 1};
  TaskSpectra spectra;
  BasisMode basis_mode;
  SpectralBasis basis;
  StageDistribution pre;
  StageDistribution post;
  StageDistribution ft;
  Eigen::MatrixXd a_pre;
  Eigen::MatrixXd a_post;
  Eigen::MatrixXd a_ft;

  int n() const { return partition.n(); }
  const StageDistribution& distribution(Stage stage) const;
  const Eigen::MatrixXd& target_map(Stage stage) const;
};

struct BuildOptions {
  // Off only for deliberately out-of-regime experiments.
  bool validate_spectra = true;
};

TaskFamily BuildTaskFamily(const FeaturePartition& partition,
                           const TaskSpectra& spectra, const BasisMode& mode,
                           const BuildOptions& options = {});

// U diag(target) V^T.
Eigen::MatrixXd TargetMap(const SpectralBasis& basis,
                          const StageDistribution& dist);

// (1-alpha) d1 + alpha d2 as a mixture of zero-mean inputs. Variances mix
// linearly; the target is the cross-covariance of the mixture divided by
// its variance (0 where the mixed variance is 0).
StageDistribution MixDistributions(const StageDistribution& d1,
                                   const StageDistribution& d2, double alpha);

// Per-coordinate variance * target.
Eigen::VectorXd CrossCovarianceSpectrum(const StageDistribution& dist);

struct AssumptionCheck {
  std::string name;
  bool holds = false;
  double margin = 0.0;  // positive iff the inequality holds strictly
  std::string detail;
};

struct AssumptionReport {
  double alpha = 0.0;
  std::vector<AssumptionCheck> checks;
  // True when beta < c_mis/2 together with the inconsistent gap makes the
  // sufficient-mixing inequality impossible for every alpha in [0, 1].
  bool sufficient_mixing_structurally_unsatisfiable = false;

  const AssumptionCheck& Get(const std::string& name) const;
};

inline constexpr char kInvariantHighMagnitude[] =
    "invariant_features_high_magnitude";
inline constexpr char kSufficientSpecializedMixing[] =
    "sufficient_specialized_mixing";
inline constexpr char kSpecializedBelowHalfGap[] = "beta_below_half_c_mis";
inline constexpr char kPostPreGap[] = "post_minus_pre_exceeds_c_mis";
inline constexpr char kPostFtGap[] = "post_minus_ft_exceeds_c_mis";

// Literal evaluation of each structural assumption. Never throws on a
// failing inequality.
AssumptionReport ValidateAssumptions(const TaskSpectra& spectra, double alpha);

// Task-family file: [partition], [spectra], [basis] sections.
std::string SerializeTaskFamilySpec(const TaskFamily& family);
TaskFamily ParseTaskFamilySpec(const std::string& text,
                               const BuildOptions& options = {});

// n=6, k=2 family used throughout the tests and the default configs.
FeaturePartition ReferencePartition();
TaskSpectra ReferenceSpectra();
TaskFamily ReferenceFamily();

}  // namespace forgetlab

#endif  // FORGETLAB_SPECTRAL_TASKS_H_
