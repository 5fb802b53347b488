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

#include "forgetlab/spectral_tasks.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "forgetlab/errors.h"
#include "forgetlab/kv_document.h"
#include "forgetlab/numeric_format.h"

namespace forgetlab {

FeaturePartition::FeaturePartition(int n, int k) : n_(n), k_(k) {
  if (k < 1) throw ConfigError("partition requires k >= 1");
  if (n <= 2 * k) throw ConfigError("partition requires n > 2k");
}

namespace {

void CheckLength(const Eigen::VectorXd& v, int expected, const char* name) {
  if (v.size() != expected) {
    throw ConfigError(std::string(name) + " must have length " +
                      std::to_string(expected) + ", got " +
                      std::to_string(v.size()));
  }
}

}  // namespace

void ValidateSpectra(const FeaturePartition& partition,
                     const TaskSpectra& s) {
  const int k = partition.k();
  CheckLength(s.sigma_inv, partition.d_invariant(), "sigma_inv");
  CheckLength(s.sigma_pre_inc, k, "sigma_pre_inc");
  CheckLength(s.sigma_post_inc, k, "sigma_post_inc");
  CheckLength(s.sigma_ft_inc, k, "sigma_ft_inc");
  if ((s.sigma_inv.array() <= 0.0).any()) {
    throw ConfigError("sigma_inv entries must be positive");
  }
  if ((s.sigma_pre_inc.array() < 0.0).any() ||
      (s.sigma_post_inc.array() < 0.0).any() ||
      (s.sigma_ft_inc.array() < 0.0).any()) {
    throw ConfigError("inconsistent singular values must be non-negative");
  }
  if (!(s.beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(s.c_mis > 0.0)) throw ConfigError("c_mis must be positive");
  for (int i = 0; i < k; ++i) {
    if (!(s.sigma_post_inc(i) - s.sigma_pre_inc(i) > s.c_mis)) {
      throw ConfigError("violates sigma_post_inc[" + std::to_string(i) +
                        "] - sigma_pre_inc[" + std::to_string(i) +
                        "] > c_mis");
    }
    if (!(s.sigma_post_inc(i) - s.sigma_ft_inc(i) > s.c_mis)) {
      throw ConfigError("violates sigma_post_inc[" + std::to_string(i) +
                        "] - sigma_ft_inc[" + std::to_string(i) +
                        "] > c_mis");
    }
  }
  if (!(s.beta < 0.5 * s.c_mis)) {
    throw ConfigError("violates beta < c_mis / 2");
  }
  const double min_inv = s.sigma_inv.minCoeff();
  const double max_competitor = std::max(
      {s.sigma_pre_inc.maxCoeff(), s.sigma_post_inc.maxCoeff(), s.beta});
  if (!(min_inv > max_competitor)) {
    throw ConfigError(
        "violates min(sigma_inv) > max(sigma_pre_inc, sigma_post_inc, beta)");
  }
}

SpectralBasis IdentityBasis(int n) {
  return {Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n)};
}

namespace {

Eigen::MatrixXd SeededOrthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd gaussian(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) gaussian(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace

SpectralBasis RandomOrthogonalBasis(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  SpectralBasis basis;
  basis.u = SeededOrthogonal(n, rng);
  basis.v = SeededOrthogonal(n, rng);
  return basis;
}

SpectralBasis MakeBasis(int n, const BasisMode& mode) {
  return mode.kind == BasisMode::Kind::kIdentity
             ? IdentityBasis(n)
             : RandomOrthogonalBasis(n, mode.seed);
}

const char* StageName(Stage stage) {
  switch (stage) {
    case Stage::kPre:
      return "pre";
    case Stage::kPost:
      return "post";
    case Stage::kFt:
      return "ft";
  }
  return "?";
}

const StageDistribution& TaskFamily::distribution(Stage stage) const {
  switch (stage) {
    case Stage::kPre:
      return pre;
    case Stage::kPost:
      return post;
    case Stage::kFt:
      return ft;
  }
  return pre;
}

const Eigen::MatrixXd& TaskFamily::target_map(Stage stage) const {
  switch (stage) {
    case Stage::kPre:
      return a_pre;
    case Stage::kPost:
      return a_post;
    case Stage::kFt:
      return a_ft;
  }
  return a_pre;
}

Eigen::MatrixXd TargetMap(const SpectralBasis& basis,
                          const StageDistribution& dist) {
  return basis.u * dist.target_spectrum.asDiagonal() * basis.v.transpose();
}

TaskFamily BuildTaskFamily(const FeaturePartition& partition,
                           const TaskSpectra& spectra, const BasisMode& mode,
                           const BuildOptions& options) {
  if (options.validate_spectra) {
    ValidateSpectra(partition, spectra);
  } else {
    CheckLength(spectra.sigma_inv, partition.d_invariant(), "sigma_inv");
    CheckLength(spectra.sigma_pre_inc, partition.k(), "sigma_pre_inc");
    CheckLength(spectra.sigma_post_inc, partition.k(), "sigma_post_inc");
    CheckLength(spectra.sigma_ft_inc, partition.k(), "sigma_ft_inc");
  }
  const int n = partition.n();
  const int d = partition.d_invariant();
  const int k = partition.k();

  TaskFamily family;
  family.partition = partition;
  family.spectra = spectra;
  family.basis_mode = mode;
  family.basis = MakeBasis(n, mode);

  auto make = [&](const Eigen::VectorXd& inconsistent, double specialized,
                  double specialized_variance) {
    StageDistribution dist;
    dist.input_variances = Eigen::VectorXd::Ones(n);
    dist.input_variances.tail(k).setConstant(specialized_variance);
    dist.target_spectrum.resize(n);
    dist.target_spectrum.head(d) = spectra.sigma_inv;
    dist.target_spectrum.segment(d, k) = inconsistent;
    dist.target_spectrum.tail(k).setConstant(specialized);
    return dist;
  };
  // Specialized targets under pre/ft are unobservable (zero variance); 0 is
  // the canonical choice.
  family.pre = make(spectra.sigma_pre_inc, 0.0, 0.0);
  family.post = make(spectra.sigma_post_inc, spectra.beta, 1.0);
  family.ft = make(spectra.sigma_ft_inc, 0.0, 0.0);
  family.a_pre = TargetMap(family.basis, family.pre);
  family.a_post = TargetMap(family.basis, family.post);
  family.a_ft = TargetMap(family.basis, family.ft);
  return family;
}

StageDistribution MixDistributions(const StageDistribution& d1,
                                   const StageDistribution& d2, double alpha) {
  if (d1.n() != d2.n() || d1.target_spectrum.size() != d1.n() ||
      d2.target_spectrum.size() != d2.n()) {
    throw ConfigError("cannot mix distributions of different dimension");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("mixing fraction must lie in [0, 1]");
  }
  if (alpha == 0.0) return d1;
  if (alpha == 1.0) return d2;
  StageDistribution mixed;
  mixed.input_variances =
      (1.0 - alpha) * d1.input_variances + alpha * d2.input_variances;
  const Eigen::VectorXd cross = (1.0 - alpha) * CrossCovarianceSpectrum(d1) +
                                alpha * CrossCovarianceSpectrum(d2);
  mixed.target_spectrum.resize(d1.n());
  for (int i = 0; i < d1.n(); ++i) {
    const double variance = mixed.input_variances(i);
    mixed.target_spectrum(i) = variance > 0.0 ? cross(i) / variance : 0.0;
  }
  return mixed;
}

Eigen::VectorXd CrossCovarianceSpectrum(const StageDistribution& dist) {
  return dist.input_variances.cwiseProduct(dist.target_spectrum);
}

const AssumptionCheck& AssumptionReport::Get(const std::string& name) const {
  for (const AssumptionCheck& check : checks) {
    if (check.name == name) return check;
  }
  throw std::out_of_range("no assumption named " + name);
}

AssumptionReport ValidateAssumptions(const TaskSpectra& s, double alpha) {
  AssumptionReport report;
  report.alpha = alpha;
  const Eigen::Index k = s.sigma_pre_inc.size();

  {
    AssumptionCheck check{kInvariantHighMagnitude, false, 0.0, ""};
    const double min_inv = s.sigma_inv.size() > 0
                               ? s.sigma_inv.minCoeff()
                               : std::numeric_limits<double>::infinity();
    double competitor = s.beta;
    if (k > 0) {
      competitor = std::max({competitor, s.sigma_pre_inc.maxCoeff(),
                             s.sigma_post_inc.maxCoeff()});
    }
    check.margin = min_inv - competitor;
    check.holds = check.margin > 0.0;
    check.detail = "min(sigma_inv) - max(sigma_pre_inc, sigma_post_inc, beta)";
    report.checks.push_back(check);
  }
  {
    // alpha*beta > (1-alpha) sigma_pre_i + alpha sigma_post_i for every i.
    AssumptionCheck check{kSufficientSpecializedMixing, false, 0.0, ""};
    double margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i) {
      const double competitor =
          (1.0 - alpha) * s.sigma_pre_inc(i) + alpha * s.sigma_post_inc(i);
      margin = std::min(margin, alpha * s.beta - competitor);
    }
    check.margin = margin;
    check.holds = margin > 0.0;
    check.detail =
        "min_i alpha*beta - ((1-alpha)*sigma_pre_inc[i] + "
        "alpha*sigma_post_inc[i])";
    report.checks.push_back(check);
  }
  {
    AssumptionCheck check{kSpecializedBelowHalfGap, false, 0.0, ""};
    check.margin = 0.5 * s.c_mis - s.beta;
    check.holds = check.margin > 0.0;
    check.detail = "c_mis/2 - beta";
    report.checks.push_back(check);
  }
  {
    AssumptionCheck pre_gap{kPostPreGap, false, 0.0, ""};
    AssumptionCheck ft_gap{kPostFtGap, false, 0.0, ""};
    double pre_margin = std::numeric_limits<double>::infinity();
    double ft_margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i) {
      pre_margin = std::min(
          pre_margin, s.sigma_post_inc(i) - s.sigma_pre_inc(i) - s.c_mis);
      ft_margin = std::min(ft_margin,
                           s.sigma_post_inc(i) - s.sigma_ft_inc(i) - s.c_mis);
    }
    pre_gap.margin = pre_margin;
    pre_gap.holds = pre_margin > 0.0;
    pre_gap.detail = "min_i sigma_post_inc[i] - sigma_pre_inc[i] - c_mis";
    ft_gap.margin = ft_margin;
    ft_gap.holds = ft_margin > 0.0;
    ft_gap.detail = "min_i sigma_post_inc[i] - sigma_ft_inc[i] - c_mis";
    report.checks.push_back(pre_gap);
    report.checks.push_back(ft_gap);
    // beta < c_mis/2 < sigma_post - sigma_pre <= sigma_post, so
    // alpha*beta <= alpha*sigma_post <= the mixed inconsistent value.
    report.sufficient_mixing_structurally_unsatisfiable =
        report.checks[2].holds && pre_gap.holds &&
        (s.sigma_pre_inc.array() >= 0.0).all();
  }
  return report;
}

namespace {

const char* BasisKindName(BasisMode::Kind kind) {
  return kind == BasisMode::Kind::kIdentity ? "identity" : "random_orthogonal";
}

}  // namespace

std::string SerializeTaskFamilySpec(const TaskFamily& family) {
  KeyValueDocument doc;
  doc.Set("partition", "n", std::to_string(family.partition.n()));
  doc.Set("partition", "k", std::to_string(family.partition.k()));
  const TaskSpectra& s = family.spectra;
  doc.Set("spectra", "sigma_inv", FormatVector(s.sigma_inv));
  doc.Set("spectra", "sigma_pre_inc", FormatVector(s.sigma_pre_inc));
  doc.Set("spectra", "sigma_post_inc", FormatVector(s.sigma_post_inc));
  doc.Set("spectra", "sigma_ft_inc", FormatVector(s.sigma_ft_inc));
  doc.Set("spectra", "beta", FormatDouble(s.beta));
  doc.Set("spectra", "c_mis", FormatDouble(s.c_mis));
  doc.Set("basis", "mode", BasisKindName(family.basis_mode.kind));
  doc.Set("basis", "seed", std::to_string(family.basis_mode.seed));
  return doc.Serialize();
}

TaskFamily ParseTaskFamilySpec(const std::string& text,
                               const BuildOptions& options) {
  const KeyValueDocument doc = KeyValueDocument::Parse(text);
  KeyValueReader reader(doc);
  const FeaturePartition partition(
      static_cast<int>(reader.Int("partition", "n")),
      static_cast<int>(reader.Int("partition", "k")));
  TaskSpectra spectra;
  spectra.sigma_inv = reader.Vector("spectra", "sigma_inv");
  spectra.sigma_pre_inc = reader.Vector("spectra", "sigma_pre_inc");
  spectra.sigma_post_inc = reader.Vector("spectra", "sigma_post_inc");
  spectra.sigma_ft_inc = reader.Vector("spectra", "sigma_ft_inc");
  spectra.beta = reader.Double("spectra", "beta");
  spectra.c_mis = reader.Double("spectra", "c_mis");
  BasisMode mode;
  const std::string kind = reader.String("basis", "mode", "identity");
  const int64_t seed = reader.Int("basis", "seed", 0);
  if (kind == "identity") {
    mode = BasisMode::Identity();
  } else if (kind == "random_orthogonal") {
    mode = BasisMode::RandomOrthogonal(static_cast<uint64_t>(seed));
  } else {
    throw ConfigError("unknown basis mode '" + kind + "'");
  }
  mode.seed = static_cast<uint64_t>(seed);
  reader.Finish();
  return BuildTaskFamily(partition, spectra, mode, options);
}

FeaturePartition ReferencePartition() { return FeaturePartition(6, 2); }

TaskSpectra ReferenceSpectra() {
  TaskSpectra s;
  s.sigma_inv = Eigen::Vector2d(5.0, 4.0);
  s.sigma_pre_inc = Eigen::Vector2d(1.0, 0.8);
  s.sigma_post_inc = Eigen::Vector2d(3.5, 3.3);
  s.sigma_ft_inc = Eigen::Vector2d(0.5, 0.3);
  s.beta = 0.9;
  s.c_mis = 2.0;
  return s;
}

TaskFamily ReferenceFamily() {
  return BuildTaskFamily(ReferencePartition(), ReferenceSpectra(),
                         BasisMode::Identity());
}

}  // namespace forgetlab
