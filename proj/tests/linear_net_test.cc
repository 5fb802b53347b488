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
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "forgetlab/errors.h"
#include "forgetlab/spectral_tasks.h"

namespace forgetlab {
namespace {

Eigen::VectorXd Vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

bool BitwiseEqual(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

OptimizerSettings Settings(double eta, int64_t steps, double lambda = 0.0) {
  OptimizerSettings s;
  s.eta = eta;
  s.max_steps = steps;
  s.ridge_lambda = lambda;
  return s;
}

// Central differences of PopulationLoss (plus ridge) in every entry.
Gradients FiniteDifferences(const NetworkState& state,
                            const StageDistribution& dist,
                            const SpectralBasis& basis, double h,
                            const std::optional<Ridge>& ridge) {
  auto loss = [&](const NetworkState& s) {
    double value = PopulationLoss(s, dist, basis);
    if (ridge) {
      value += ridge->lambda * (s.Product() - ridge->anchor).squaredNorm();
    }
    return value;
  };
  Gradients fd{Eigen::MatrixXd::Zero(state.n(), state.n()),
               Eigen::MatrixXd::Zero(state.n(), state.n())};
  for (int which = 0; which < 2; ++which) {
    for (int r = 0; r < state.n(); ++r) {
      for (int c = 0; c < state.n(); ++c) {
        NetworkState plus = state;
        NetworkState minus = state;
        (which == 0 ? plus.w1 : plus.w2)(r, c) += h;
        (which == 0 ? minus.w1 : minus.w2)(r, c) -= h;
        (which == 0 ? fd.w1 : fd.w2)(r, c) =
            (loss(plus) - loss(minus)) / (2.0 * h);
      }
    }
  }
  return fd;
}

double WorstError(const Eigen::MatrixXd& exact, const Eigen::MatrixXd& fd) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    const double a = exact.data()[i];
    const double b = fd.data()[i];
    const double scale = std::max(std::abs(a), std::abs(b));
    worst = std::max(worst, scale < 1e-8 ? std::abs(a - b)
                                         : std::abs(a - b) / scale);
  }
  return worst;
}

TEST(InitTest, ScaledIdentity) {
  const NetworkState half = InitScaledIdentity(2, std::log(2.0));
  EXPECT_DOUBLE_EQ(half.w1(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(half.w2(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(half.Product()(0, 0), 0.25);
  EXPECT_EQ(half.Product()(0, 1), 0.0);
  EXPECT_EQ(half.step, 0);

  const NetworkState tiny = InitScaledIdentity(6, 12.0);
  for (int i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(tiny.w1(i, i), std::exp(-12.0));
    EXPECT_NEAR(tiny.w1(i, i), 6.14e-6, 1e-8);
  }
  EXPECT_EQ(tiny.w1.sum() - tiny.w1.trace(), 0.0);
  EXPECT_THROW(InitScaledIdentity(3, 0.0), ConfigError);
}

TEST(InitTest, FromSpectrum) {
  const SpectralBasis basis = IdentityBasis(6);
  const NetworkState s = InitFromSpectrum(basis, Vec({5, 4, 0, 0, 0, 0}));
  EXPECT_LE((s.Product() - Vec({5, 4, 0, 0, 0, 0}).asDiagonal().toDenseMatrix())
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
  const NetworkState zero = InitFromSpectrum(basis, Eigen::VectorXd::Zero(6));
  EXPECT_TRUE(zero.w1.isZero(0.0));
  EXPECT_TRUE(zero.w2.isZero(0.0));
  const NetworkState mixed =
      InitFromSpectrum(basis, Vec({5, 4, 0, 0, 0.45, 0.45}));
  EXPECT_NEAR(mixed.Product()(4, 4), 0.45, 1e-12);
  EXPECT_THROW(InitFromSpectrum(basis, Vec({1, -1, 0, 0, 0, 0})), ConfigError);
}

TEST(InitTest, FromSpectrumRandomBasisAlignsExactly) {
  const SpectralBasis basis = RandomOrthogonalBasis(6, 5);
  const Eigen::VectorXd s = Vec({5, 4, 1, 0.8, 0.3, 0});
  const AlignedSpectrum aligned =
      ComputeAlignedSpectrum(InitFromSpectrum(basis, s), basis);
  EXPECT_LE((aligned.diag - s).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(aligned.offdiag_norm, 1e-12);
}

TEST(PopulationLossTest, ReferenceValues) {
  const TaskFamily f = ReferenceFamily();
  NetworkState zero = InitFromSpectrum(f.basis, Eigen::VectorXd::Zero(6));
  EXPECT_DOUBLE_EQ(PopulationLoss(zero, f.pre, f), 42.64);
  const NetworkState at_pre = InitFromSpectrum(f.basis, f.pre.target_spectrum);
  EXPECT_NEAR(PopulationLoss(at_pre, f.pre, f), 0.0, 1e-24);
  const NetworkState at_post =
      InitFromSpectrum(f.basis, f.post.target_spectrum);
  EXPECT_NEAR(PopulationLoss(at_post, f.pre, f), 12.5, 1e-12);
}

TEST(PopulationLossTest, MatchesMonteCarloEstimate) {
  const TaskFamily f = ReferenceFamily();
  const NetworkState zero = InitFromSpectrum(f.basis, Eigen::VectorXd::Zero(6));
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  const int64_t m = 1'000'000;
  double sum = 0.0, sum_sq = 0.0;
  Eigen::VectorXd x(6);
  for (int64_t s = 0; s < m; ++s) {
    for (int i = 0; i < 6; ++i) {
      x(i) = std::sqrt(f.pre.input_variances(i)) * normal(rng);
    }
    const double l = (zero.Product() * x - f.a_pre * x).squaredNorm();
    sum += l;
    sum_sq += l * l;
  }
  const double mean = sum / m;
  const double se = std::sqrt((sum_sq / m - mean * mean) / m);
  EXPECT_LE(std::abs(mean - 42.64), 3.0 * se);
}

TEST(PopulationLossTest, ZeroVarianceCoordinatesContributeNothing) {
  const TaskFamily f = ReferenceFamily();
  const NetworkState base =
      InitFromSpectrum(f.basis, Vec({4, 3, 1.5, 0.2, 0, 0}));
  NetworkState s = base;
  s.w1(4, 4) = 123.0;
  s.w2(4, 4) = 7.0;
  s.w2(1, 5) = -3.0;  // only feeds theta's column 5
  EXPECT_EQ(PopulationLoss(s, f.pre, f), PopulationLoss(base, f.pre, f));
  EXPECT_NE(PopulationLoss(s, f.post, f), PopulationLoss(base, f.post, f));
}

TEST(PopulationGradientTest, VanishesAtMinimumAndSaddle) {
  const TaskFamily f = ReferenceFamily();
  const NetworkState at_post =
      InitFromSpectrum(f.basis, f.post.target_spectrum);
  const Gradients g = PopulationGradient(at_post, f.post, f);
  EXPECT_LE(g.w1.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(g.w2.cwiseAbs().maxCoeff(), 1e-12);
  const NetworkState zero = InitFromSpectrum(f.basis, Eigen::VectorXd::Zero(6));
  const Gradients z = PopulationGradient(zero, f.post, f);
  EXPECT_TRUE(z.w1.isZero(0.0));
  EXPECT_TRUE(z.w2.isZero(0.0));
}

TEST(PopulationGradientTest, MatchesFiniteDifferencesAtScaledIdentity) {
  const TaskFamily f = ReferenceFamily();
  const NetworkState s = InitScaledIdentity(6, 5.0);
  const Gradients g = PopulationGradient(s, f.pre, f);
  const Gradients fd = FiniteDifferences(s, f.pre, f.basis, 1e-5, {});
  EXPECT_LE(WorstError(g.w1, fd.w1), 1e-5);
  EXPECT_LE(WorstError(g.w2, fd.w2), 1e-5);
}

TEST(PopulationGradientTest, MatchesFiniteDifferencesAtRandomStates) {
  const TaskFamily f = BuildTaskFamily(ReferencePartition(), ReferenceSpectra(),
                                       BasisMode::RandomOrthogonal(3));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 0.7);
  const StageDistribution mixed = MixDistributions(f.pre, f.post, 0.3);
  for (int trial = 0; trial < 10; ++trial) {
    NetworkState s;
    s.w1 = Eigen::MatrixXd::NullaryExpr(6, 6, [&] { return normal(rng); });
    s.w2 = Eigen::MatrixXd::NullaryExpr(6, 6, [&] { return normal(rng); });
    const Ridge ridge{0.3, Eigen::MatrixXd::NullaryExpr(
                               6, 6, [&] { return normal(rng); })};
    const Gradients g = PopulationGradient(s, mixed, f, ridge);
    const Gradients fd = FiniteDifferences(s, mixed, f.basis, 1e-5, ridge);
    EXPECT_LE(WorstError(g.w1, fd.w1), 1e-5) << trial;
    EXPECT_LE(WorstError(g.w2, fd.w2), 1e-5) << trial;
  }
}

TEST(TrainConfigTest, LearningRateBound) {
  EXPECT_DOUBLE_EQ(LearningRateBoundValue(Settings(0.02, 1, 0.1)),
                   4 * 0.02 * 2.1 * 5.0);
  EXPECT_NO_THROW(TrainConfig::Create(Settings(0.02, 1)));
  EXPECT_THROW(TrainConfig::Create(Settings(0.05, 1)), ConfigError);
  EXPECT_THROW(TrainConfig::Create(Settings(0.02, 1, 0.5)), ConfigError);
  // lambda > 0 needs an anchor.
  EXPECT_THROW(TrainConfig::Create(Settings(0.01, 1, 0.1)), ConfigError);
  EXPECT_NO_THROW(TrainConfig::Create(Settings(0.01, 1, 0.1),
                                      Eigen::MatrixXd::Zero(6, 6)));
  EXPECT_THROW(TrainConfig::Create(Settings(0.0, 1)), ConfigError);
}

TEST(GradientStepTest, ScalarHandArithmetic) {
  const SpectralBasis basis = IdentityBasis(1);
  StageDistribution dist;
  dist.input_variances = Vec({1.0});
  dist.target_spectrum = Vec({2.0});
  NetworkState s;
  s.w1 = Eigen::MatrixXd::Ones(1, 1);
  s.w2 = Eigen::MatrixXd::Ones(1, 1);
  const NetworkState next =
      GradientStep(s, dist, basis, TrainConfig::Create(Settings(0.01, 1)));
  EXPECT_DOUBLE_EQ(next.w1(0, 0), 1.02);
  EXPECT_DOUBLE_EQ(next.w2(0, 0), 1.02);
  EXPECT_EQ(next.step, 1);
}

TEST(GradientStepTest, FixedPointOnlyAdvancesStep) {
  const TaskFamily f = ReferenceFamily();
  const NetworkState at_post =
      InitFromSpectrum(f.basis, f.post.target_spectrum);
  const NetworkState next = GradientStep(
      at_post, f.post, f, TrainConfig::Create(Settings(0.02, 1)));
  EXPECT_LE((next.w1 - at_post.w1).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(next.step, 1);
}

TEST(GradientStepTest, DivergenceIsReported) {
  const SpectralBasis basis = IdentityBasis(1);
  StageDistribution dist;
  dist.input_variances = Vec({1.0});
  dist.target_spectrum = Vec({1.0});
  OptimizerSettings s = Settings(10.0, 100);
  s.gamma_bound = 1e-3;  // admits an absurd step size
  NetworkState state;
  state.w1 = Eigen::MatrixXd::Constant(1, 1, 10.0);
  state.w2 = Eigen::MatrixXd::Constant(1, 1, 10.0);
  try {
    Train(state, dist, basis, TrainConfig::Create(s));
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.step(), 0);
  }
}

TEST(GradientStepTest, ZeroVarianceColumnsAreBitwiseFrozen) {
  const TaskFamily f = ReferenceFamily();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 0.5);
  NetworkState s;
  s.w1 = Eigen::MatrixXd::NullaryExpr(6, 6, [&] { return normal(rng); });
  s.w2 = Eigen::MatrixXd::NullaryExpr(6, 6, [&] { return normal(rng); });
  const TrainConfig config = TrainConfig::Create(Settings(0.005, 1));
  const NetworkState start = s;
  for (int step = 0; step < 200; ++step) s = GradientStep(s, f.ft, f, config);
  // Only W2's specialized input columns are shielded: grad W2 = W1^T G and G
  // has zero columns wherever the input variance is zero.
  for (int r = 0; r < 6; ++r) {
    for (int c : {4, 5}) {
      EXPECT_TRUE(BitwiseEqual(s.w2(r, c), start.w2(r, c))) << r << "," << c;
    }
  }
}

TEST(GradientStepTest, AlignedSpecializedEntriesFrozenFromDiagonalStart) {
  const TaskFamily f = ReferenceFamily();
  const NetworkState start =
      InitFromSpectrum(f.basis, Vec({4.8, 3.9, 3.0, 3.1, 0.7, 0.2}));
  OptimizerSettings settings = Settings(0.02, 2000);
  settings.snapshot_every = 1;
  const Trajectory t =
      Train(start, f.ft, f, TrainConfig::Create(settings));
  for (const Snapshot& snap : t.snapshots) {
    EXPECT_TRUE(BitwiseEqual(snap.aligned_diag(4),
                             t.snapshots[0].aligned_diag(4)));
    EXPECT_TRUE(BitwiseEqual(snap.aligned_diag(5),
                             t.snapshots[0].aligned_diag(5)));
  }
}

TEST(GradientStepTest, SaddleCoordinatesStayExactlyZero) {
  const TaskFamily f = ReferenceFamily();
  NetworkState s = InitFromSpectrum(f.basis, Vec({1, 1, 0, 0.5, 0, 0.2}));
  const TrainConfig config = TrainConfig::Create(Settings(0.02, 1));
  for (int step = 0; step < 3000; ++step) {
    const StageDistribution& d = step % 3 == 0   ? f.pre
                                 : step % 3 == 1 ? f.post
                                                 : f.ft;
    s = GradientStep(s, d, f, config);
  }
  for (int r = 0; r < 6; ++r) {
    EXPECT_EQ(s.w1(r, 2), 0.0);
    EXPECT_EQ(s.w2(2, r), 0.0);
    EXPECT_EQ(s.w1(2, r), 0.0);
    EXPECT_EQ(s.w2(r, 2), 0.0);
    EXPECT_EQ(s.w1(r, 4), 0.0);
    EXPECT_EQ(s.w2(4, r), 0.0);
  }
  EXPECT_GT(s.Product()(3, 3), 0.5);  // live coordinates did train
}

TEST(TrainTest, ZeroStepsKeepsOnlyTheInitialSnapshot) {
  const TaskFamily f = ReferenceFamily();
  OptimizerSettings settings = Settings(0.02, 0);
  const Trajectory t = Train(InitScaledIdentity(6, 12.0), f.pre, f,
                             TrainConfig::Create(settings), {f.pre});
  ASSERT_EQ(t.snapshots.size(), 1u);
  EXPECT_EQ(t.snapshots[0].step, 0);
  EXPECT_EQ(t.final_state.step, 0);
  EXPECT_DOUBLE_EQ(t.snapshots[0].probe_losses[0],
                   PopulationLoss(InitScaledIdentity(6, 12.0), f.pre, f));
}

TEST(TrainTest, SnapshotCadenceIsExact) {
  const TaskFamily f = ReferenceFamily();
  OptimizerSettings settings = Settings(0.02, 1000);
  settings.snapshot_every = 50;
  const Trajectory t = Train(InitScaledIdentity(6, 3.0), f.pre, f,
                             TrainConfig::Create(settings));
  ASSERT_EQ(t.snapshots.size(), 21u);
  for (size_t i = 0; i < t.snapshots.size(); ++i) {
    EXPECT_EQ(t.snapshots[i].step, static_cast<int64_t>(50 * i));
  }
  EXPECT_EQ(t.final_state.step, 1000);
}

TEST(TrainTest, UnmixedPretrainingConverges) {
  const TaskFamily f = ReferenceFamily();
  const Trajectory t =
      Train(InitScaledIdentity(6, 12.0), f.pre, f,
            TrainConfig::Create(Settings(0.02, 40'000)), {f.pre});
  EXPECT_LE(t.snapshots.back().probe_losses[0], 1e-4);
  const AlignedSpectrum a = ComputeAlignedSpectrum(t.final_state, f.basis);
  EXPECT_LE(std::abs(a.diag(4)), 1e-5);
  EXPECT_LE(std::abs(a.diag(5)), 1e-5);
}

TEST(TrainTest, PlateauRuleStopsOnConvergedState) {
  const TaskFamily f = ReferenceFamily();
  OptimizerSettings settings = Settings(0.02, 100'000);
  settings.stop_rule = StopRule::LossPlateau(1e-9, 10);
  settings.snapshot_every = 50;
  const NetworkState converged =
      InitFromSpectrum(f.basis, f.pre.target_spectrum);
  const Trajectory t =
      Train(converged, f.pre, f, TrainConfig::Create(settings));
  EXPECT_TRUE(t.stopped_by_plateau);
  EXPECT_LE(t.final_state.step, 11 * 50);
}

TEST(TrainTest, DiagonalityAndMonotoneDescent) {
  const TaskFamily f = ReferenceFamily();
  const StageDistribution mixed = MixDistributions(f.pre, f.post, 0.5);
  OptimizerSettings settings = Settings(0.02, 5000);
  settings.snapshot_every = 1;
  const Trajectory t = Train(InitScaledIdentity(6, 12.0), mixed, f,
                             TrainConfig::Create(settings), {mixed});
  for (size_t i = 0; i < t.snapshots.size(); ++i) {
    EXPECT_LE(t.snapshots[i].offdiag_norm, 1e-8);
    if (i > 0) {
      EXPECT_LE(t.snapshots[i].probe_losses[0],
                t.snapshots[i - 1].probe_losses[0])
          << "step " << t.snapshots[i].step;
    }
  }
}

TEST(TrainTest, DeterministicGivenInputs) {
  const TaskFamily f = ReferenceFamily();
  const TrainConfig config = TrainConfig::Create(Settings(0.02, 700));
  const Trajectory a = Train(InitScaledIdentity(6, 4.0), f.post, f, config);
  const Trajectory b = Train(InitScaledIdentity(6, 4.0), f.post, f, config);
  EXPECT_EQ(a.final_state.w1, b.final_state.w1);
  EXPECT_EQ(TrajectoryToJsonLines(a), TrajectoryToJsonLines(b));
}

TEST(DiagStepTest, PrintedRecursion) {
  const Eigen::VectorXd one = Vec({1.0});
  const Eigen::VectorXd two = Vec({2.0});
  EXPECT_DOUBLE_EQ(IdealizedDiagStep(one, two, 0.01, 0.0, one)(0), 1.06);
  EXPECT_EQ(IdealizedDiagStep(two, two, 0.01, 0.0, one)(0), 2.0);
  const Eigen::VectorXd zero = Vec({0.0});
  EXPECT_EQ(IdealizedDiagStep(zero, two, 0.01, 0.0, zero)(0), 0.0);
  EXPECT_EQ(DerivedDiagStep(zero, two, 0.01, 0.3, zero, one)(0), 0.0);
  EXPECT_EQ(DerivedDiagStep(two, two, 0.01, 0.0, one, one)(0), 2.0);
  // s (1 - 2 eta v (s - t))^2 at s=1, t=2: (1 + 0.02)^2.
  EXPECT_DOUBLE_EQ(DerivedDiagStep(one, two, 0.01, 0.0, one, one)(0),
                   1.02 * 1.02);
}

TEST(DiagStepTest, FullDynamicsMatchDerivedScalarRecursion) {
  const TaskFamily f = ReferenceFamily();
  const StageDistribution mixed = MixDistributions(f.pre, f.post, 0.5);
  Eigen::VectorXd sigma = Vec({0.3, 0.01, 2.0, 0.5, 0.05, 1.5});
  NetworkState s = InitFromSpectrum(f.basis, sigma);
  const TrainConfig config = TrainConfig::Create(Settings(0.02, 1));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
  double worst = 0.0;
  for (int step = 0; step < 10'000; ++step) {
    s = GradientStep(s, mixed, f, config);
    sigma = DerivedDiagStep(sigma, mixed.target_spectrum, 0.02, 0.0, zero,
                            mixed.input_variances);
    if (step % 100 == 99) {
      const AlignedSpectrum a = ComputeAlignedSpectrum(s, f.basis);
      worst = std::max(worst, (a.diag - sigma).cwiseAbs().maxCoeff());
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(StochasticStepTest, BatchOneIsBitReproducible) {
  const TaskFamily f = ReferenceFamily();
  const TrainConfig config = TrainConfig::Create(Settings(0.01, 1));
  const NetworkState s = InitScaledIdentity(6, 1.0);
  const NetworkState a = StochasticStep(s, f.post, f.basis, config, 1, 0.0, 9);
  const NetworkState b = StochasticStep(s, f.post, f.basis, config, 1, 0.0, 9);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.w2, b.w2);
  const NetworkState c = StochasticStep(s, f.post, f.basis, config, 1, 0.0, 10);
  EXPECT_NE(a.w1, c.w1);
}

TEST(StochasticStepTest, MaskedSaddleIsUnchanged) {
  const TaskFamily f = ReferenceFamily();
  const TrainConfig config = TrainConfig::Create(Settings(0.01, 1));
  const NetworkState zero = InitFromSpectrum(f.basis, Eigen::VectorXd::Zero(6));
  const NetworkState next =
      StochasticStep(zero, f.post, f.basis, config, 64, 0.5, 1);
  EXPECT_TRUE(next.w1.isZero(0.0));
  EXPECT_TRUE(next.w2.isZero(0.0));
  EXPECT_EQ(next.step, 1);
}

// Large-batch SGD update against the population update. Standard errors come
// from an independent sample of per-example gradients.
TEST(StochasticStepTest, LargeBatchApproachesPopulationStep) {
  const TaskFamily f = ReferenceFamily();
  const double eta = 0.01;
  const TrainConfig config = TrainConfig::Create(Settings(eta, 1));
  const NetworkState s = InitFromSpectrum(f.basis, Vec({2, 1, 0.5, 1, 0.3, 0}));
  const int64_t batch = 100'000;
  const NetworkState sgd =
      StochasticStep(s, f.post, f.basis, config, batch, 0.0, 5);
  const NetworkState full = GradientStep(s, f.post, f, config);

  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd sum1 = Eigen::MatrixXd::Zero(6, 6), sq1 = sum1;
  Eigen::MatrixXd sum2 = sum1, sq2 = sum1;
  const Eigen::MatrixXd theta = s.Product();
  Eigen::VectorXd x(6);
  for (int64_t b = 0; b < batch; ++b) {
    for (int i = 0; i < 6; ++i) x(i) = normal(rng);
    const Eigen::MatrixXd g = 2.0 * (theta * x - f.a_post * x) * x.transpose();
    const Eigen::MatrixXd g1 = g * s.w2.transpose();
    const Eigen::MatrixXd g2 = s.w1.transpose() * g;
    sum1 += g1;
    sq1 += g1.cwiseProduct(g1);
    sum2 += g2;
    sq2 += g2.cwiseProduct(g2);
  }
  const double m = static_cast<double>(batch);
  auto se = [&](const Eigen::MatrixXd& sum, const Eigen::MatrixXd& sq) {
    Eigen::MatrixXd var = sq / m - (sum / m).cwiseProduct(sum / m);
    return Eigen::MatrixXd(eta * (var.cwiseMax(0.0) / m).cwiseSqrt());
  };
  const Eigen::MatrixXd se1 = se(sum1, sq1);
  const Eigen::MatrixXd se2 = se(sum2, sq2);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      EXPECT_LE(std::abs(sgd.w1(r, c) - full.w1(r, c)), 5.0 * se1(r, c) + 1e-15)
          << r << "," << c;
      EXPECT_LE(std::abs(sgd.w2(r, c) - full.w2(r, c)), 5.0 * se2(r, c) + 1e-15)
          << r << "," << c;
    }
  }
}

}  // namespace
}  // namespace forgetlab
