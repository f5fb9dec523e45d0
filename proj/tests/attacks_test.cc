/*
 * Copyright 2026 The diffmia Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "diffmia/attacks.h"
#include "diffmia/data.h"
#include "diffmia/errors.h"
#include "diffmia/metrics.h"
#include "diffmia/rng.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"
#include "diffmia/trainer.h"
#include "test_util.h"

namespace diffmia {
namespace {

EvalSet MakeEval(const Tensor& members, const Tensor& nonmembers) {
  EvalSet e;
  e.members = members;
  e.nonmembers = nonmembers;
  for (std::size_t i = 0; i < members.dim(0); ++i) e.member_ids.push_back(i);
  for (std::size_t i = 0; i < nonmembers.dim(0); ++i) {
    e.nonmember_ids.push_back(members.dim(0) + i);
  }
  return e;
}

Tensor Normals(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(2 * n);
  for (double& z : v) z = scale * rng.Normal();
  return Tensor({n, 2}, std::move(v));
}

ScoreNetwork RandomNet(ParamKind kind, std::uint64_t seed) {
  Architecture a;
  a.hidden = {16, 16};
  a.input_features = 4;
  a.param_kind = kind;
  a.zero_init_output = false;
  return ScoreNetwork::Create(a, seed);
}

TEST(DecideTest, Examples) {
  EXPECT_TRUE(Decide(0.5, 1.0, Orientation::kLowerIsMember));
  EXPECT_FALSE(Decide(1.5, 1.0, Orientation::kLowerIsMember));
  EXPECT_TRUE(Decide(1.5, 1.0, Orientation::kHigherIsMember));
  EXPECT_FALSE(Decide(1.0, 1.0, Orientation::kLowerIsMember));
  EXPECT_FALSE(Decide(1.0, 1.0, Orientation::kHigherIsMember));
  EXPECT_EQ(ParseOrientation(OrientationName(Orientation::kLowerIsMember)),
            Orientation::kLowerIsMember);
}

TEST(PerStepLossTest, OracleIsZero) {
  // The exact score for a point mass at x recovers the noise for any draw.
  const Schedule s = Schedule::Default(ModelKind::kVpsde);
  const ContinuousSchedule vp = s.continuous();
  const Tensor x0 = Tensor::Vector({0.5, -1.0});
  const CallableModel oracle(
      ParamKind::kEpsilon, 2,
      [vp, x0](Tape& tape, Var x, std::span<const double> u) {
        const MarginalStats m = vp.Marginal(u[0]);
        const std::size_t rows = x.value().dim(0);
        std::vector<double> mean;
        for (std::size_t r = 0; r < rows; ++r) {
          mean.push_back(m.mean_coef * x0[0]);
          mean.push_back(m.mean_coef * x0[1]);
        }
        return (x - tape.Constant(Tensor({rows, 2}, std::move(mean)))) *
               tape.Constant(Tensor::Scalar(1.0 / m.std));
      });
  for (double t : {0.01, 0.5, 1.0}) {
    EXPECT_NEAR(PerStepLoss(oracle, x0, t, s, 5, 3, 9), 0.0, 1e-20);
  }
}

TEST(PerStepLossTest, NormalizedByDimension) {
  // eps_theta = eps - [1, -1] for whatever eps was drawn.
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  const DiscreteSchedule d = s.discrete();
  const Tensor x0 = Tensor::Vector({0.2, 0.4});
  const CallableModel shifted(
      ParamKind::kEpsilon, 2,
      [d, x0](Tape& tape, Var x, std::span<const double> u) {
        const int t = static_cast<int>(std::lround(u[0] * d.steps()));
        const MarginalStats m = d.Marginal(t);
        const std::size_t rows = x.value().dim(0);
        std::vector<double> off;
        for (std::size_t r = 0; r < rows; ++r) {
          off.push_back(m.mean_coef * x0[0] / m.std + 1.0);
          off.push_back(m.mean_coef * x0[1] / m.std - 1.0);
        }
        return x * tape.Constant(Tensor::Scalar(1.0 / m.std)) -
               tape.Constant(Tensor({rows, 2}, std::move(off)));
      });
  EXPECT_NEAR(PerStepLoss(shifted, x0, 250, s, 1, 0, 0), 1.0, 1e-10);
  const CallableModel zero =
      testing::ConstantModel(ParamKind::kEpsilon, 2, {0, 0});
  // Net zero: the loss is ||eps||^2 / m for the drawn noise, positive.
  EXPECT_GT(PerStepLoss(zero, x0, 250, s, 1, 0, 0), 0.0);
}

TEST(PerStepLossTest, Deterministic) {
  const ScoreNetwork net = RandomNet(ParamKind::kScore, 1);
  const Schedule s = Schedule::Default(ModelKind::kSmld);
  const Tensor x = Tensor::Vector({0.1, 0.9});
  EXPECT_EQ(PerStepLoss(net, x, 40, s, 7, 2, 5),
            PerStepLoss(net, x, 40, s, 7, 2, 5));
  EXPECT_NE(PerStepLoss(net, x, 40, s, 7, 2, 5),
            PerStepLoss(net, x, 40, s, 7, 2, 6));
  EXPECT_THROW(PerStepLoss(net, x, 40, s, 0, 2, 5), ContractError);
}

TEST(PerStepLossTest, BatchedMatchesSingle) {
  const ScoreNetwork net = RandomNet(ParamKind::kEpsilon, 2);
  const Schedule s = Schedule::Default(ModelKind::kVpsde);
  Rng rng(3);
  const Tensor pts = Normals(rng, 5);
  const std::vector<std::uint64_t> ids = {4, 8, 15, 16, 23};
  const std::vector<double> batch = PerStepLosses(net, pts, ids, 0.3, s, 6, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(batch[i], PerStepLoss(net, pts.Row(i), 0.3, s, 6, 1, ids[i]),
                1e-13);
  }
}

TEST(PerStepLossTest, MonteCarloConsistency) {
  const ScoreNetwork net = RandomNet(ParamKind::kEpsilon, 4);
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  const Tensor x = Tensor::Vector({0.7, -0.3});
  const double t = 400;
  // Per-draw spread from single-draw estimates on independent seeds.
  double sum = 0.0, sq = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const double v = PerStepLoss(net, x, t, s, 1, 1000 + i, 0);
    sum += v;
    sq += v * v;
  }
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  const double small = PerStepLoss(net, x, t, s, 1000, 1, 0);
  const double large = PerStepLoss(net, x, t, s, 100000, 2, 0);
  const double se = sd * std::sqrt(1.0 / 1000 + 1.0 / 100000);
  EXPECT_LT(std::abs(small - large), 4 * se);
}

TEST(LossAttackTest, SameSetsGiveChance) {
  Rng rng(4);
  const Tensor pts = Normals(rng, 30);
  EvalSet e = MakeEval(pts, pts);
  e.nonmember_ids = e.member_ids;
  const ScoreNetwork net = RandomNet(ParamKind::kEpsilon, 1);
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  const std::vector<double> steps = DiscreteSteps(1000, 100);
  const StepProfile p = LossAttackScores(net, e, steps, s, 3, 0);
  ASSERT_EQ(p.sets.size(), steps.size());
  for (const AttackScoreSet& set : p.sets) {
    EXPECT_EQ(set.orientation, Orientation::kLowerIsMember);
    EXPECT_EQ(Roc(set).auc, 0.5);
  }
}

TEST(LossAttackTest, UntrainedNetIsNearChance) {
  Rng rng(5);
  const EvalSet e = MakeEval(Normals(rng, 200), Normals(rng, 200));
  for (ModelKind k : {ModelKind::kDdpm, ModelKind::kVesde}) {
    const Schedule s = Schedule::Default(k);
    const ScoreNetwork net = RandomNet(DefaultParamKind(k), 6);
    const std::vector<double> steps =
        s.is_discrete() ? DiscreteSteps(1000, 50) : ContinuousGrid(20);
    const StepProfile p = LossAttackScores(net, e, steps, s, 5, 1);
    for (std::size_t i = 0; i < p.sets.size(); ++i) {
      const double auc = Roc(p.sets[i]).auc;
      EXPECT_GE(auc, 0.4) << steps[i];
      EXPECT_LE(auc, 0.6) << steps[i];
    }
  }
}

TEST(LossAttackTest, SerialParallelAndPermutation) {
  Rng rng(6);
  const EvalSet e = MakeEval(Normals(rng, 12), Normals(rng, 9));
  const ScoreNetwork net = RandomNet(ParamKind::kScore, 3);
  const Schedule s = Schedule::Default(ModelKind::kSmld);
  const std::vector<double> steps = {0, 10, 500, 999};
  const StepProfile a = LossAttackScores(net, e, steps, s, 4, 8, Exec::kSerial);
  const StepProfile b =
      LossAttackScores(net, e, steps, s, 4, 8, Exec::kParallel);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    EXPECT_EQ(a.sets[i].member_scores, b.sets[i].member_scores);
    EXPECT_EQ(a.sets[i].nonmember_scores, b.sets[i].nonmember_scores);
    EXPECT_EQ(*a.sets[i].step, steps[i]);
  }
  // Reverse the member rows together with their ids.
  EvalSet r = e;
  std::vector<double> rows;
  for (std::size_t i = 12; i-- > 0;) {
    rows.push_back(e.members.at(i, 0));
    rows.push_back(e.members.at(i, 1));
  }
  r.members = Tensor({12, 2}, rows);
  std::reverse(r.member_ids.begin(), r.member_ids.end());
  const StepProfile c = LossAttackScores(net, r, steps, s, 4, 8);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::vector<double> back = c.sets[i].member_scores;
    std::reverse(back.begin(), back.end());
    EXPECT_EQ(back, a.sets[i].member_scores);
    EXPECT_EQ(Roc(c.sets[i]).auc, Roc(a.sets[i]).auc);
  }
}

TEST(LossAttackTest, Contracts) {
  Rng rng(7);
  const ScoreNetwork net = RandomNet(ParamKind::kEpsilon, 3);
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  EvalSet e = MakeEval(Normals(rng, 3), Tensor::Zeros({0, 2}));
  const std::vector<double> steps = {1, 2};
  EXPECT_THROW(LossAttackScores(net, e, steps, s, 1, 0), ContractError);
  e = MakeEval(Normals(rng, 3), Normals(rng, 3));
  const std::vector<double> unsorted = {5, 2};
  EXPECT_THROW(LossAttackScores(net, e, unsorted, s, 1, 0), ContractError);
  EXPECT_THROW(LossAttackScores(net, e, {}, s, 1, 0), ContractError);
}

TEST(StepGridTest, Shapes) {
  const std::vector<double> d = DiscreteSteps(1000, 10);
  ASSERT_EQ(d.size(), 100u);
  EXPECT_EQ(d.front(), 0.0);
  EXPECT_EQ(d.back(), 990.0);
  const std::vector<double> g = ContinuousGrid(1000);
  ASSERT_EQ(g.size(), 1000u);
  EXPECT_GT(g.front(), kTimeCutoff);
  EXPECT_EQ(g.back(), 1.0);
  const std::vector<double> r = ContinuousRandomSteps(1000, 3);
  EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
  EXPECT_GT(r.front(), kTimeCutoff);
  EXPECT_LE(r.back(), 1.0);
  EXPECT_EQ(r, ContinuousRandomSteps(1000, 3));
}

TEST(LossAttackTest, OverfitModelScoresMembersLower) {
  const Dataset ds = GenerateDataset("gauss_grid", 16, 16, 3);
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  TrainConfig train;
  train.steps = 3000;
  train.batch_size = 16;
  const ScoreNetwork net =
      Train(ScoreNetwork::Create(Architecture{}, 1), ds.members(), train, s)
          .network;
  const std::vector<double> steps = DiscreteSteps(333, 10);
  const StepProfile p = LossAttackScores(net, ds.eval_set(), steps, s, 10, 0);
  double best_gap = INFINITY;
  for (const AttackScoreSet& set : p.sets) {
    const double m = std::accumulate(set.member_scores.begin(),
                                     set.member_scores.end(), 0.0) /
                     set.member_scores.size();
    const double n = std::accumulate(set.nonmember_scores.begin(),
                                     set.nonmember_scores.end(), 0.0) /
                     set.nonmember_scores.size();
    best_gap = std::min(best_gap, m - n);
  }
  EXPECT_LT(best_gap, 0.0);
}

TEST(LikelihoodAttackTest, SameSetsGiveChance) {
  const ContinuousSchedule vp = ContinuousSchedule::Vp();
  const CallableModel oracle =
      testing::GaussianOracle(vp, ParamKind::kEpsilon, 2);
  Rng rng(8);
  const Tensor pts = Normals(rng, 10);
  EvalSet e = MakeEval(pts, pts);
  e.nonmember_ids = e.member_ids;
  const AttackScoreSet set = LikelihoodAttackScores(oracle, e, vp, OdeConfig{});
  EXPECT_EQ(set.orientation, Orientation::kHigherIsMember);
  EXPECT_FALSE(set.step.has_value());
  EXPECT_EQ(Roc(set).auc, 0.5);
}

TEST(LikelihoodAttackTest, ModeVersusTailSeparation) {
  const ContinuousSchedule vp = ContinuousSchedule::Vp();
  const CallableModel oracle =
      testing::GaussianOracle(vp, ParamKind::kEpsilon, 2);
  Rng rng(9);
  const Tensor near = Normals(rng, 40, 0.2);
  std::vector<double> far;
  for (int i = 0; i < 40; ++i) {
    const double a = rng.Uniform(0.0, 2 * std::numbers::pi);
    far.push_back(4.0 * std::cos(a));
    far.push_back(4.0 * std::sin(a));
  }
  const AttackScoreSet set = LikelihoodAttackScores(
      oracle, MakeEval(near, Tensor({40, 2}, far)), vp, OdeConfig{});
  EXPECT_EQ(set.excluded, 0u);
  EXPECT_GT(Roc(set).auc, 0.99);
}

TEST(LikelihoodAttackTest, FailuresAreExcluded) {
  const ScoreNetwork net = RandomNet(ParamKind::kEpsilon, 2);
  const Schedule s = Schedule::Default(ModelKind::kVpsde);
  Rng rng(10);
  const EvalSet e = MakeEval(Normals(rng, 3), Normals(rng, 3));
  const AttackScoreSet ok = LikelihoodAttackScores(net, e, s, OdeConfig{});
  EXPECT_EQ(ok.excluded, 0u);
  EXPECT_EQ(ok.member_ids, e.member_ids);
  OdeConfig config;
  config.max_steps = 1;
  EXPECT_THROW(LikelihoodAttackScores(net, e, s, config), ConvergenceError);
}

}  // namespace
}  // namespace diffmia
