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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "diffmia/errors.h"
#include "diffmia/rng.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"
#include "test_util.h"

namespace diffmia {
namespace {

Architecture SmallArch(bool zero_init = true) {
  Architecture a;
  a.hidden = {16, 16};
  a.input_features = 8;
  a.zero_init_output = zero_init;
  return a;
}

Tensor RandomBatch(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  Rng rng(seed);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = 2.0 * rng.Normal();
  return Tensor({rows, cols}, std::move(v));
}

TEST(TimeEmbeddingTest, ZeroTime) {
  const Tensor e = TimeEmbedding(0.0, 16);
  ASSERT_EQ(e.size(), 16u);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(e[k], 0.0);
    EXPECT_EQ(e[8 + k], 1.0);
  }
}

TEST(TimeEmbeddingTest, Deterministic) {
  EXPECT_EQ(TimeEmbedding(0.37, 16).ToVector(),
            TimeEmbedding(0.37, 16).ToVector());
}

TEST(TimeEmbeddingTest, GeometricFrequencies) {
  const std::vector<double> f = TimeFrequencies(16, 0.25, 2.0);
  ASSERT_EQ(f.size(), 8u);
  EXPECT_EQ(f[0], 0.25);
  for (std::size_t k = 1; k < f.size(); ++k) {
    EXPECT_NEAR(f[k] / f[k - 1], 2.0, 1e-15);
  }
}

TEST(TimeEmbeddingTest, Components) {
  const double u = 0.3;
  const Tensor e = TimeEmbedding(u, 8, 0.5, 3.0);
  for (std::size_t k = 0; k < 4; ++k) {
    const double f = 0.5 * std::pow(3.0, k);
    EXPECT_NEAR(e[k], std::sin(2 * std::numbers::pi * f * u), 1e-14);
    EXPECT_NEAR(e[4 + k], std::cos(2 * std::numbers::pi * f * u), 1e-14);
  }
}

TEST(ScoreNetworkTest, ShapesAndCount) {
  const ScoreNetwork net = ScoreNetwork::Create(Architecture{}, 1);
  const std::vector<std::size_t> dims = net.layer_dims();
  EXPECT_EQ(dims.front(), 2u + 16u + 2u * 32u);
  EXPECT_EQ(dims.back(), 2u);
  EXPECT_LT(net.parameter_count(), 1000000u);
  EXPECT_EQ(net.parameters().size(), 2 * (dims.size() - 1));
  const Tensor out = RawOutput(net, RandomBatch(3, 5, 2), 0.4);
  EXPECT_EQ(out.shape(), (std::vector<std::size_t>{5, 2}));
}

TEST(ScoreNetworkTest, ZeroInitOutputIsZero) {
  const ScoreNetwork net = ScoreNetwork::Create(SmallArch(), 3);
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  for (double t : {0.0, 10.0, 999.0}) {
    const Tensor eps = PredictEps(net, s, RandomBatch(4, 7, 2), t);
    for (double v : eps.ToVector()) EXPECT_EQ(v, 0.0);
    const Tensor score = PredictScore(net, s, RandomBatch(4, 7, 2), t);
    for (double v : score.ToVector()) EXPECT_EQ(v, 0.0);
  }
}

TEST(ScoreNetworkTest, BatchConsistency) {
  const ScoreNetwork net = ScoreNetwork::Create(SmallArch(false), 5);
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  const Tensor x = RandomBatch(9, 6, 2);
  const Tensor batch = PredictEps(net, s, x, 123);
  for (std::size_t r = 0; r < 6; ++r) {
    const Tensor row = PredictEps(net, s, Tensor::Vector({x.at(r, 0), x.at(r, 1)}),
                                  123);
    EXPECT_EQ(row[0], batch.at(r, 0));
    EXPECT_EQ(row[1], batch.at(r, 1));
  }
}

TEST(ScoreNetworkTest, PerRowTimes) {
  const ScoreNetwork net = ScoreNetwork::Create(SmallArch(false), 5);
  const Tensor x = RandomBatch(9, 3, 2);
  const std::vector<double> u = {0.1, 0.5, 0.9};
  Tape tape;
  const Tensor mixed = net.Apply(tape, tape.Constant(x), u).value();
  for (std::size_t r = 0; r < 3; ++r) {
    const Tensor one =
        RawOutput(net, Tensor::Matrix(1, 2, {x.at(r, 0), x.at(r, 1)}), u[r]);
    EXPECT_EQ(one.at(0, 0), mixed.at(r, 0));
    EXPECT_EQ(one.at(0, 1), mixed.at(r, 1));
  }
}

TEST(ScoreNetworkTest, ForwardIsPure) {
  const ScoreNetwork net = ScoreNetwork::Create(SmallArch(false), 11);
  const Tensor x = RandomBatch(1, 4, 2);
  EXPECT_EQ(RawOutput(net, x, 0.2).ToVector(),
            RawOutput(net, x, 0.2).ToVector());
}

TEST(ScoreNetworkTest, SeedDeterminesWeights) {
  const ScoreNetwork a = ScoreNetwork::Create(SmallArch(false), 7);
  const ScoreNetwork b = ScoreNetwork::Create(SmallArch(false), 7);
  const ScoreNetwork c = ScoreNetwork::Create(SmallArch(false), 8);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters()[i].ToVector(), b.parameters()[i].ToVector());
  }
  EXPECT_NE(a.parameters()[0].ToVector(), c.parameters()[0].ToVector());
}

TEST(ScoreNetworkTest, KaimingUniformBounds) {
  const ScoreNetwork net = ScoreNetwork::Create(Architecture{}, 2);
  const auto dims = net.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = std::sqrt(6.0 / dims[l]);
    for (double w : net.parameters()[2 * l].ToVector()) {
      EXPECT_LE(std::abs(w), bound);
    }
  }
}

// Frozen output of the default architecture at seed 7, nonzero final layer.
TEST(ScoreNetworkTest, GoldenVector) {
  Architecture arch;
  arch.zero_init_output = false;
  const ScoreNetwork net = ScoreNetwork::Create(arch, 7);
  const Tensor out =
      RawOutput(net, Tensor::Matrix(2, 2, {0.5, -1.0, -0.25, 2.0}), 0.3);
  const std::vector<double> golden = {-0.10778859254282483, 0.11140834397561956,
                                     -0.1115474557858479, 0.013669145383478964};
  ASSERT_EQ(out.size(), golden.size());
  for (std::size_t i = 0; i < golden.size(); ++i) {
    EXPECT_NEAR(out.ToVector()[i], golden[i], 1e-12) << i;
  }
}

TEST(PredictTest, EpsOnScoreModelIsKindError) {
  Architecture arch = SmallArch();
  arch.param_kind = ParamKind::kScore;
  const ScoreNetwork net = ScoreNetwork::Create(arch, 1);
  EXPECT_THROW(PredictEps(net, Schedule::Default(ModelKind::kSmld),
                          Tensor::Vector({0, 0}), 3),
               KindError);
}

TEST(PredictTest, ScoreParameterizationDividesByStd) {
  const CallableModel model =
      testing::ConstantModel(ParamKind::kScore, 2, {4, -2});
  const Schedule s = DiscreteSchedule::Smld(2, 2.0, 1.0);
  const Tensor score = PredictScore(model, s, Tensor::Vector({9, 9}), 0);
  EXPECT_EQ(score.ToVector(), (std::vector<double>{2, -1}));
}

TEST(PredictTest, EpsIdentity) {
  const ScoreNetwork net = ScoreNetwork::Create(SmallArch(false), 21);
  for (ModelKind k : {ModelKind::kDdpm, ModelKind::kVpsde}) {
    const Schedule s = Schedule::Default(k);
    const double t = s.is_discrete() ? 250 : 0.25;
    const double std = s.Marginal(t).std;
    const Tensor x = RandomBatch(31, 50, 2);
    const Tensor eps = PredictEps(net, s, x, t);
    const Tensor score = PredictScore(net, s, x, t);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      EXPECT_NEAR(score.ToVector()[i], -eps.ToVector()[i] / std, 1e-12);
    }
  }
}

TEST(PredictTest, GaussianOracleScore) {
  const ContinuousSchedule vp = ContinuousSchedule::Vp();
  for (ParamKind kind : {ParamKind::kEpsilon, ParamKind::kScore}) {
    const CallableModel oracle = testing::GaussianOracle(vp, kind, 2);
    const Schedule s = vp;
    for (double t : {1e-3, 0.2, 0.7, 1.0}) {
      const MarginalStats m = vp.Marginal(t);
      const double var = m.mean_coef * m.mean_coef + m.std * m.std;
      const Tensor x = RandomBatch(5, 20, 2);
      const Tensor score = PredictScore(oracle, s, x, t);
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(score.ToVector()[i], -x.ToVector()[i] / var, 1e-12);
      }
    }
  }
}

Checkpoint MakeCheckpoint() {
  Checkpoint c;
  c.model_kind = ModelKind::kSmld;
  c.schedule = ScheduleParams::Defaults(ModelKind::kSmld);
  Architecture arch = SmallArch(false);
  arch.param_kind = ParamKind::kScore;
  c.network = ScoreNetwork::Create(arch, 99);
  c.training.steps = 42;
  c.training.seed = 17;
  c.training.dataset_fingerprint = "0123456789abcdef";
  return c;
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  const Checkpoint c = MakeCheckpoint();
  const auto path =
      std::filesystem::temp_directory_path() / "diffmia_ckpt_test.json";
  SaveCheckpoint(c, path.string());
  const Checkpoint back = LoadCheckpoint(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back.model_kind, c.model_kind);
  EXPECT_EQ(back.training.steps, 42);
  EXPECT_EQ(back.training.seed, 17u);
  EXPECT_EQ(back.training.dataset_fingerprint, "0123456789abcdef");
  EXPECT_EQ(back.network.layer_dims(), c.network.layer_dims());
  const Tensor x = RandomBatch(8, 100, 2);
  for (double u : {0.0, 0.5, 1.0}) {
    EXPECT_EQ(RawOutput(back.network, x, u).ToVector(),
              RawOutput(c.network, x, u).ToVector());
  }
}

TEST(CheckpointTest, UnknownVersionNamesBoth) {
  std::string text = CheckpointToString(MakeCheckpoint());
  const std::string key = "\"version\": 1";
  const auto pos = text.find(key);
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, key.size(), "\"version\": 9");
  try {
    CheckpointFromString(text);
    FAIL() << "expected VersionError";
  } catch (const VersionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('9'), std::string::npos) << msg;
    EXPECT_NE(msg.find('1'), std::string::npos) << msg;
  }
}

TEST(CheckpointTest, MalformedIsSchemaError) {
  EXPECT_THROW(CheckpointFromString("{\"version\": 1}"), SchemaError);
  EXPECT_THROW(CheckpointFromString("not json"), SchemaError);
}

TEST(CheckpointTest, MissingFileIsIoError) {
  EXPECT_THROW(LoadCheckpoint("/nonexistent/diffmia/ckpt.json"), IoError);
}

TEST(CheckpointTest, FromPartsValidatesShapes) {
  const ScoreNetwork net = ScoreNetwork::Create(SmallArch(), 1);
  std::vector<Tensor> params = net.parameters();
  params.pop_back();
  EXPECT_THROW(ScoreNetwork::FromParts(net.architecture(),
                                       net.input_projection(), params),
               SchemaError);
}

}  // namespace
}  // namespace diffmia
