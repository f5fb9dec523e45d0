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

// Long training runs, kept out of the fast unit binaries.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "diffmia/data.h"
#include "diffmia/rng.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"
#include "diffmia/trainer.h"

namespace diffmia {
namespace {

// Monte-Carlo value of the DDPM objective at its minimizer for the empirical
// distribution of `data`: the posterior-mean noise predictor.
double EmpiricalOptimum(const Tensor& data, const DiscreteSchedule& s,
                        int draws, std::uint64_t seed) {
  const std::size_t n = data.dim(0);
  Rng rng(seed);
  double total = 0.0;
  std::vector<double> logw(n);
  for (int d = 0; d < draws; ++d) {
    const int t = static_cast<int>(rng.Below(s.steps()));
    const std::size_t i = rng.Below(n);
    const double e0 = rng.Normal(), e1 = rng.Normal();
    const MarginalStats m = s.Marginal(t);
    const double x0 = m.mean_coef * data.at(i, 0) + m.std * e0;
    const double x1 = m.mean_coef * data.at(i, 1) + m.std * e1;
    double top = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      const double d0 = x0 - m.mean_coef * data.at(j, 0);
      const double d1 = x1 - m.mean_coef * data.at(j, 1);
      logw[j] = -(d0 * d0 + d1 * d1) / (2 * m.std * m.std);
      top = std::max(top, logw[j]);
    }
    double z = 0.0, p0 = 0.0, p1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = std::exp(logw[j] - top);
      z += w;
      p0 += w * data.at(j, 0);
      p1 += w * data.at(j, 1);
    }
    const double h0 = (x0 - m.mean_coef * p0 / z) / m.std;
    const double h1 = (x1 - m.mean_coef * p1 / z) / m.std;
    total += (e0 - h0) * (e0 - h0) + (e1 - h1) * (e1 - h1);
  }
  return total / draws;
}

TEST(ConvergenceTest, DdpmToyTwentyThousandSteps) {
  const Dataset ds = GenerateDataset("gauss_grid", 64, 64, 1);
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  const ScoreNetwork net = ScoreNetwork::Create(Architecture{}, 0);
  // Objective of the untrained network on a large seeded batch.
  Rng rng(17);
  double initial = 0.0;
  for (int rep = 0; rep < 32; ++rep) {
    const Minibatch b = DrawMinibatch(ds.members(), 64, s, rng);
    for (double v : RowObjectives(net, s, b.x0, b.times, b.eps)) initial += v;
  }
  initial /= 32.0 * 64.0;

  TrainConfig config;
  config.steps = 20000;
  config.batch_size = 64;
  config.learning_rate = 1e-3;
  const TrainResult r = Train(net, ds.members(), config, s);
  const double final_loss = r.history.back().mean_loss;
  const double floor = EmpiricalOptimum(ds.members(), s.discrete(), 200000, 5);
  std::printf("initial %.4f final %.4f empirical optimum %.4f\n", initial,
              final_loss, floor);

  EXPECT_LT(final_loss, 1.25 * floor);
  EXPECT_LT(final_loss, 0.2 * initial);
}

}  // namespace
}  // namespace diffmia
