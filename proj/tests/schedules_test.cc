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

#include "diffmia/errors.h"
#include "diffmia/rng.h"
#include "diffmia/schedules.h"

namespace diffmia {
namespace {

TEST(ModelKindTest, NamesRoundTrip) {
  for (ModelKind k : {ModelKind::kDdpm, ModelKind::kSmld, ModelKind::kVpsde,
                      ModelKind::kVesde}) {
    EXPECT_EQ(ParseModelKind(ModelKindName(k)), k);
  }
  EXPECT_THROW(ParseModelKind("ncsn"), ConfigError);
}

TEST(MarginalTest, DdpmConstantBeta) {
  const auto s = DiscreteSchedule::DdpmFromBetas({0.1, 0.1, 0.1});
  const MarginalStats m = s.Marginal(1);
  EXPECT_NEAR(m.mean_coef, 0.9, 1e-15);
  EXPECT_NEAR(m.std, std::sqrt(0.19), 1e-15);
}

TEST(MarginalTest, SmldIdentityMean) {
  const auto s = DiscreteSchedule::Smld(2, 2.5, 1.0);
  const MarginalStats m = s.Marginal(0);
  EXPECT_EQ(m.mean_coef, 1.0);
  EXPECT_EQ(m.std, 2.5);
}

TEST(MarginalTest, VpAtOneMatchesQuadrature) {
  const auto s = ContinuousSchedule::Vp(0.1, 20.0);
  // Simpson's rule on beta(s) over [0, 1].
  const int n = 1000;
  double integral = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    integral += w * s.Beta(static_cast<double>(i) / n);
  }
  integral /= 3.0 * n;
  const MarginalStats m = s.Marginal(1.0);
  EXPECT_NEAR(m.mean_coef, std::exp(-0.5 * integral), 1e-12);
  EXPECT_NEAR(m.mean_coef, std::exp(-5.025), 1e-12);
  EXPECT_NEAR(m.std, std::sqrt(1.0 - std::exp(-integral)), 1e-12);
}

TEST(MarginalTest, VeStdIsGeometric) {
  const auto s = ContinuousSchedule::Ve(0.01, 50.0);
  EXPECT_NEAR(s.Marginal(0.5).std, 0.01 * std::sqrt(5000.0), 1e-12);
  EXPECT_EQ(s.Marginal(0.5).mean_coef, 1.0);
}

TEST(MarginalTest, OutOfRange) {
  const auto d = DiscreteSchedule::Ddpm();
  EXPECT_THROW(d.Marginal(-1), RangeError);
  EXPECT_THROW(d.Marginal(1000), RangeError);
  const auto c = ContinuousSchedule::Vp();
  EXPECT_THROW(c.Marginal(0.0), RangeError);
  EXPECT_THROW(c.Marginal(1.5), RangeError);
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  EXPECT_THROW(s.Marginal(2.5), RangeError);
}

TEST(ScheduleTest, DdpmInvariants) {
  const auto s = DiscreteSchedule::Ddpm();
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_DOUBLE_EQ(s.betas().front(), 1e-4);
  EXPECT_DOUBLE_EQ(s.betas().back(), 2e-2);
  double prod = 1.0;
  for (int t = 0; t < s.steps(); ++t) {
    prod *= s.alphas()[t];
    EXPECT_NEAR(s.alphabars()[t], prod, 1e-12);
    EXPECT_EQ(s.alphas()[t], 1.0 - s.betas()[t]);
    EXPECT_GT(s.alphabars()[t], 0.0);
    EXPECT_LT(s.alphabars()[t], 1.0);
    if (t > 0) EXPECT_LT(s.alphabars()[t], s.alphabars()[t - 1]);
  }
}

TEST(ScheduleTest, SmldIsGeometricFromMax) {
  const auto s = DiscreteSchedule::Smld();
  EXPECT_DOUBLE_EQ(s.sigmas().front(), 50.0);
  EXPECT_NEAR(s.sigmas().back(), 0.01, 1e-15);
  const double r = s.sigmas()[1] / s.sigmas()[0];
  for (int t = 1; t < s.steps(); ++t) {
    EXPECT_NEAR(s.sigmas()[t] / s.sigmas()[t - 1], r, 1e-12);
  }
}

TEST(ScheduleTest, InvalidParameters) {
  EXPECT_THROW(DiscreteSchedule::DdpmFromBetas({0.1, 1.0}), ConfigError);
  EXPECT_THROW(DiscreteSchedule::Smld(10, 0.01, 50.0), ConfigError);
  EXPECT_THROW(ContinuousSchedule::Vp(20.0, 0.1), ConfigError);
  EXPECT_THROW(ContinuousSchedule::Ve(0.0, 1.0), ConfigError);
}

TEST(PerturbTest, Arithmetic) {
  const Schedule smld = DiscreteSchedule::Smld(2, 2.0, 1.0);
  EXPECT_EQ(Perturb(smld, Tensor::Vector({1, 1}), 0, Tensor::Vector({1, -1}))
                .ToVector(),
            (std::vector<double>{3, -1}));
  const Schedule ddpm = DiscreteSchedule::DdpmFromBetas({0.1, 0.1});
  const Tensor x = Perturb(ddpm, Tensor::Vector({1, 0}), 1,
                           Tensor::Vector({0, 1}));
  EXPECT_NEAR(x[0], 0.9, 1e-15);
  EXPECT_NEAR(x[1], std::sqrt(0.19), 1e-15);
}

TEST(PerturbTest, ZeroNoiseGivesScaledMean) {
  for (ModelKind k : {ModelKind::kDdpm, ModelKind::kSmld, ModelKind::kVpsde,
                      ModelKind::kVesde}) {
    const Schedule s = Schedule::Default(k);
    const double t = s.is_discrete() ? 500 : 0.5;
    const Tensor x0 = Tensor::Vector({0.3, -1.7});
    const Tensor x = Perturb(s, x0, t, Tensor::Zeros({2}));
    const double a = s.Marginal(t).mean_coef;
    EXPECT_EQ(x[0], a * 0.3);
    EXPECT_EQ(x[1], a * -1.7);
  }
}

TEST(PerturbTest, ShapeMismatch) {
  const Schedule s = Schedule::Default(ModelKind::kVpsde);
  EXPECT_THROW(Perturb(s, Tensor::Vector({1, 2}), 0.5, Tensor::Vector({1})),
               ShapeError);
}

TEST(SdeTest, VeHasNoDrift) {
  const auto s = ContinuousSchedule::Ve();
  const SdeCoefficients c = s.Coefficients(Tensor::Vector({3, -4}), 0.3);
  EXPECT_EQ(c.drift.ToVector(), (std::vector<double>{0, 0}));
}

TEST(SdeTest, VpPlugIn) {
  // beta(t) = 0.2 at t = 0.1 / 19.9 for the default schedule.
  const auto s = ContinuousSchedule::Vp(0.1, 20.0);
  const double t = 0.1 / 19.9;
  ASSERT_NEAR(s.Beta(t), 0.2, 1e-15);
  const SdeCoefficients c = s.Coefficients(Tensor::Vector({2}), t);
  EXPECT_NEAR(c.drift[0], -0.2, 1e-15);
  EXPECT_NEAR(c.diffusion, std::sqrt(0.2), 1e-15);
}

TEST(SdeTest, VeDiffusionMatchesFiniteDifference) {
  const auto s = ContinuousSchedule::Ve(0.01, 50.0);
  const double t = 0.5, h = 1e-6;
  const double sp = s.Sigma(t + h), sm = s.Sigma(t - h);
  const double fd = std::sqrt((sp * sp - sm * sm) / (2 * h));
  EXPECT_NEAR(s.Diffusion(t) / fd, 1.0, 1e-8);
  EXPECT_NEAR(s.Diffusion(t), s.Sigma(t) * std::sqrt(2 * std::log(5000.0)),
              1e-12);
}

TEST(SdeTest, DiscreteScheduleIsKindError) {
  const Schedule s = Schedule::Default(ModelKind::kDdpm);
  EXPECT_THROW(s.continuous(), KindError);
  EXPECT_THROW(Schedule::Default(ModelKind::kVpsde).discrete(), KindError);
}

TEST(PriorTest, Values) {
  const auto vp = ContinuousSchedule::Vp();
  const double log2pi = std::log(2 * std::numbers::pi);
  const double zero[] = {0, 0}, e1[] = {1, 0};
  EXPECT_NEAR(vp.PriorLogp(zero), -log2pi, 1e-14);
  EXPECT_NEAR(vp.PriorLogp(zero), -1.837877, 1e-6);
  EXPECT_NEAR(vp.PriorLogp(e1), -log2pi - 0.5, 1e-14);
  const auto ve = ContinuousSchedule::Ve(0.01, 50.0);
  EXPECT_NEAR(ve.PriorLogp(zero), -log2pi - 2 * std::log(50.0), 1e-12);
}

TEST(PriorTest, VeDensityMatchesNumericalIntegration) {
  // Radial integral of the prior density over R^2, trapezoid in r.
  const auto ve = ContinuousSchedule::Ve(0.01, 50.0);
  const int n = 20000;
  const double rmax = 50.0 * 12.0, dr = rmax / n;
  double mass = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = i * dr;
    const double x[] = {r, 0.0};
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    mass += w * std::exp(ve.PriorLogp(x)) * 2 * std::numbers::pi * r * dr;
  }
  EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(PriorTest, IntegratesToOne) {
  // Importance draw from N(0, 4 I) for the standard-normal prior.
  const auto vp = ContinuousSchedule::Vp();
  Rng rng(2024);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x[] = {2 * rng.Normal(), 2 * rng.Normal()};
    const double q = -std::log(2 * std::numbers::pi * 4) -
                     0.5 * (x[0] * x[0] + x[1] * x[1]) / 4;
    sum += std::exp(vp.PriorLogp(x) - q);
  }
  EXPECT_NEAR(sum / n, 1.0, 0.01);
}

TEST(MonotoneTest, MeanDownStdUp) {
  const auto d = DiscreteSchedule::Ddpm();
  for (int t = 1; t < d.steps(); ++t) {
    EXPECT_LE(d.Marginal(t).mean_coef, d.Marginal(t - 1).mean_coef);
    EXPECT_GE(d.Marginal(t).std, d.Marginal(t - 1).std);
  }
  for (const auto& c : {ContinuousSchedule::Vp(), ContinuousSchedule::Ve()}) {
    for (int i = 2; i <= 1000; ++i) {
      const double t = i / 1000.0, p = (i - 1) / 1000.0;
      EXPECT_LE(c.Marginal(t).mean_coef, c.Marginal(p).mean_coef);
      EXPECT_GE(c.Marginal(t).std, c.Marginal(p).std);
    }
  }
  const auto s = DiscreteSchedule::Smld();
  for (int t = 1; t < s.steps(); ++t) {
    EXPECT_LT(s.Marginal(t).std, s.Marginal(t - 1).std);
  }
}

TEST(CorrespondenceTest, DiscreteMatchesContinuous) {
  const Schedule ddpm = Schedule::Default(ModelKind::kDdpm);
  const Schedule smld = Schedule::Default(ModelKind::kSmld);
  const ContinuousSchedule vp = ddpm.Counterpart();
  const ContinuousSchedule ve = smld.Counterpart();
  EXPECT_DOUBLE_EQ(vp.beta_min(), 0.1);
  EXPECT_DOUBLE_EQ(vp.beta_max(), 20.0);
  for (int t = 0; t < 1000; ++t) {
    const MarginalStats a = ddpm.Marginal(t);
    const MarginalStats b = vp.Marginal((t + 1) / 1000.0);
    EXPECT_LT(std::abs(a.mean_coef - b.mean_coef), 1e-2) << t;
    EXPECT_LT(std::abs(a.std - b.std), 1e-2) << t;
    const MarginalStats c = smld.Marginal(t);
    const MarginalStats d = ve.Marginal(std::max(1.0 - t / 999.0, 1e-5));
    EXPECT_LT(std::abs(c.std - d.std), 1e-2 * std::max(1.0, c.std)) << t;
    EXPECT_EQ(c.mean_coef, d.mean_coef);
  }
}

TEST(CorrespondenceTest, NetworkTimeMapsBackToSteps) {
  const Schedule ddpm = Schedule::Default(ModelKind::kDdpm);
  const Schedule smld = Schedule::Default(ModelKind::kSmld);
  for (int t : {0, 1, 17, 500, 999}) {
    EXPECT_NEAR(ddpm.CounterpartNetworkTime((t + 1) / 1000.0),
                ddpm.NetworkTime(t), 1e-12);
    EXPECT_NEAR(smld.CounterpartNetworkTime(1.0 - t / 999.0),
                smld.NetworkTime(t), 1e-12);
  }
  const Schedule vp = Schedule::Default(ModelKind::kVpsde);
  EXPECT_EQ(vp.CounterpartNetworkTime(0.3), 0.3);
}

TEST(ScheduleParamsTest, DefaultsBuild) {
  for (ModelKind k : {ModelKind::kDdpm, ModelKind::kSmld, ModelKind::kVpsde,
                      ModelKind::kVesde}) {
    const Schedule s = ScheduleParams::Defaults(k).Build();
    EXPECT_EQ(s.kind(), k);
    EXPECT_EQ(s.is_discrete(), IsDiscrete(k));
  }
}

}  // namespace
}  // namespace diffmia
