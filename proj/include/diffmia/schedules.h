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

#ifndef DIFFMIA_SCHEDULES_H_
#define DIFFMIA_SCHEDULES_H_

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diffmia/tensor.h"

namespace diffmia {

enum class ModelKind { kDdpm, kSmld, kVpsde, kVesde };

std::string_view ModelKindName(ModelKind kind);
// Accepts "ddpm", "smld", "vpsde"/"vp", "vesde"/"ve". Throws ConfigError.
ModelKind ParseModelKind(std::string_view name);
bool IsDiscrete(ModelKind kind);

// Lower end of every continuous-time evaluation.
inline constexpr double kTimeCutoff = 1e-5;

// x_t = mean_coef * x_0 + std * eps.
struct MarginalStats {
  double mean_coef = 1.0;
  double std = 0.0;
};

struct SdeCoefficients {
  Tensor drift;
  double diffusion = 0.0;
};

// DDPM variance schedule or SMLD noise ladder over steps 0..T-1.
class DiscreteSchedule {
 public:
  // Linear betas from beta_start to beta_end.
  static DiscreteSchedule Ddpm(int steps = 1000, double beta_start = 1e-4,
                               double beta_end = 2e-2);
  static DiscreteSchedule DdpmFromBetas(std::vector<double> betas);
  // Geometric sigmas from sigma_max at step 0 down to sigma_min at T-1.
  static DiscreteSchedule Smld(int steps = 1000, double sigma_max = 50.0,
                               double sigma_min = 0.01);

  ModelKind kind() const { return kind_; }
  int steps() const { return static_cast<int>(size_); }

  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& alphabars() const { return alphabars_; }
  const std::vector<double>& sigmas() const { return sigmas_; }

  double sigma_max() const { return sigma_max_; }
  double sigma_min() const { return sigma_min_; }

  // Throws RangeError unless 0 <= t < T.
  MarginalStats Marginal(int t) const;
  void CheckStep(int t) const;

 private:
  ModelKind kind_ = ModelKind::kDdpm;
  std::size_t size_ = 0;
  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alphabars_;
  std::vector<double> sigmas_;
  double sigma_max_ = 0.0;
  double sigma_min_ = 0.0;
};

// VP (linear beta(t)) or VE (geometric sigma(t)) SDE on t in (0, 1].
class ContinuousSchedule {
 public:
  static ContinuousSchedule Vp(double beta_min = 0.1, double beta_max = 20.0);
  static ContinuousSchedule Ve(double sigma_min = 0.01,
                               double sigma_max = 50.0);

  ModelKind kind() const { return kind_; }
  double horizon() const { return 1.0; }
  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }

  double Beta(double t) const;
  // Closed form of the integral of beta over [0, t].
  double IntegratedBeta(double t) const;
  double Sigma(double t) const;

  // Throws RangeError unless 0 < t <= 1.
  MarginalStats Marginal(double t) const;
  SdeCoefficients Coefficients(const Tensor& x, double t) const;
  double Diffusion(double t) const;
  // Coefficient c(t) of the linear drift f(x, t) = c(t) x (zero for VE).
  double DriftCoef(double t) const;

  double PriorStd() const;
  // Log density of the prior N(0, PriorStd^2 I) in nats.
  double PriorLogp(std::span<const double> x) const;
  void CheckTime(double t) const;

 private:
  ModelKind kind_ = ModelKind::kVpsde;
  double beta_min_ = 0.1;
  double beta_max_ = 20.0;
  double sigma_min_ = 0.01;
  double sigma_max_ = 50.0;
};

// One of the four model schedules. Discrete time points are step indices
// stored in a double.
class Schedule {
 public:
  Schedule(DiscreteSchedule s) : impl_(std::move(s)) {}    // NOLINT
  Schedule(ContinuousSchedule s) : impl_(std::move(s)) {}  // NOLINT

  // Default schedule for a model kind (T = 1000 when discrete).
  static Schedule Default(ModelKind kind);

  ModelKind kind() const;
  bool is_discrete() const { return impl_.index() == 0; }
  const DiscreteSchedule& discrete() const;      // KindError otherwise
  const ContinuousSchedule& continuous() const;  // KindError otherwise
  int steps() const;  // T for discrete, 1 for continuous

  MarginalStats Marginal(double t) const;
  // Time fed to the network, normalized to [0, 1].
  double NetworkTime(double t) const;
  // Gaussian the reverse process starts from.
  double PriorStd() const;

  // VP/VE schedule the discrete kinds discretize (identity for continuous).
  ContinuousSchedule Counterpart() const;
  // Network time for a counterpart time tau in (0, 1].
  double CounterpartNetworkTime(double tau) const;

 private:
  std::variant<DiscreteSchedule, ContinuousSchedule> impl_;
};

// Flat parameter record from which a Schedule is rebuilt; fields that do
// not apply to `kind` are ignored.
struct ScheduleParams {
  ModelKind kind = ModelKind::kDdpm;
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  double sigma_min = 0.01;
  double sigma_max = 50.0;
  double beta_min = 0.1;
  double beta_max = 20.0;

  static ScheduleParams Defaults(ModelKind kind);
  Schedule Build() const;
};

// mean_coef * x0 + std * eps for the marginal at t.
Tensor Perturb(const Schedule& schedule, const Tensor& x0, double t,
               const Tensor& eps);

}  // namespace diffmia

#endif  // DIFFMIA_SCHEDULES_H_
