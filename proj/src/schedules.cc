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

#include "diffmia/schedules.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "diffmia/errors.h"

namespace diffmia {

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDdpm:
      return "ddpm";
    case ModelKind::kSmld:
      return "smld";
    case ModelKind::kVpsde:
      return "vpsde";
    case ModelKind::kVesde:
      return "vesde";
  }
  return "unknown";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "ddpm") return ModelKind::kDdpm;
  if (name == "smld") return ModelKind::kSmld;
  if (name == "vpsde" || name == "vp") return ModelKind::kVpsde;
  if (name == "vesde" || name == "ve") return ModelKind::kVesde;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

bool IsDiscrete(ModelKind kind) {
  return kind == ModelKind::kDdpm || kind == ModelKind::kSmld;
}

DiscreteSchedule DiscreteSchedule::Ddpm(int steps, double beta_start,
                                        double beta_end) {
  if (steps < 1) throw ConfigError("ddpm: steps must be positive");
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[static_cast<std::size_t>(i)] =
        beta_start + frac * (beta_end - beta_start);
  }
  return DdpmFromBetas(std::move(betas));
}

DiscreteSchedule DiscreteSchedule::DdpmFromBetas(std::vector<double> betas) {
  if (betas.empty()) throw ConfigError("ddpm: empty beta schedule");
  DiscreteSchedule s;
  s.kind_ = ModelKind::kDdpm;
  s.size_ = betas.size();
  s.alphas_.resize(s.size_);
  s.alphabars_.resize(s.size_);
  double prod = 1.0;
  for (std::size_t i = 0; i < s.size_; ++i) {
    if (!(betas[i] > 0.0 && betas[i] < 1.0)) {
      throw ConfigError("ddpm: beta[" + std::to_string(i) +
                        "] outside (0, 1)");
    }
    s.alphas_[i] = 1.0 - betas[i];
    prod *= s.alphas_[i];
    s.alphabars_[i] = prod;
  }
  s.betas_ = std::move(betas);
  return s;
}

DiscreteSchedule DiscreteSchedule::Smld(int steps, double sigma_max,
                                        double sigma_min) {
  if (steps < 2) throw ConfigError("smld: need at least two noise levels");
  if (!(sigma_min > 0.0 && sigma_min < sigma_max)) {
    throw ConfigError("smld: require 0 < sigma_min < sigma_max");
  }
  DiscreteSchedule s;
  s.kind_ = ModelKind::kSmld;
  s.size_ = static_cast<std::size_t>(steps);
  s.sigma_max_ = sigma_max;
  s.sigma_min_ = sigma_min;
  s.sigmas_.resize(s.size_);
  const double ratio = sigma_min / sigma_max;
  for (int i = 0; i < steps; ++i) {
    s.sigmas_[static_cast<std::size_t>(i)] =
        sigma_max * std::pow(ratio, static_cast<double>(i) / (steps - 1));
  }
  return s;
}

void DiscreteSchedule::CheckStep(int t) const {
  if (t < 0 || t >= steps()) {
    throw RangeError("step " + std::to_string(t) + " outside [0, " +
                     std::to_string(steps()) + ")");
  }
}

MarginalStats DiscreteSchedule::Marginal(int t) const {
  CheckStep(t);
  const auto i = static_cast<std::size_t>(t);
  if (kind_ == ModelKind::kDdpm) {
    return {std::sqrt(alphabars_[i]), std::sqrt(1.0 - alphabars_[i])};
  }
  return {1.0, sigmas_[i]};
}

ContinuousSchedule ContinuousSchedule::Vp(double beta_min, double beta_max) {
  if (!(beta_min > 0.0 && beta_min < beta_max)) {
    throw ConfigError("vp: require 0 < beta_min < beta_max");
  }
  ContinuousSchedule s;
  s.kind_ = ModelKind::kVpsde;
  s.beta_min_ = beta_min;
  s.beta_max_ = beta_max;
  return s;
}

ContinuousSchedule ContinuousSchedule::Ve(double sigma_min,
                                          double sigma_max) {
  if (!(sigma_min > 0.0 && sigma_min < sigma_max)) {
    throw ConfigError("ve: require 0 < sigma_min < sigma_max");
  }
  ContinuousSchedule s;
  s.kind_ = ModelKind::kVesde;
  s.sigma_min_ = sigma_min;
  s.sigma_max_ = sigma_max;
  return s;
}

void ContinuousSchedule::CheckTime(double t) const {
  if (!(t > 0.0 && t <= 1.0)) {
    throw RangeError("time " + std::to_string(t) + " outside (0, 1]");
  }
}

double ContinuousSchedule::Beta(double t) const {
  return beta_min_ + t * (beta_max_ - beta_min_);
}

double ContinuousSchedule::IntegratedBeta(double t) const {
  return beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
}

double ContinuousSchedule::Sigma(double t) const {
  return sigma_min_ * std::pow(sigma_max_ / sigma_min_, t);
}

MarginalStats ContinuousSchedule::Marginal(double t) const {
  CheckTime(t);
  if (kind_ == ModelKind::kVpsde) {
    const double b = IntegratedBeta(t);
    return {std::exp(-0.5 * b), std::sqrt(-std::expm1(-b))};
  }
  return {1.0, Sigma(t)};
}

double ContinuousSchedule::DriftCoef(double t) const {
  return kind_ == ModelKind::kVpsde ? -0.5 * Beta(t) : 0.0;
}

double ContinuousSchedule::Diffusion(double t) const {
  if (kind_ == ModelKind::kVpsde) return std::sqrt(Beta(t));
  return Sigma(t) * std::sqrt(2.0 * std::log(sigma_max_ / sigma_min_));
}

SdeCoefficients ContinuousSchedule::Coefficients(const Tensor& x,
                                                 double t) const {
  CheckTime(t);
  const double c = DriftCoef(t);
  std::vector<double> drift(x.size());
  for (std::size_t i = 0; i < drift.size(); ++i) drift[i] = c * x[i];
  return {Tensor(x.shape(), std::move(drift)), Diffusion(t)};
}

double ContinuousSchedule::PriorStd() const {
  return kind_ == ModelKind::kVpsde ? 1.0 : sigma_max_;
}

double ContinuousSchedule::PriorLogp(std::span<const double> x) const {
  const double s = PriorStd();
  double sq = 0.0;
  for (double v : x) sq += v * v;
  const double m = static_cast<double>(x.size());
  return -0.5 * m * std::log(2.0 * std::numbers::pi * s * s) -
         0.5 * sq / (s * s);
}

Schedule Schedule::Default(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDdpm:
      return DiscreteSchedule::Ddpm();
    case ModelKind::kSmld:
      return DiscreteSchedule::Smld();
    case ModelKind::kVpsde:
      return ContinuousSchedule::Vp();
    case ModelKind::kVesde:
      return ContinuousSchedule::Ve();
  }
  throw ConfigError("unknown model kind");
}

ModelKind Schedule::kind() const {
  return is_discrete() ? std::get<0>(impl_).kind() : std::get<1>(impl_).kind();
}

const DiscreteSchedule& Schedule::discrete() const {
  if (!is_discrete()) {
    throw KindError(std::string(ModelKindName(kind())) +
                    " has no discrete schedule");
  }
  return std::get<0>(impl_);
}

const ContinuousSchedule& Schedule::continuous() const {
  if (is_discrete()) {
    throw KindError(std::string(ModelKindName(kind())) +
                    " has no continuous schedule");
  }
  return std::get<1>(impl_);
}

int Schedule::steps() const {
  return is_discrete() ? std::get<0>(impl_).steps() : 1;
}

namespace {
int StepIndex(double t) {
  const double r = std::round(t);
  if (r != t) {
    throw RangeError("discrete step " + std::to_string(t) +
                     " is not an integer");
  }
  return static_cast<int>(r);
}
}  // namespace

MarginalStats Schedule::Marginal(double t) const {
  if (is_discrete()) return std::get<0>(impl_).Marginal(StepIndex(t));
  return std::get<1>(impl_).Marginal(t);
}

double Schedule::NetworkTime(double t) const {
  if (is_discrete()) return t / static_cast<double>(steps());
  return t;
}

double Schedule::PriorStd() const {
  if (!is_discrete()) return std::get<1>(impl_).PriorStd();
  const auto& d = std::get<0>(impl_);
  return d.kind() == ModelKind::kDdpm ? 1.0 : d.sigma_max();
}

ContinuousSchedule Schedule::Counterpart() const {
  if (!is_discrete()) return std::get<1>(impl_);
  const auto& d = std::get<0>(impl_);
  if (d.kind() == ModelKind::kDdpm) {
    const double n = static_cast<double>(d.steps());
    return ContinuousSchedule::Vp(d.betas().front() * n, d.betas().back() * n);
  }
  return ContinuousSchedule::Ve(d.sigma_min(), d.sigma_max());
}

double Schedule::CounterpartNetworkTime(double tau) const {
  if (!is_discrete()) return tau;
  const auto& d = std::get<0>(impl_);
  const double n = static_cast<double>(d.steps());
  if (d.kind() == ModelKind::kDdpm) {
    // Step t sits at tau = (t + 1) / T.
    return std::max(tau * n - 1.0, 0.0) / n;
  }
  // Step t sits at tau = 1 - t / (T - 1).
  return (1.0 - tau) * (n - 1.0) / n;
}

ScheduleParams ScheduleParams::Defaults(ModelKind kind) {
  ScheduleParams p;
  p.kind = kind;
  return p;
}

Schedule ScheduleParams::Build() const {
  switch (kind) {
    case ModelKind::kDdpm:
      return DiscreteSchedule::Ddpm(steps, beta_start, beta_end);
    case ModelKind::kSmld:
      return DiscreteSchedule::Smld(steps, sigma_max, sigma_min);
    case ModelKind::kVpsde:
      return ContinuousSchedule::Vp(beta_min, beta_max);
    case ModelKind::kVesde:
      return ContinuousSchedule::Ve(sigma_min, sigma_max);
  }
  throw ConfigError("unknown model kind");
}

Tensor Perturb(const Schedule& schedule, const Tensor& x0, double t,
               const Tensor& eps) {
  if (eps.shape() != x0.shape()) {
    throw ShapeError("perturb: eps shape " + ShapeString(eps.shape()) +
                     " differs from x0 shape " + ShapeString(x0.shape()));
  }
  const MarginalStats ms = schedule.Marginal(t);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = ms.mean_coef * x0[i] + ms.std * eps[i];
  }
  return Tensor(x0.shape(), std::move(out));
}

}  // namespace diffmia
