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

#ifndef DIFFMIA_TRAINER_H_
#define DIFFMIA_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "diffmia/autodiff.h"
#include "diffmia/rng.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"

namespace diffmia {

struct DpConfig {
  double clip_bound = 1.0;
  double noise_multiplier = 1.0;
  // Recorded for reporting only; no accountant runs here.
  double delta = 5e-4;
};

struct TrainConfig {
  long steps = 20000;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::optional<DpConfig> dp;
  long history_interval = 100;
};

// Builds the raw model output for x_t at network times u.
using ApplyFn = std::function<Var(Var x_t, std::span<const double> u)>;

// Mean over the batch of the per-sample training objective, recorded on a
// tape. Rows of x0/eps are samples; times holds one schedule time per row.
//   DDPM:  ||eps - eps_theta(x_t)||^2
//   SMLD:  sigma^2 ||s_theta(x_t) + (x_t - x0) / sigma^2||^2
//   VP/VE: std^2 ||s_theta(x_t) + (x_t - mean_coef x0) / std^2||^2
Var ObjectiveNode(Tape& tape, const Schedule& schedule, ParamKind param_kind,
                  const Tensor& x0, std::span<const double> times,
                  const Tensor& eps, const ApplyFn& apply);

// Elementwise terms [B, m] whose sum over a row is that row's objective.
Var ObjectiveTerms(Tape& tape, const Schedule& schedule, ParamKind param_kind,
                   const Tensor& x0, std::span<const double> times,
                   const Tensor& eps, const ApplyFn& apply);

// Per-row objective values without a gradient.
std::vector<double> RowObjectives(const ScoreModel& model,
                                  const Schedule& schedule, const Tensor& x0,
                                  std::span<const double> times,
                                  const Tensor& eps);

// Single-sample objectives (x0 and eps of shape [m]), unnormalized by m.
double LossDdpm(const ScoreModel& model, const Schedule& schedule,
                const Tensor& x0, double t, const Tensor& eps);
double LossSmld(const ScoreModel& model, const Schedule& schedule,
                const Tensor& x0, double t, const Tensor& eps);
double LossSde(const ScoreModel& model, const Schedule& schedule,
               const Tensor& x0, double t, const Tensor& eps);
// Dispatches on the schedule's model kind.
double Loss(const ScoreModel& model, const Schedule& schedule,
            const Tensor& x0, double t, const Tensor& eps);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<Tensor> grads;  // aligned with ScoreNetwork::parameters()
};

// Batch-mean objective and its gradient with respect to every parameter.
LossAndGrad ObjectiveGradient(const ScoreNetwork& net, const Schedule& schedule,
                              const Tensor& x0, std::span<const double> times,
                              const Tensor& eps);

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  // In-place update of params given gradients of matching shapes.
  void Step(std::vector<Tensor>& params, const std::vector<Tensor>& grads);
  long steps() const { return t_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// One minibatch: rows of x0, their times and noise.
struct Minibatch {
  Tensor x0;
  std::vector<double> times;
  Tensor eps;
};

// Draws a minibatch without replacement, times uniform over all discrete
// steps or over [kTimeCutoff, 1], and fresh standard-normal noise.
Minibatch DrawMinibatch(const Tensor& data, std::size_t batch_size,
                        const Schedule& schedule, Rng& rng);

struct ClippedSum {
  std::vector<Tensor> sum;          // sum of clipped per-sample gradients
  std::vector<double> raw_norms;    // per-sample L2 norm before clipping
  std::vector<double> clipped_norms;  // after clipping
  double mean_loss = 0.0;
};

// Per-sample gradients g_i, each scaled by min(1, C / ||g_i||), summed in
// sample order. Per-sample work may run on worker threads.
ClippedSum ClippedGradientSum(const ScoreNetwork& net,
                              const Schedule& schedule, const Minibatch& batch,
                              double clip_bound);

// sum + N(0, (sigma * C)^2 I), divided by the batch size.
std::vector<Tensor> PrivatizeGradient(const ClippedSum& clipped,
                                      std::size_t batch_size,
                                      const DpConfig& dp, Rng& rng);

struct StepStats {
  double mean_loss = 0.0;
  double max_clipped_norm = 0.0;
};

// Plain step: batch-mean gradient fed to Adam.
StepStats TrainStep(ScoreNetwork& net, Adam& adam, const Minibatch& batch,
                    const Schedule& schedule);
// DP-SGD step: clip, sum, noise, average, then Adam.
StepStats DpTrainStep(ScoreNetwork& net, Adam& adam, const Minibatch& batch,
                      const DpConfig& dp, const Schedule& schedule,
                      Rng& noise_rng);

struct LossRecord {
  long step = 0;
  double mean_loss = 0.0;
};

struct TrainResult {
  ScoreNetwork network;
  std::vector<LossRecord> history;
  // Per step, the largest post-clip per-sample gradient norm (DP only).
  std::vector<double> max_clipped_norms;
};

// Runs config.steps optimizer steps on `data` ([n, m] member points).
// Throws ConfigError on invalid configs and DivergenceError on a non-finite
// loss.
TrainResult Train(ScoreNetwork net, const Tensor& data,
                  const TrainConfig& config, const Schedule& schedule);

void ValidateTrainConfig(const TrainConfig& config, std::size_t dataset_size);

}  // namespace diffmia

#endif  // DIFFMIA_TRAINER_H_
