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

#include "diffmia/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diffmia/errors.h"
#include "diffmia/kernels.h"

namespace diffmia {
namespace {

Tensor Column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor::Matrix(n, 1, std::move(values));
}

Tensor AsBatch(const Tensor& v) {
  return v.rank() == 1 ? v.Reshape({1, v.dim(0)}) : v;
}

double SingleLoss(const ScoreModel& model, const Schedule& schedule,
                  const Tensor& x0, double t, const Tensor& eps) {
  if (x0.shape() != eps.shape()) {
    throw ShapeError("loss: eps shape " + ShapeString(eps.shape()) +
                     " differs from x0 shape " + ShapeString(x0.shape()));
  }
  Tape tape;
  const double times[1] = {t};
  Var loss = ObjectiveNode(
      tape, schedule, model.param_kind(), AsBatch(x0), times, AsBatch(eps),
      [&](Var x_t, std::span<const double> u) {
        return model.Apply(tape, x_t, u);
      });
  return loss.value().item();
}

}  // namespace

Var ObjectiveTerms(Tape& tape, const Schedule& schedule, ParamKind param_kind,
                   const Tensor& x0, std::span<const double> times,
                   const Tensor& eps, const ApplyFn& apply) {
  if (x0.rank() != 2 || eps.shape() != x0.shape()) {
    throw ShapeError("objective: x0 " + ShapeString(x0.shape()) + " and eps " +
                     ShapeString(eps.shape()) + " must be equal [B, m]");
  }
  const std::size_t rows = x0.dim(0);
  const std::size_t m = x0.dim(1);
  if (times.size() != rows) {
    throw ShapeError("objective: " + std::to_string(times.size()) +
                     " times for " + std::to_string(rows) + " rows");
  }
  const ModelKind kind = schedule.kind();
  if (kind == ModelKind::kDdpm && param_kind != ParamKind::kEpsilon) {
    throw KindError("ddpm objective needs an epsilon-parameterized model");
  }
  if (kind == ModelKind::kSmld && param_kind != ParamKind::kScore) {
    throw KindError("smld objective needs a score-parameterized model");
  }

  std::vector<double> xt(rows * m);
  std::vector<double> target(rows * m);
  std::vector<double> score_scale(rows);
  std::vector<double> weight(rows);
  std::vector<double> u(rows);
  const double sign = param_kind == ParamKind::kEpsilon ? -1.0 : 1.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!schedule.is_discrete() && times[r] < kTimeCutoff) {
      throw RangeError("objective: time " + std::to_string(times[r]) +
                       " below cutoff");
    }
    const MarginalStats ms = schedule.Marginal(times[r]);
    if (kind != ModelKind::kDdpm && ms.std == 0.0) {
      throw SingularityError("objective: marginal std is 0");
    }
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t i = r * m + c;
      xt[i] = ms.mean_coef * x0[i] + ms.std * eps[i];
      // Kernel score: -(x_t - mean_coef x0) / std^2.
      if (kind != ModelKind::kDdpm) {
        target[i] = -(xt[i] - ms.mean_coef * x0[i]) / (ms.std * ms.std);
      }
    }
    score_scale[r] = sign / ms.std;
    weight[r] = ms.std * ms.std;
    u[r] = schedule.NetworkTime(times[r]);
  }

  Var raw = apply(tape.Constant(Tensor(x0.shape(), std::move(xt))), u);
  if (kind == ModelKind::kDdpm) return Square(tape.Constant(eps) - raw);
  Var score = raw * tape.Constant(Column(std::move(score_scale)));
  Var residual = score - tape.Constant(Tensor(x0.shape(), std::move(target)));
  return Square(residual) * tape.Constant(Column(std::move(weight)));
}

Var ObjectiveNode(Tape& tape, const Schedule& schedule, ParamKind param_kind,
                  const Tensor& x0, std::span<const double> times,
                  const Tensor& eps, const ApplyFn& apply) {
  Var terms = ObjectiveTerms(tape, schedule, param_kind, x0, times, eps, apply);
  return Sum(terms) * (1.0 / static_cast<double>(x0.dim(0)));
}

std::vector<double> RowObjectives(const ScoreModel& model,
                                  const Schedule& schedule, const Tensor& x0,
                                  std::span<const double> times,
                                  const Tensor& eps) {
  Tape tape;
  Var terms = ObjectiveTerms(tape, schedule, model.param_kind(), x0, times,
                             eps, [&](Var x_t, std::span<const double> u) {
                               return model.Apply(tape, x_t, u);
                             });
  const Tensor& v = terms.value();
  const std::size_t m = v.dim(1);
  std::vector<double> out(v.dim(0), 0.0);
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t c = 0; c < m; ++c) out[r] += v[r * m + c];
  }
  return out;
}

double LossDdpm(const ScoreModel& model, const Schedule& schedule,
                const Tensor& x0, double t, const Tensor& eps) {
  if (schedule.kind() != ModelKind::kDdpm) {
    throw KindError("loss_ddpm: schedule is " +
                    std::string(ModelKindName(schedule.kind())));
  }
  return SingleLoss(model, schedule, x0, t, eps);
}

double LossSmld(const ScoreModel& model, const Schedule& schedule,
                const Tensor& x0, double t, const Tensor& eps) {
  if (schedule.kind() != ModelKind::kSmld) {
    throw KindError("loss_smld: schedule is " +
                    std::string(ModelKindName(schedule.kind())));
  }
  return SingleLoss(model, schedule, x0, t, eps);
}

double LossSde(const ScoreModel& model, const Schedule& schedule,
               const Tensor& x0, double t, const Tensor& eps) {
  if (schedule.is_discrete()) {
    throw KindError("loss_sde: schedule is discrete");
  }
  return SingleLoss(model, schedule, x0, t, eps);
}

double Loss(const ScoreModel& model, const Schedule& schedule,
            const Tensor& x0, double t, const Tensor& eps) {
  return SingleLoss(model, schedule, x0, t, eps);
}

LossAndGrad ObjectiveGradient(const ScoreNetwork& net, const Schedule& schedule,
                              const Tensor& x0, std::span<const double> times,
                              const Tensor& eps) {
  Tape tape;
  std::vector<Var> params;
  params.reserve(net.parameters().size());
  for (const Tensor& p : net.parameters()) params.push_back(tape.Leaf(p));
  Var loss = ObjectiveNode(tape, schedule, net.param_kind(), x0, times, eps,
                           [&](Var x_t, std::span<const double> u) {
                             return net.ApplyWith(tape, x_t, u, params);
                           });
  return {loss.value().item(), tape.Grad(loss)};
}

void Adam::Step(std::vector<Tensor>& params,
                const std::vector<Tensor>& grads) {
  if (grads.size() != params.size()) {
    throw ShapeError("adam: gradient count does not match parameter count");
  }
  if (m_.empty()) {
    for (const Tensor& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor& p = params[k];
    const Tensor& g = grads[k];
    if (g.shape() != p.shape()) {
      throw ShapeError("adam: gradient shape " + ShapeString(g.shape()) +
                       " differs from parameter shape " +
                       ShapeString(p.shape()));
    }
    std::vector<double> next(p.data().begin(), p.data().end());
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < next.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      next[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    params[k] = Tensor(p.shape(), std::move(next));
  }
}

Minibatch DrawMinibatch(const Tensor& data, std::size_t batch_size,
                        const Schedule& schedule, Rng& rng) {
  const std::size_t n = data.dim(0);
  const std::size_t m = data.dim(1);
  const auto idx = rng.SampleWithoutReplacement(n, batch_size);
  std::vector<double> x0(batch_size * m);
  for (std::size_t r = 0; r < batch_size; ++r) {
    for (std::size_t c = 0; c < m; ++c) x0[r * m + c] = data.at(idx[r], c);
  }
  std::vector<double> times(batch_size);
  for (double& t : times) {
    if (schedule.is_discrete()) {
      t = static_cast<double>(
          rng.Below(static_cast<std::uint64_t>(schedule.steps())));
    } else {
      t = rng.Uniform(kTimeCutoff, 1.0);
    }
  }
  Tensor eps = rng.NormalTensor({batch_size, m});
  return {Tensor::Matrix(batch_size, m, std::move(x0)), std::move(times),
          std::move(eps)};
}

namespace {

double GlobalNorm(const std::vector<Tensor>& grads) {
  double sq = 0.0;
  for (const Tensor& g : grads) {
    for (double v : g.data()) sq += v * v;
  }
  return std::sqrt(sq);
}

}  // namespace

ClippedSum ClippedGradientSum(const ScoreNetwork& net,
                              const Schedule& schedule, const Minibatch& batch,
                              double clip_bound) {
  if (!(clip_bound > 0.0)) {
    throw ConfigError("dp: clip bound must be positive");
  }
  const std::size_t rows = batch.x0.dim(0);
  std::vector<LossAndGrad> per_sample(rows);
  ParallelFor(rows, [&](std::size_t i) {
    const double t[1] = {batch.times[i]};
    per_sample[i] = ObjectiveGradient(
        net, schedule, AsBatch(batch.x0.Row(i)), t, AsBatch(batch.eps.Row(i)));
  });

  ClippedSum out;
  std::vector<std::vector<double>> acc;
  for (const Tensor& p : net.parameters()) acc.emplace_back(p.size(), 0.0);
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& g = per_sample[i].grads;
    const double norm = GlobalNorm(g);
    const double factor = norm > clip_bound ? clip_bound / norm : 1.0;
    out.raw_norms.push_back(norm);
    out.clipped_norms.push_back(norm * factor);
    loss_sum += per_sample[i].loss;
    for (std::size_t k = 0; k < g.size(); ++k) {
      for (std::size_t j = 0; j < acc[k].size(); ++j) {
        acc[k][j] += factor * g[k][j];
      }
    }
  }
  for (std::size_t k = 0; k < acc.size(); ++k) {
    out.sum.emplace_back(net.parameters()[k].shape(), std::move(acc[k]));
  }
  out.mean_loss = loss_sum / static_cast<double>(rows);
  return out;
}

std::vector<Tensor> PrivatizeGradient(const ClippedSum& clipped,
                                      std::size_t batch_size,
                                      const DpConfig& dp, Rng& rng) {
  const double noise_std = dp.noise_multiplier * dp.clip_bound;
  const double inv = 1.0 / static_cast<double>(batch_size);
  std::vector<Tensor> out;
  for (const Tensor& s : clipped.sum) {
    std::vector<double> g(s.data().begin(), s.data().end());
    for (double& v : g) {
      if (noise_std > 0.0) v += noise_std * rng.Normal();
      v *= inv;
    }
    out.emplace_back(s.shape(), std::move(g));
  }
  return out;
}

StepStats TrainStep(ScoreNetwork& net, Adam& adam, const Minibatch& batch,
                    const Schedule& schedule) {
  LossAndGrad lg =
      ObjectiveGradient(net, schedule, batch.x0, batch.times, batch.eps);
  std::vector<Tensor> params = net.parameters();
  adam.Step(params, lg.grads);
  net.set_parameters(std::move(params));
  return {lg.loss, 0.0};
}

StepStats DpTrainStep(ScoreNetwork& net, Adam& adam, const Minibatch& batch,
                      const DpConfig& dp, const Schedule& schedule,
                      Rng& noise_rng) {
  ClippedSum clipped =
      ClippedGradientSum(net, schedule, batch, dp.clip_bound);
  std::vector<Tensor> grads =
      PrivatizeGradient(clipped, batch.x0.dim(0), dp, noise_rng);
  std::vector<Tensor> params = net.parameters();
  adam.Step(params, grads);
  net.set_parameters(std::move(params));
  return {clipped.mean_loss, *std::max_element(clipped.clipped_norms.begin(),
                                               clipped.clipped_norms.end())};
}

void ValidateTrainConfig(const TrainConfig& config, std::size_t dataset_size) {
  if (config.steps < 1) throw ConfigError("train: steps must be >= 1");
  if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (dataset_size == 0) throw ConfigError("train: empty dataset");
  if (config.batch_size > dataset_size) {
    throw ConfigError("train: batch_size " +
                      std::to_string(config.batch_size) +
                      " exceeds dataset size " + std::to_string(dataset_size));
  }
  if (!(config.learning_rate >= 0.0)) {
    throw ConfigError("train: learning_rate must be non-negative");
  }
  if (config.history_interval < 1) {
    throw ConfigError("train: history_interval must be >= 1");
  }
  if (config.dp) {
    if (!(config.dp->clip_bound > 0.0)) {
      throw ConfigError("dp: clip bound must be positive");
    }
    if (!(config.dp->noise_multiplier >= 0.0)) {
      throw ConfigError("dp: noise multiplier must be non-negative");
    }
  }
}

TrainResult Train(ScoreNetwork net, const Tensor& data,
                  const TrainConfig& config, const Schedule& schedule) {
  if (data.rank() != 2 || data.dim(1) != net.dim()) {
    throw ShapeError("train: dataset shape " + ShapeString(data.shape()) +
                     " does not match model dimension " +
                     std::to_string(net.dim()));
  }
  ValidateTrainConfig(config, data.dim(0));
  Rng rng = Rng::Derive(config.seed, {0x7261696eULL});
  Rng noise_rng = Rng::Derive(config.seed, {0x6e6f697365ULL});
  Adam adam(config.learning_rate);
  TrainResult result;
  double window = 0.0;
  long in_window = 0;
  for (long step = 1; step <= config.steps; ++step) {
    Minibatch batch = DrawMinibatch(data, config.batch_size, schedule, rng);
    StepStats stats =
        config.dp ? DpTrainStep(net, adam, batch, *config.dp, schedule, noise_rng)
                  : TrainStep(net, adam, batch, schedule);
    if (!std::isfinite(stats.mean_loss)) {
      throw DivergenceError("train: non-finite loss at step " +
                            std::to_string(step));
    }
    if (config.dp) result.max_clipped_norms.push_back(stats.max_clipped_norm);
    window += stats.mean_loss;
    ++in_window;
    if (step % config.history_interval == 0 || step == config.steps) {
      result.history.push_back({step, window / static_cast<double>(in_window)});
      window = 0.0;
      in_window = 0;
    }
  }
  result.network = std::move(net);
  return result;
}

}  // namespace diffmia
