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

#include "diffmia/sampler.h"

#include <cmath>
#include <string>
#include <vector>

#include "diffmia/errors.h"
#include "diffmia/rng.h"

namespace diffmia {
namespace {

void CheckSame(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + ShapeString(a.shape()) +
                     " and " + ShapeString(b.shape()) + " differ");
  }
}

}  // namespace

Tensor AncestralUpdate(const Tensor& x, const Tensor& eps_pred, double beta,
                       double alphabar, const Tensor& noise) {
  CheckSame("ancestral", x, eps_pred);
  CheckSame("ancestral", x, noise);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
  const double eps_coef = beta / std::sqrt(1.0 - alphabar);
  const double sigma = std::sqrt(beta);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = inv_sqrt_alpha * (x[i] - eps_coef * eps_pred[i]) +
             sigma * noise[i];
  }
  return Tensor(x.shape(), std::move(out));
}

Tensor LangevinUpdate(const Tensor& x, const Tensor& score, double alpha,
                      const Tensor& noise) {
  CheckSame("langevin", x, score);
  CheckSame("langevin", x, noise);
  if (!(alpha > 0.0)) throw ContractError("langevin: step size must be > 0");
  const double root = std::sqrt(alpha);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x[i] + 0.5 * alpha * score[i] + root * noise[i];
  }
  return Tensor(x.shape(), std::move(out));
}

Tensor ReverseSdeUpdate(const Tensor& x, const Tensor& drift, double g,
                        const Tensor& score, double dt, const Tensor& noise) {
  CheckSame("reverse sde", x, drift);
  CheckSame("reverse sde", x, score);
  CheckSame("reverse sde", x, noise);
  const double root = std::sqrt(std::abs(dt));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x[i] + (drift[i] - g * g * score[i]) * dt + g * root * noise[i];
  }
  return Tensor(x.shape(), std::move(out));
}

Tensor DdpmAncestralStep(const ScoreModel& model, const Schedule& schedule,
                         const Tensor& x_t, int t, const Tensor& noise) {
  const DiscreteSchedule& d = schedule.discrete();
  d.CheckStep(t);
  const auto i = static_cast<std::size_t>(t);
  const Tensor eps = PredictEps(model, schedule, x_t, t);
  const Tensor used = t == 0 ? Tensor::Zeros(x_t.shape()) : noise;
  return AncestralUpdate(x_t, eps, d.betas()[i], d.alphabars()[i], used);
}

Tensor LangevinStep(const ScoreModel& model, const Schedule& schedule,
                    const Tensor& x, int level, double alpha,
                    const Tensor& noise) {
  const Tensor score = PredictScore(model, schedule, x, level);
  return LangevinUpdate(x, score, alpha, noise);
}

Tensor ReverseSdeEulerStep(const ScoreModel& model, const Schedule& schedule,
                           const Tensor& x, double t, double dt,
                           const Tensor& noise) {
  const ContinuousSchedule& c = schedule.continuous();
  if (!(dt < 0.0)) throw ContractError("reverse sde: dt must be negative");
  // Slack for the rounding of a grid that ends exactly at the cutoff.
  if (t + dt < kTimeCutoff * (1.0 - 1e-9)) {
    throw RangeError("reverse sde: step ends at " + std::to_string(t + dt) +
                     ", below the time cutoff");
  }
  const SdeCoefficients coef = c.Coefficients(x, t);
  const Tensor score = PredictScore(model, schedule, x, t);
  return ReverseSdeUpdate(x, coef.drift, coef.diffusion, score, dt, noise);
}

double LangevinStepSize(const DiscreteSchedule& schedule, int level,
                        double scale) {
  schedule.CheckStep(level);
  const double r = schedule.sigmas()[static_cast<std::size_t>(level)] /
                   schedule.sigma_min();
  return scale * r * r;
}

namespace {

// Fills rows [begin, end) of a [n, m] buffer with per-chain normals.
Tensor ChainNoise(std::vector<Rng>& rngs, std::size_t m, double scale) {
  std::vector<double> v(rngs.size() * m);
  for (std::size_t r = 0; r < rngs.size(); ++r) {
    for (std::size_t c = 0; c < m; ++c) v[r * m + c] = scale * rngs[r].Normal();
  }
  return Tensor::Matrix(rngs.size(), m, std::move(v));
}

Tensor RunChunk(const ScoreModel& model, const Schedule& schedule,
                const SamplerConfig& config, std::size_t first,
                std::size_t count) {
  const std::size_t m = model.dim();
  std::vector<Rng> rngs;
  rngs.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    rngs.push_back(Rng::Derive(config.seed, {first + c}));
  }
  Tensor x = ChainNoise(rngs, m, schedule.PriorStd());
  switch (schedule.kind()) {
    case ModelKind::kDdpm: {
      for (int t = schedule.steps() - 1; t >= 0; --t) {
        Tensor noise = t > 0 ? ChainNoise(rngs, m, 1.0) : Tensor::Zeros(x.shape());
        x = DdpmAncestralStep(model, schedule, x, t, noise);
      }
      break;
    }
    case ModelKind::kSmld: {
      const DiscreteSchedule& d = schedule.discrete();
      for (int level = 0; level < d.steps(); ++level) {
        const double alpha =
            LangevinStepSize(d, level, config.langevin_step_scale);
        for (int k = 0; k < config.langevin_inner_steps; ++k) {
          x = LangevinStep(model, schedule, x, level, alpha,
                           ChainNoise(rngs, m, 1.0));
        }
      }
      break;
    }
    case ModelKind::kVpsde:
    case ModelKind::kVesde: {
      const int n = config.sde_steps;
      const double h = (1.0 - kTimeCutoff) / n;
      for (int k = 0; k < n; ++k) {
        const double t = 1.0 - k * h;
        x = ReverseSdeEulerStep(model, schedule, x, t, -h,
                                ChainNoise(rngs, m, 1.0));
      }
      break;
    }
  }
  return x;
}

}  // namespace

Tensor Generate(const ScoreModel& model, const Schedule& schedule,
                const SamplerConfig& config, Exec exec) {
  if (config.langevin_inner_steps < 1 || config.sde_steps < 1 ||
      config.chunk_size < 1) {
    throw ConfigError("sampler: step counts and chunk size must be >= 1");
  }
  const std::size_t n = config.n_samples;
  const std::size_t m = model.dim();
  if (n == 0) return Tensor({0, m}, {});
  const std::size_t chunks = (n + config.chunk_size - 1) / config.chunk_size;
  std::vector<Tensor> parts(chunks);
  ParallelFor(
      chunks,
      [&](std::size_t c) {
        const std::size_t first = c * config.chunk_size;
        const std::size_t count = std::min(config.chunk_size, n - first);
        parts[c] = RunChunk(model, schedule, config, first, count);
      },
      exec);
  std::vector<double> all;
  all.reserve(n * m);
  for (const Tensor& p : parts) {
    all.insert(all.end(), p.data().begin(), p.data().end());
  }
  Tensor out = Tensor::Matrix(n, m, std::move(all));
  if (!out.AllFinite()) {
    throw DivergenceError("generate: non-finite sample");
  }
  return out;
}

}  // namespace diffmia
