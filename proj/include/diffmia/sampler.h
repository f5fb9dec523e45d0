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

#ifndef DIFFMIA_SAMPLER_H_
#define DIFFMIA_SAMPLER_H_

#include <cstdint>

#include "diffmia/kernels.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"
#include "diffmia/tensor.h"

namespace diffmia {

struct SamplerConfig {
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  int langevin_inner_steps = 20;
  // alpha_i = scale * (sigma_i / sigma_min)^2
  double langevin_step_scale = 2e-5;
  int sde_steps = 1000;
  // Chains evaluated together in one network batch.
  std::size_t chunk_size = 256;
};

// The update rules with the network output supplied directly.
//   ancestral: (x - beta / sqrt(1 - alphabar) * eps) / sqrt(alpha) + sqrt(beta) * noise
//   langevin:  x + alpha / 2 * score + sqrt(alpha) * noise
//   reverse:   x + (drift - g^2 * score) * dt + g * sqrt(|dt|) * noise
Tensor AncestralUpdate(const Tensor& x, const Tensor& eps_pred, double beta,
                       double alphabar, const Tensor& noise);
Tensor LangevinUpdate(const Tensor& x, const Tensor& score, double alpha,
                      const Tensor& noise);
Tensor ReverseSdeUpdate(const Tensor& x, const Tensor& drift, double g,
                        const Tensor& score, double dt, const Tensor& noise);

// DDPM step from t to t-1. The noise term is dropped at t = 0.
Tensor DdpmAncestralStep(const ScoreModel& model, const Schedule& schedule,
                         const Tensor& x_t, int t, const Tensor& noise);
// One Langevin move at SMLD noise level `level` with step size alpha.
Tensor LangevinStep(const ScoreModel& model, const Schedule& schedule,
                    const Tensor& x, int level, double alpha,
                    const Tensor& noise);
// Euler-Maruyama step of the reverse-time SDE from t to t + dt (dt < 0).
// RangeError when t + dt falls below kTimeCutoff.
Tensor ReverseSdeEulerStep(const ScoreModel& model, const Schedule& schedule,
                           const Tensor& x, double t, double dt,
                           const Tensor& noise);

double LangevinStepSize(const DiscreteSchedule& schedule, int level,
                        double scale);

// Draws config.n_samples chains from the prior and runs the model's reverse
// process. Chain c uses the stream derived from (seed, c). Returns [n, m].
// DivergenceError on a non-finite sample.
Tensor Generate(const ScoreModel& model, const Schedule& schedule,
                const SamplerConfig& config, Exec exec = DefaultExec());

}  // namespace diffmia

#endif  // DIFFMIA_SAMPLER_H_
