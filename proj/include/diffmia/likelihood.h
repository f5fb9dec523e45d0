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

#ifndef DIFFMIA_LIKELIHOOD_H_
#define DIFFMIA_LIKELIHOOD_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "diffmia/autodiff.h"
#include "diffmia/kernels.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"
#include "diffmia/tensor.h"

namespace diffmia {

enum class ProbeDist { kRademacher, kGaussian };

std::string_view ProbeDistName(ProbeDist dist);
ProbeDist ParseProbeDist(std::string_view name);

struct OdeConfig {
  double rtol = 1e-5;
  double atol = 1e-5;
  int n_probes = 8;
  ProbeDist probe_dist = ProbeDist::kRademacher;
  std::uint64_t seed = 0;
  long max_steps = 20000;
};

void ValidateOdeConfig(const OdeConfig& config);

// Row-wise vector field recorded on a tape: [B, m] -> [B, m].
using VectorField = std::function<Var(Tape&, Var)>;

// Probability-flow drift f(x,t) - g(t)^2 / 2 * score(x,t) on the schedule's
// continuous counterpart. t is counterpart time in [kTimeCutoff, 1].
Var PfDriftNode(Tape& tape, const ScoreModel& model, const Schedule& schedule,
                Var x, double t);
Tensor PfDrift(const ScoreModel& model, const Tensor& x, double t,
               const Schedule& schedule);

// Mean over probes of v^T (df/dx) v at the point x [m]. All probes share
// one batched VJP.
double HutchinsonTrace(const VectorField& field, const Tensor& x,
                       std::span<const Tensor> probes);
double HutchinsonDivergence(const ScoreModel& model, const Tensor& x,
                            double t, const Schedule& schedule,
                            std::span<const Tensor> probes);

std::vector<Tensor> DrawProbes(std::uint64_t seed, std::uint64_t stream,
                               std::size_t dim, int count, ProbeDist dist);

struct LikelihoodResult {
  double log_likelihood = 0.0;  // nats
  double bits_per_dim = 0.0;
  double prior_logp = 0.0;
  double delta_logp = 0.0;  // integral of the divergence
  Tensor x_T;
  long ode_steps = 0;
  long evaluations = 0;
};

// log p(x) = prior_logp(x_T) + integral of div f over [cutoff, 1], with the
// state carried forward by dx/dt = f. Probes come from (config.seed, stream).
LikelihoodResult LogLikelihood(const ScoreModel& model, const Tensor& x,
                               const Schedule& schedule,
                               const OdeConfig& config,
                               std::uint64_t stream = 0);

// One result per row of points; nullopt where the integrator gave up.
// Row i uses stream ids[i].
std::vector<std::optional<LikelihoodResult>> LogLikelihoods(
    const ScoreModel& model, const Tensor& points,
    std::span<const std::uint64_t> ids, const Schedule& schedule,
    const OdeConfig& config, Exec exec = DefaultExec());

}  // namespace diffmia

#endif  // DIFFMIA_LIKELIHOOD_H_
