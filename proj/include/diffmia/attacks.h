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

#ifndef DIFFMIA_ATTACKS_H_
#define DIFFMIA_ATTACKS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diffmia/kernels.h"
#include "diffmia/likelihood.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"
#include "diffmia/tensor.h"

namespace diffmia {

enum class Orientation { kHigherIsMember, kLowerIsMember };

std::string_view OrientationName(Orientation o);
Orientation ParseOrientation(std::string_view name);

struct AttackScoreSet {
  std::vector<double> member_scores;
  std::vector<double> nonmember_scores;
  std::vector<std::uint64_t> member_ids;
  std::vector<std::uint64_t> nonmember_ids;
  Orientation orientation = Orientation::kLowerIsMember;
  // Step for loss scores; empty for likelihood scores.
  std::optional<double> step;
  std::size_t excluded = 0;
};

// Both sides non-empty, all finite, ids aligned with scores when present.
void ValidateScoreSet(const AttackScoreSet& set);

// Ties are nonmember.
bool Decide(double score, double threshold, Orientation orientation);

// The evaluation split handed to both attacks. Ids key the noise streams.
struct EvalSet {
  Tensor members;     // [n_m, m]
  Tensor nonmembers;  // [n_n, m]
  std::vector<std::uint64_t> member_ids;
  std::vector<std::uint64_t> nonmember_ids;
};

// (1/m) * mean over k draws of the training objective at step t. Draw d
// uses noise from (seed, sample_id, t, d).
double PerStepLoss(const ScoreModel& model, const Tensor& x, double t,
                   const Schedule& schedule, int k_draws, std::uint64_t seed,
                   std::uint64_t sample_id = 0);
// Same quantity for every row of points in one batched pass.
std::vector<double> PerStepLosses(const ScoreModel& model,
                                  const Tensor& points,
                                  std::span<const std::uint64_t> ids,
                                  double t, const Schedule& schedule,
                                  int k_draws, std::uint64_t seed);

struct StepProfile {
  std::vector<double> steps;
  std::vector<AttackScoreSet> sets;
};

// All discrete steps 0, stride, 2*stride, ... below T.
std::vector<double> DiscreteSteps(int steps, int stride = 1);
// count points t_i = cutoff + (1 - cutoff) * (i + 1) / count.
std::vector<double> ContinuousGrid(std::size_t count);
// count sorted uniform draws in (cutoff, 1].
std::vector<double> ContinuousRandomSteps(std::size_t count,
                                          std::uint64_t seed);

StepProfile LossAttackScores(const ScoreModel& model, const EvalSet& eval,
                             std::span<const double> steps,
                             const Schedule& schedule, int k_draws,
                             std::uint64_t seed, Exec exec = DefaultExec());

// Likelihood scores; samples whose integration fails are dropped and
// counted in `excluded`.
AttackScoreSet LikelihoodAttackScores(const ScoreModel& model,
                                      const EvalSet& eval,
                                      const Schedule& schedule,
                                      const OdeConfig& config,
                                      Exec exec = DefaultExec());

}  // namespace diffmia

#endif  // DIFFMIA_ATTACKS_H_
