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

#include "diffmia/attacks.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffmia/errors.h"
#include "diffmia/rng.h"
#include "diffmia/trainer.h"

namespace diffmia {
namespace {

// Rows of (sample, draw) pairs evaluated per network batch.
constexpr std::size_t kRowsPerPass = 4096;

}  // namespace

std::string_view OrientationName(Orientation o) {
  return o == Orientation::kHigherIsMember ? "higher_is_member"
                                           : "lower_is_member";
}

Orientation ParseOrientation(std::string_view name) {
  if (name == "higher_is_member") return Orientation::kHigherIsMember;
  if (name == "lower_is_member") return Orientation::kLowerIsMember;
  throw SchemaError("unknown orientation '" + std::string(name) + "'");
}

void ValidateScoreSet(const AttackScoreSet& set) {
  if (set.member_scores.empty() || set.nonmember_scores.empty()) {
    throw ContractError("score set: members and nonmembers must be non-empty");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double s) { return std::isfinite(s); });
  };
  if (!finite(set.member_scores) || !finite(set.nonmember_scores)) {
    throw ContractError("score set: non-finite score");
  }
  if ((!set.member_ids.empty() &&
       set.member_ids.size() != set.member_scores.size()) ||
      (!set.nonmember_ids.empty() &&
       set.nonmember_ids.size() != set.nonmember_scores.size())) {
    throw ContractError("score set: ids and scores differ in length");
  }
}

bool Decide(double score, double threshold, Orientation orientation) {
  return orientation == Orientation::kLowerIsMember ? score < threshold
                                                    : score > threshold;
}

std::vector<double> PerStepLosses(const ScoreModel& model,
                                  const Tensor& points,
                                  std::span<const std::uint64_t> ids,
                                  double t, const Schedule& schedule,
                                  int k_draws, std::uint64_t seed) {
  if (k_draws < 1) throw ContractError("per_step_loss: k_draws must be >= 1");
  if (points.rank() != 2 || points.dim(1) != model.dim()) {
    throw ShapeError("per_step_loss: points " + ShapeString(points.shape()) +
                     " do not match model dimension");
  }
  if (ids.size() != points.dim(0)) {
    throw ShapeError("per_step_loss: one id per row required");
  }
  const std::size_t n = points.dim(0);
  const std::size_t m = points.dim(1);
  const auto k = static_cast<std::size_t>(k_draws);
  const std::size_t total = n * k;
  std::vector<double> sums(n, 0.0);
  for (std::size_t begin = 0; begin < total; begin += kRowsPerPass) {
    const std::size_t end = std::min(total, begin + kRowsPerPass);
    const std::size_t rows = end - begin;
    std::vector<double> x0(rows * m), eps(rows * m);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t sample = (begin + r) / k;
      const std::size_t draw = (begin + r) % k;
      Rng rng = Rng::Derive(seed, {ids[sample], DoubleKey(t), draw});
      for (std::size_t c = 0; c < m; ++c) {
        x0[r * m + c] = points.at(sample, c);
        eps[r * m + c] = rng.Normal();
      }
    }
    const std::vector<double> times(rows, t);
    const std::vector<double> loss =
        RowObjectives(model, schedule, Tensor::Matrix(rows, m, std::move(x0)),
                      times, Tensor::Matrix(rows, m, std::move(eps)));
    for (std::size_t r = 0; r < rows; ++r) sums[(begin + r) / k] += loss[r];
  }
  const double scale = 1.0 / (static_cast<double>(m) * k);
  for (double& s : sums) s *= scale;
  return sums;
}

double PerStepLoss(const ScoreModel& model, const Tensor& x, double t,
                   const Schedule& schedule, int k_draws, std::uint64_t seed,
                   std::uint64_t sample_id) {
  const Tensor row = x.rank() == 1 ? x.Reshape({1, x.size()}) : x;
  if (row.rank() != 2 || row.dim(0) != 1) {
    throw ShapeError("per_step_loss: x must be a single point");
  }
  const std::uint64_t id[] = {sample_id};
  return PerStepLosses(model, row, id, t, schedule, k_draws, seed)[0];
}

std::vector<double> DiscreteSteps(int steps, int stride) {
  if (steps < 1 || stride < 1) {
    throw ConfigError("steps and stride must be >= 1");
  }
  std::vector<double> out;
  for (int t = 0; t < steps; t += stride) out.push_back(t);
  return out;
}

std::vector<double> ContinuousGrid(std::size_t count) {
  if (count < 1) throw ConfigError("step grid needs at least one point");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = kTimeCutoff + (1.0 - kTimeCutoff) * static_cast<double>(i + 1) /
                               static_cast<double>(count);
  }
  return out;
}

std::vector<double> ContinuousRandomSteps(std::size_t count,
                                          std::uint64_t seed) {
  if (count < 1) throw ConfigError("step grid needs at least one point");
  Rng rng = Rng::Derive(seed, {0x7374657073});
  std::vector<double> out(count);
  // 1 - U with U in [0, 1) lands in (0, 1].
  for (double& t : out) t = kTimeCutoff + (1.0 - kTimeCutoff) * (1.0 - rng.Uniform());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

void CheckEval(const EvalSet& eval, std::size_t dim) {
  if (eval.members.rank() != 2 || eval.nonmembers.rank() != 2 ||
      eval.members.dim(0) == 0 || eval.nonmembers.dim(0) == 0) {
    throw ContractError("attack: member and nonmember sets must be non-empty");
  }
  if (eval.members.dim(1) != dim || eval.nonmembers.dim(1) != dim) {
    throw ShapeError("attack: evaluation points do not match model dimension");
  }
  if (eval.member_ids.size() != eval.members.dim(0) ||
      eval.nonmember_ids.size() != eval.nonmembers.dim(0)) {
    throw ShapeError("attack: one id per evaluation point required");
  }
}

}  // namespace

StepProfile LossAttackScores(const ScoreModel& model, const EvalSet& eval,
                             std::span<const double> steps,
                             const Schedule& schedule, int k_draws,
                             std::uint64_t seed, Exec exec) {
  CheckEval(eval, model.dim());
  if (steps.empty()) throw ContractError("loss attack: no steps");
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (!(steps[i] > steps[i - 1])) {
      throw ContractError("loss attack: steps must be strictly increasing");
    }
  }
  StepProfile profile;
  profile.steps.assign(steps.begin(), steps.end());
  profile.sets.resize(steps.size());
  ParallelFor(
      steps.size(),
      [&](std::size_t i) {
        AttackScoreSet& set = profile.sets[i];
        set.orientation = Orientation::kLowerIsMember;
        set.step = steps[i];
        set.member_ids = eval.member_ids;
        set.nonmember_ids = eval.nonmember_ids;
        set.member_scores = PerStepLosses(model, eval.members, eval.member_ids,
                                          steps[i], schedule, k_draws, seed);
        set.nonmember_scores =
            PerStepLosses(model, eval.nonmembers, eval.nonmember_ids, steps[i],
                          schedule, k_draws, seed);
      },
      exec);
  return profile;
}

AttackScoreSet LikelihoodAttackScores(const ScoreModel& model,
                                      const EvalSet& eval,
                                      const Schedule& schedule,
                                      const OdeConfig& config, Exec exec) {
  CheckEval(eval, model.dim());
  const auto mem = LogLikelihoods(model, eval.members, eval.member_ids,
                                  schedule, config, exec);
  const auto non = LogLikelihoods(model, eval.nonmembers, eval.nonmember_ids,
                                  schedule, config, exec);
  AttackScoreSet set;
  set.orientation = Orientation::kHigherIsMember;
  for (std::size_t i = 0; i < mem.size(); ++i) {
    if (!mem[i]) {
      ++set.excluded;
      continue;
    }
    set.member_scores.push_back(mem[i]->log_likelihood);
    set.member_ids.push_back(eval.member_ids[i]);
  }
  for (std::size_t i = 0; i < non.size(); ++i) {
    if (!non[i]) {
      ++set.excluded;
      continue;
    }
    set.nonmember_scores.push_back(non[i]->log_likelihood);
    set.nonmember_ids.push_back(eval.nonmember_ids[i]);
  }
  if (set.member_scores.empty() || set.nonmember_scores.empty()) {
    throw ConvergenceError("likelihood attack: every sample on one side failed");
  }
  return set;
}

}  // namespace diffmia
