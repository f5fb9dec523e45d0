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

#include "diffmia/likelihood.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "diffmia/errors.h"
#include "diffmia/ode.h"
#include "diffmia/rng.h"

namespace diffmia {

std::string_view ProbeDistName(ProbeDist dist) {
  return dist == ProbeDist::kRademacher ? "rademacher" : "gaussian";
}

ProbeDist ParseProbeDist(std::string_view name) {
  if (name == "rademacher") return ProbeDist::kRademacher;
  if (name == "gaussian") return ProbeDist::kGaussian;
  throw ConfigError("unknown probe distribution '" + std::string(name) + "'");
}

void ValidateOdeConfig(const OdeConfig& config) {
  if (!(config.rtol > 0.0) || !(config.atol > 0.0)) {
    throw ConfigError("ode: rtol and atol must be > 0");
  }
  if (config.n_probes < 1) throw ConfigError("ode: n_probes must be >= 1");
  if (config.max_steps < 1) throw ConfigError("ode: max_steps must be >= 1");
}

Var PfDriftNode(Tape& tape, const ScoreModel& model, const Schedule& schedule,
                Var x, double t) {
  if (t < kTimeCutoff * (1.0 - 1e-12) || t > 1.0) {
    throw RangeError("pf_drift: time " + std::to_string(t) +
                     " outside [cutoff, 1]");
  }
  const ContinuousSchedule sde = schedule.Counterpart();
  const double std = sde.Marginal(t).std;
  const double g = sde.Diffusion(t);
  const std::vector<double> u{schedule.CounterpartNetworkTime(t)};
  Var score = ScoreFromRaw(model.Apply(tape, x, u), model.param_kind(), std);
  Var drift = score * (-0.5 * g * g);
  const double a = sde.DriftCoef(t);
  if (a != 0.0) drift = drift + x * a;
  return drift;
}

Tensor PfDrift(const ScoreModel& model, const Tensor& x, double t,
               const Schedule& schedule) {
  const bool single = x.rank() == 1;
  const Tensor batch = single ? x.Reshape({1, x.size()}) : x;
  Tape tape;
  Var out = PfDriftNode(tape, model, schedule, tape.Constant(batch), t);
  return single ? out.value().Reshape({x.size()}) : out.value();
}

namespace {

struct TraceAndValue {
  double trace = 0.0;
  std::vector<double> value;  // field at x
};

TraceAndValue BatchedTrace(const VectorField& field, const Tensor& x,
                           std::span<const Tensor> probes) {
  if (x.rank() != 1) {
    throw ShapeError("hutchinson: x must be [m], got " +
                     ShapeString(x.shape()));
  }
  if (probes.empty()) throw ContractError("hutchinson: no probes");
  const std::size_t m = x.size();
  const std::size_t p = probes.size();
  std::vector<double> rep(p * m);
  std::vector<double> cot(p * m);
  for (std::size_t i = 0; i < p; ++i) {
    if (probes[i].shape() != x.shape()) {
      throw ShapeError("hutchinson: probe shape " +
                       ShapeString(probes[i].shape()) + " differs from " +
                       ShapeString(x.shape()));
    }
    for (std::size_t j = 0; j < m; ++j) {
      rep[i * m + j] = x[j];
      cot[i * m + j] = probes[i][j];
    }
  }
  Tape tape;
  Var xs = tape.Leaf(Tensor::Matrix(p, m, std::move(rep)));
  Var out = field(tape, xs);
  if (out.shape() != xs.shape()) {
    throw ShapeError("hutchinson: field output " + ShapeString(out.shape()) +
                     " differs from input " + ShapeString(xs.shape()));
  }
  const Tensor v = Tensor::Matrix(p, m, cot);
  const Tensor g = tape.Vjp(out, v, xs);
  double total = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < m; ++j) dot += cot[i * m + j] * g[i * m + j];
    total += dot;
  }
  TraceAndValue r;
  r.trace = total / static_cast<double>(p);
  const auto row = out.value().data().subspan(0, m);
  r.value.assign(row.begin(), row.end());
  return r;
}

}  // namespace

double HutchinsonTrace(const VectorField& field, const Tensor& x,
                       std::span<const Tensor> probes) {
  return BatchedTrace(field, x, probes).trace;
}

double HutchinsonDivergence(const ScoreModel& model, const Tensor& x,
                            double t, const Schedule& schedule,
                            std::span<const Tensor> probes) {
  return HutchinsonTrace(
      [&](Tape& tape, Var xs) {
        return PfDriftNode(tape, model, schedule, xs, t);
      },
      x, probes);
}

std::vector<Tensor> DrawProbes(std::uint64_t seed, std::uint64_t stream,
                               std::size_t dim, int count, ProbeDist dist) {
  Rng rng = Rng::Derive(seed, {stream});
  std::vector<Tensor> probes;
  probes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    probes.push_back(dist == ProbeDist::kRademacher
                         ? rng.RademacherTensor({dim})
                         : rng.NormalTensor({dim}));
  }
  return probes;
}

LikelihoodResult LogLikelihood(const ScoreModel& model, const Tensor& x,
                               const Schedule& schedule,
                               const OdeConfig& config, std::uint64_t stream) {
  ValidateOdeConfig(config);
  const bool row = x.rank() == 2 && x.dim(0) == 1;
  const Tensor point = row ? x.Reshape({x.size()}) : x;
  if (point.rank() != 1 || point.size() != model.dim()) {
    throw ShapeError("log_likelihood: x " + ShapeString(x.shape()) +
                     " does not match model dimension " +
                     std::to_string(model.dim()));
  }
  if (!point.AllFinite()) throw ContractError("log_likelihood: non-finite x");
  const std::size_t m = point.size();
  const std::vector<Tensor> probes =
      DrawProbes(config.seed, stream, m, config.n_probes, config.probe_dist);

  // Integrated in s = sqrt(t): near the cutoff an epsilon-parameterized
  // score grows like 1 / sqrt(t), and dt = 2 s ds cancels that.
  OdeRhs rhs = [&](double s, const std::vector<double>& y,
                   std::vector<double>& dydt) {
    const double t = std::min(s * s, 1.0);
    const Tensor state = Tensor::Vector({y.begin(), y.begin() + m});
    TraceAndValue tv = BatchedTrace(
        [&](Tape& tape, Var xs) {
          return PfDriftNode(tape, model, schedule, xs, t);
        },
        state, probes);
    for (std::size_t j = 0; j < m; ++j) dydt[j] = 2.0 * s * tv.value[j];
    dydt[m] = 2.0 * s * tv.trace;
  };

  std::vector<double> y0(point.data().begin(), point.data().end());
  y0.push_back(0.0);
  OdeTolerances tol{config.rtol, config.atol, config.max_steps};
  const OdeSolution sol = IntegrateDopri5(rhs, std::sqrt(kTimeCutoff), 1.0, y0, tol);

  LikelihoodResult r;
  r.x_T = Tensor::Vector({sol.y.begin(), sol.y.begin() + m});
  r.delta_logp = sol.y[m];
  r.prior_logp = schedule.Counterpart().PriorLogp(r.x_T.data());
  r.log_likelihood = r.prior_logp + r.delta_logp;
  if (!std::isfinite(r.log_likelihood)) {
    throw DivergenceError("log_likelihood: non-finite result");
  }
  r.bits_per_dim =
      -r.log_likelihood / (static_cast<double>(m) * std::numbers::ln2);
  r.ode_steps = sol.accepted;
  r.evaluations = sol.evaluations;
  return r;
}

std::vector<std::optional<LikelihoodResult>> LogLikelihoods(
    const ScoreModel& model, const Tensor& points,
    std::span<const std::uint64_t> ids, const Schedule& schedule,
    const OdeConfig& config, Exec exec) {
  if (points.rank() != 2) {
    throw ShapeError("log_likelihoods: points must be [n, m]");
  }
  if (ids.size() != points.dim(0)) {
    throw ShapeError("log_likelihoods: one id per row required");
  }
  ValidateOdeConfig(config);
  std::vector<std::optional<LikelihoodResult>> out(points.dim(0));
  ParallelFor(
      out.size(),
      [&](std::size_t i) {
        try {
          out[i] = LogLikelihood(model, points.Row(i), schedule, config,
                                 ids[i]);
        } catch (const ConvergenceError&) {
          out[i].reset();
        }
      },
      exec);
  return out;
}

}  // namespace diffmia
