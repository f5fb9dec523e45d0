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

// Oracles and helpers shared by the test binaries.

#ifndef DIFFMIA_TESTS_TEST_UTIL_H_
#define DIFFMIA_TESTS_TEST_UTIL_H_

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "diffmia/autodiff.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"
#include "diffmia/tensor.h"

namespace diffmia::testing {

// Analytic model for data ~ N(0, v I) under a continuous schedule. The
// marginal at t is N(0, (a^2 v + s^2) I), so the score is -x / (a^2 v + s^2).
// Network time equals schedule time for continuous kinds.
inline CallableModel GaussianOracle(const ContinuousSchedule& sde,
                                    ParamKind kind, std::size_t dim,
                                    double data_var = 1.0) {
  return CallableModel(
      kind, dim, [sde, kind, data_var](Tape& tape, Var x,
                                       std::span<const double> u) {
        const std::size_t rows = x.value().dim(0);
        std::vector<double> col(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          const double t = u.size() == 1 ? u[0] : u[r];
          const MarginalStats ms = sde.Marginal(t);
          const double var =
              ms.mean_coef * ms.mean_coef * data_var + ms.std * ms.std;
          // score = -x / var; raw = -score * std (eps) or score * std.
          col[r] = kind == ParamKind::kEpsilon ? ms.std / var : -ms.std / var;
        }
        return x * tape.Constant(Tensor({rows, 1}, std::move(col)));
      });
}

// Same oracle for a discrete schedule; network time u maps back to the step
// round(u T).
inline CallableModel DiscreteGaussianOracle(const DiscreteSchedule& schedule,
                                            std::size_t dim,
                                            double data_var = 1.0) {
  const ParamKind kind = DefaultParamKind(schedule.kind());
  return CallableModel(
      kind, dim, [schedule, kind, data_var](Tape& tape, Var x,
                                            std::span<const double> u) {
        const std::size_t rows = x.value().dim(0);
        std::vector<double> col(rows);
        for (std::size_t r = 0; r < rows; ++r) {
          const double ur = u.size() == 1 ? u[0] : u[r];
          const int t = static_cast<int>(std::lround(ur * schedule.steps()));
          const MarginalStats ms = schedule.Marginal(t);
          const double var =
              ms.mean_coef * ms.mean_coef * data_var + ms.std * ms.std;
          col[r] = kind == ParamKind::kEpsilon ? ms.std / var : -ms.std / var;
        }
        return x * tape.Constant(Tensor({rows, 1}, std::move(col)));
      });
}

inline double GaussianLogDensity(std::span<const double> x, double var) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  const double m = static_cast<double>(x.size());
  return -0.5 * m * std::log(2.0 * std::numbers::pi * var) - 0.5 * sq / var;
}

// Model whose raw output is a fixed function of x only.
inline CallableModel ConstantModel(ParamKind kind, std::size_t dim,
                                   std::vector<double> row) {
  return CallableModel(kind, dim,
                       [row](Tape& tape, Var x, std::span<const double>) {
                         const std::size_t rows = x.value().dim(0);
                         std::vector<double> v;
                         for (std::size_t r = 0; r < rows; ++r) {
                           v.insert(v.end(), row.begin(), row.end());
                         }
                         return tape.Constant(
                             Tensor({rows, row.size()}, std::move(v)));
                       });
}

inline double RelativeError(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// Central difference of f along coordinate i of x.
inline double CentralDifference(const std::function<double(const Tensor&)>& f,
                                const Tensor& x, std::size_t i,
                                double h = 1e-5) {
  std::vector<double> plus = x.ToVector();
  std::vector<double> minus = x.ToVector();
  plus[i] += h;
  minus[i] -= h;
  return (f(Tensor(x.shape(), std::move(plus))) -
          f(Tensor(x.shape(), std::move(minus)))) /
         (2.0 * h);
}

}  // namespace diffmia::testing

#endif  // DIFFMIA_TESTS_TEST_UTIL_H_
