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

#include "diffmia/ode.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffmia/errors.h"

namespace diffmia {
namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Fifth minus fourth order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

bool Finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

double ErrorNorm(const std::vector<double>& y, const std::vector<double>& y1,
                 const std::vector<double>& err, const OdeTolerances& tol) {
  double sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double sc =
        tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    sq += r * r;
  }
  return std::sqrt(sq / static_cast<double>(y.size()));
}

// Hairer's starting step heuristic.
double InitialStep(const OdeRhs& rhs, double t0, const std::vector<double>& y0,
                   const std::vector<double>& f0, const OdeTolerances& tol,
                   double span, long& evals) {
  const std::size_t n = y0.size();
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = tol.atol + tol.rtol * std::abs(y0[i]);
    d0 += (y0[i] / sc) * (y0[i] / sc);
    d1 += (f0[i] / sc) * (f0[i] / sc);
  }
  d0 = std::sqrt(d0 / n);
  d1 = std::sqrt(d1 / n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  std::vector<double> y1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + h0 * f0[i];
  rhs(t0 + h0, y1, f1);
  ++evals;
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = tol.atol + tol.rtol * std::abs(y0[i]);
    d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
  }
  d2 = std::sqrt(d2 / n) / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                  : std::pow(0.01 / dmax, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

OdeSolution IntegrateDopri5(const OdeRhs& rhs, double t0, double t1,
                            std::vector<double> y0, const OdeTolerances& tol) {
  if (!(tol.rtol > 0.0) || !(tol.atol > 0.0)) {
    throw ConfigError("ode: rtol and atol must be > 0");
  }
  if (!(t1 > t0)) throw ContractError("ode: t1 must exceed t0");
  if (y0.empty()) throw ShapeError("ode: empty state");
  if (!Finite(y0)) throw DivergenceError("ode: non-finite initial state");

  const std::size_t n = y0.size();
  OdeSolution sol;
  std::vector<double> y = std::move(y0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> tmp(n), y_new(n), err(n);
  rhs(t0, y, k1);
  ++sol.evaluations;
  if (!Finite(k1)) throw DivergenceError("ode: non-finite derivative");

  double t = t0;
  double h = InitialStep(rhs, t0, y, k1, tol, t1 - t0, sol.evaluations);
  constexpr double kSafety = 0.9, kMinFactor = 0.2, kMaxFactor = 10.0;
  bool last_rejected = false;

  while (t < t1) {
    if (sol.accepted + sol.rejected >= tol.max_steps) {
      throw ConvergenceError("ode: exceeded " + std::to_string(tol.max_steps) +
                             " steps at t=" + std::to_string(t));
    }
    bool final_step = false;
    if (t + h >= t1) {
      h = t1 - t;
      final_step = true;
    }
    if (h <= std::abs(t) * 1e-15) {
      throw ConvergenceError("ode: step size underflow at t=" +
                             std::to_string(t));
    }
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] +
                           a54 * k4[i]);
    rhs(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                           a64 * k4[i] + a65 * k5[i]);
    const double t_new = final_step ? t1 : t + h;
    rhs(t_new, tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                             b5 * k5[i] + b6 * k6[i]);
    rhs(t_new, y_new, k7);
    sol.evaluations += 6;
    for (std::size_t i = 0; i < n; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                    e6 * k6[i] + e7 * k7[i]);
    const double en = ErrorNorm(y, y_new, err, tol);
    if (!std::isfinite(en) || !Finite(y_new)) {
      // Retry smaller before declaring the state non-finite.
      ++sol.rejected;
      h *= kMinFactor;
      if (h < 1e-12 * (t1 - t0)) {
        throw DivergenceError("ode: non-finite state at t=" +
                              std::to_string(t));
      }
      last_rejected = true;
      continue;
    }
    if (en <= 1.0) {
      t = t_new;
      y.swap(y_new);
      k1.swap(k7);
      ++sol.accepted;
      double factor = en == 0.0 ? kMaxFactor
                                : kSafety * std::pow(en, -0.2);
      factor = std::clamp(factor, kMinFactor, kMaxFactor);
      if (last_rejected) factor = std::min(factor, 1.0);
      h *= factor;
      last_rejected = false;
    } else {
      ++sol.rejected;
      h *= std::max(kMinFactor, kSafety * std::pow(en, -0.2));
      last_rejected = true;
    }
  }
  sol.y = std::move(y);
  return sol;
}

}  // namespace diffmia
