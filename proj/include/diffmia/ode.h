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

#ifndef DIFFMIA_ODE_H_
#define DIFFMIA_ODE_H_

#include <functional>
#include <vector>

namespace diffmia {

using OdeRhs = std::function<void(double t, const std::vector<double>& y,
                                  std::vector<double>& dydt)>;

struct OdeTolerances {
  double rtol = 1e-5;
  double atol = 1e-5;
  long max_steps = 100000;
};

struct OdeSolution {
  std::vector<double> y;
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

// Dormand-Prince 5(4) with FSAL and the standard PI-free step controller.
// Integrates from t0 to t1 (t1 > t0). ConvergenceError past max_steps,
// DivergenceError on a non-finite state.
OdeSolution IntegrateDopri5(const OdeRhs& rhs, double t0, double t1,
                            std::vector<double> y0, const OdeTolerances& tol);

}  // namespace diffmia

#endif  // DIFFMIA_ODE_H_
