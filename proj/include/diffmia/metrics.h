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

#ifndef DIFFMIA_METRICS_H_
#define DIFFMIA_METRICS_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "diffmia/attacks.h"
#include "diffmia/tensor.h"

namespace diffmia {

inline constexpr double kDefaultFprLevels[] = {0.1, 0.01, 0.001, 0.0001};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  std::size_t fp = 0;  // nonmembers past the threshold
  std::size_t tp = 0;  // members past the threshold
};

struct RocReport {
  std::vector<RocPoint> points;
  double auc = 0.0;
  std::vector<std::pair<double, double>> tpr_at_fpr;  // (level, tpr)
  double best_accuracy = 0.0;
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;

  // Smallest nonzero FPR the nonmember count can resolve.
  double resolution_floor() const {
    return n_nonmembers == 0 ? 1.0 : 1.0 / static_cast<double>(n_nonmembers);
  }
};

// Sweeps every observed score as a threshold after mapping to
// higher-is-member. A point counts scores strictly past the threshold.
RocReport Roc(const AttackScoreSet& scores,
              std::span<const double> fpr_levels = kDefaultFprLevels);

// TPR of the point with the largest FPR not exceeding target.
double TprAtFpr(const RocReport& report, double target_fpr);

double BestAccuracy(const AttackScoreSet& scores);

// Frechet distance between Gaussian fits of two [n, m] sample sets.
double FrechetDistance(const Tensor& a, const Tensor& b);
// Same formula from population parameters; covariances are [m, m].
double FrechetDistanceGaussian(const Tensor& mean_a, const Tensor& cov_a,
                               const Tensor& mean_b, const Tensor& cov_b);

}  // namespace diffmia

#endif  // DIFFMIA_METRICS_H_
