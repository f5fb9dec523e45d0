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

#include "diffmia/metrics.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "diffmia/errors.h"

namespace diffmia {
namespace {

struct Labeled {
  double score;
  bool member;
};

void CheckNoNan(const std::vector<double>& v) {
  for (double s : v) {
    if (std::isnan(s)) throw ContractError("roc: NaN score");
  }
}

}  // namespace

RocReport Roc(const AttackScoreSet& scores, std::span<const double> levels) {
  CheckNoNan(scores.member_scores);
  CheckNoNan(scores.nonmember_scores);
  if (scores.member_scores.empty() || scores.nonmember_scores.empty()) {
    throw ContractError("roc: members and nonmembers must be non-empty");
  }
  const double sign =
      scores.orientation == Orientation::kHigherIsMember ? 1.0 : -1.0;
  std::vector<Labeled> all;
  all.reserve(scores.member_scores.size() + scores.nonmember_scores.size());
  for (double s : scores.member_scores) all.push_back({sign * s, true});
  for (double s : scores.nonmember_scores) all.push_back({sign * s, false});
  std::sort(all.begin(), all.end(), [](const Labeled& a, const Labeled& b) {
    return a.score > b.score;
  });

  RocReport r;
  r.n_members = scores.member_scores.size();
  r.n_nonmembers = scores.nonmember_scores.size();
  const double np = static_cast<double>(r.n_members);
  const double nn = static_cast<double>(r.n_nonmembers);
  auto push = [&](std::size_t tp, std::size_t fp) {
    if (!r.points.empty() && r.points.back().tp == tp &&
        r.points.back().fp == fp) {
      return;
    }
    r.points.push_back({static_cast<double>(fp) / nn,
                        static_cast<double>(tp) / np, fp, tp});
  };
  // Before each group of equal scores, the counts strictly above it.
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < all.size();) {
    push(tp, fp);
    const double v = all[i].score;
    while (i < all.size() && all[i].score == v) {
      all[i].member ? ++tp : ++fp;
      ++i;
    }
  }
  push(tp, fp);

  // Trapezoid area in integer counts, divided once.
  double twice_area = 0.0;
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    const RocPoint& a = r.points[i - 1];
    const RocPoint& b = r.points[i];
    twice_area += static_cast<double>(b.fp - a.fp) *
                  static_cast<double>(a.tp + b.tp);
  }
  r.auc = twice_area / (2.0 * np * nn);
  for (const RocPoint& p : r.points) {
    const double acc = (static_cast<double>(p.tp) + nn -
                        static_cast<double>(p.fp)) / (np + nn);
    r.best_accuracy = std::max(r.best_accuracy, acc);
  }
  for (double level : levels) {
    r.tpr_at_fpr.emplace_back(level, TprAtFpr(r, level));
  }
  return r;
}

double TprAtFpr(const RocReport& report, double target_fpr) {
  if (!(target_fpr >= 0.0 && target_fpr <= 1.0)) {
    throw ContractError("tpr_at_fpr: target must lie in [0, 1]");
  }
  // Compare counts so that e.g. 1/100 and 0.01 agree.
  const double allowed = std::floor(
      target_fpr * static_cast<double>(report.n_nonmembers) * (1.0 + 1e-12));
  double best = 0.0;
  for (const RocPoint& p : report.points) {
    if (static_cast<double>(p.fp) <= allowed) best = std::max(best, p.tpr);
  }
  return best;
}

double BestAccuracy(const AttackScoreSet& scores) {
  return Roc(scores, {}).best_accuracy;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd SymmetricSqrt(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double FrechetFromEigen(const VectorXd& mu_a, const MatrixXd& cov_a,
                        const VectorXd& mu_b, const MatrixXd& cov_b) {
  // Tr((A B)^{1/2}) = Tr((A^{1/2} B A^{1/2})^{1/2}), symmetric throughout.
  const MatrixXd s = SymmetricSqrt(cov_a);
  MatrixXd inner = s * cov_b * s;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (mu_a - mu_b).squaredNorm() + cov_a.trace() +
                   cov_b.trace() - 2.0 * cross;
  return std::max(d, 0.0);
}

MatrixXd ToMatrix(const Tensor& t) {
  MatrixXd out(t.dim(0), t.dim(1));
  for (std::size_t r = 0; r < t.dim(0); ++r) {
    for (std::size_t c = 0; c < t.dim(1); ++c) out(r, c) = t.at(r, c);
  }
  return out;
}

VectorXd ToVector(const Tensor& t) {
  VectorXd out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out(i) = t[i];
  return out;
}

void Fit(const Tensor& x, VectorXd& mu, MatrixXd& cov) {
  const MatrixXd m = ToMatrix(x);
  mu = m.colwise().mean().transpose();
  const MatrixXd centered = m.rowwise() - mu.transpose();
  cov = centered.transpose() * centered / static_cast<double>(m.rows() - 1);
}

}  // namespace

double FrechetDistance(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw ShapeError("frechet: sets must be [n, m] with equal m");
  }
  const std::size_t m = a.dim(1);
  if (a.dim(0) < m + 1 || b.dim(0) < m + 1) {
    throw ContractError("frechet: each set needs at least " +
                        std::to_string(m + 1) + " samples");
  }
  VectorXd mu_a, mu_b;
  MatrixXd cov_a, cov_b;
  Fit(a, mu_a, cov_a);
  Fit(b, mu_b, cov_b);
  return FrechetFromEigen(mu_a, cov_a, mu_b, cov_b);
}

double FrechetDistanceGaussian(const Tensor& mean_a, const Tensor& cov_a,
                               const Tensor& mean_b, const Tensor& cov_b) {
  const std::size_t m = mean_a.size();
  if (mean_b.size() != m || cov_a.shape() != Shape{m, m} ||
      cov_b.shape() != Shape{m, m}) {
    throw ShapeError("frechet: inconsistent Gaussian parameter shapes");
  }
  return FrechetFromEigen(ToVector(mean_a), ToMatrix(cov_a), ToVector(mean_b),
                          ToMatrix(cov_b));
}

}  // namespace diffmia
