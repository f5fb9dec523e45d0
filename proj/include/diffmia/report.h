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

#ifndef DIFFMIA_REPORT_H_
#define DIFFMIA_REPORT_H_

#include <optional>
#include <string>
#include <vector>

#include "diffmia/data.h"
#include "diffmia/metrics.h"

namespace diffmia {

struct ReportInputs {
  std::string model_label;
  std::optional<ScoreFile> loss;
  std::optional<ScoreFile> likelihood;
  std::optional<double> frechet;
  std::vector<double> fpr_levels = {0.1, 0.01, 0.001, 0.0001};
};

struct StepRow {
  double step = 0.0;
  RocReport roc;
};

struct Report {
  std::string config_fingerprint;
  std::vector<StepRow> steps;  // loss attack, one per step
  std::optional<std::size_t> best_step;  // index into steps, max AUC
  std::optional<RocReport> likelihood;
  std::size_t likelihood_excluded = 0;
  std::optional<double> frechet;
  std::string model_label;
  std::vector<double> fpr_levels;
};

// ContractError when the inputs carry different config fingerprints or
// nothing to report.
Report BuildReport(const ReportInputs& inputs);

// Plain-text table with one row per attack.
std::string SummaryText(const Report& report);
// CSV: step, auc, best_accuracy, tpr at each level.
std::string StepTableCsv(const Report& report);

// Writes summary.txt, tpr_vs_step.csv and one ROC CSV per attack row.
void WriteReport(const Report& report, const std::string& dir);

}  // namespace diffmia

#endif  // DIFFMIA_REPORT_H_
