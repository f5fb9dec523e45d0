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

#include "diffmia/report.h"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "diffmia/errors.h"

namespace diffmia {

Report BuildReport(const ReportInputs& in) {
  Report r;
  r.model_label = in.model_label;
  r.fpr_levels = in.fpr_levels;
  r.frechet = in.frechet;
  std::vector<std::string> prints;
  if (in.loss) prints.push_back(in.loss->config_fingerprint);
  if (in.likelihood) prints.push_back(in.likelihood->config_fingerprint);
  if (prints.empty()) throw ContractError("report: no score files given");
  for (const auto& p : prints) {
    if (p != prints.front()) {
      throw ContractError("report: inputs carry different config fingerprints (" +
                          prints.front() + " vs " + p + ")");
    }
  }
  r.config_fingerprint = prints.front();
  if (in.loss) {
    for (const AttackScoreSet& s : in.loss->sets) {
      if (!s.step) throw SchemaError("report: loss scores without a step");
      r.steps.push_back({*s.step, Roc(s, in.fpr_levels)});
    }
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      if (!r.best_step || r.steps[i].roc.auc > r.steps[*r.best_step].roc.auc) {
        r.best_step = i;
      }
    }
  }
  if (in.likelihood) {
    if (in.likelihood->sets.size() != 1) {
      throw SchemaError("report: likelihood file must hold one score set");
    }
    r.likelihood = Roc(in.likelihood->sets.front(), in.fpr_levels);
    r.likelihood_excluded = in.likelihood->sets.front().excluded;
  }
  return r;
}

namespace {

std::string Fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string Pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string LevelLabel(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "TPR@%g%%", level * 100.0);
  return buf;
}

std::string StepLabel(double step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", step);
  return buf;
}

std::string Row(const std::string& name, const std::string& step,
                const RocReport& roc) {
  std::string line = Pad(name, 20) + Pad(step, 10) + Pad(Fixed(roc.auc), 9) +
                     Pad(Fixed(roc.best_accuracy), 10);
  for (const auto& [level, tpr] : roc.tpr_at_fpr) {
    std::string cell = Fixed(tpr);
    if (level < roc.resolution_floor()) cell += "*";
    line += Pad(cell, 11);
  }
  while (!line.empty() && line.back() == ' ') line.pop_back();
  return line + "\n";
}

}  // namespace

std::string SummaryText(const Report& r) {
  std::ostringstream out;
  out << "diffmia privacy report\n";
  out << "config_fingerprint " << r.config_fingerprint << "\n";
  if (!r.model_label.empty()) out << "model " << r.model_label << "\n";
  const RocReport* any = r.best_step ? &r.steps[*r.best_step].roc
                                     : (r.likelihood ? &*r.likelihood : nullptr);
  if (any) {
    out << "members " << any->n_members << "  nonmembers " << any->n_nonmembers
        << "  fpr floor " << Fixed(any->resolution_floor(), 6) << "\n";
  }
  out << "\n";
  std::string head = Pad("attack", 20) + Pad("step", 10) + Pad("AUC", 9) +
                     Pad("accuracy", 10);
  for (double level : r.fpr_levels) head += Pad(LevelLabel(level), 11);
  while (!head.empty() && head.back() == ' ') head.pop_back();
  out << head << "\n";
  bool floor_hit = false;
  auto note = [&](const RocReport& roc) {
    for (const auto& [level, tpr] : roc.tpr_at_fpr) {
      floor_hit = floor_hit || level < roc.resolution_floor();
    }
  };
  if (r.best_step) {
    const StepRow& best = r.steps[*r.best_step];
    out << Row("loss (best step)", StepLabel(best.step), best.roc);
    note(best.roc);
    const StepRow& last = r.steps.back();
    out << Row("loss (last step)", StepLabel(last.step), last.roc);
    note(last.roc);
  }
  if (r.likelihood) {
    out << Row("likelihood", "NA", *r.likelihood);
    note(*r.likelihood);
  }
  out << "\n";
  if (floor_hit) {
    out << "* FPR level below the empirical floor 1/n_nonmembers; the value "
           "is the TPR at zero false positives\n";
  }
  if (r.likelihood) {
    out << "likelihood samples excluded " << r.likelihood_excluded << "\n";
  }
  if (r.frechet) {
    out << "frechet_distance(samples, members) " << Fixed(*r.frechet, 6)
        << "\n";
  }
  return out.str();
}

std::string StepTableCsv(const Report& r) {
  std::ostringstream out;
  out << "# diffmia-step-profile version=1\n";
  out << "# config_fingerprint=" << r.config_fingerprint << "\n";
  out << "step,auc,best_accuracy";
  for (double level : r.fpr_levels) out << ",tpr_at_" << FormatDouble(level);
  out << "\n";
  for (const StepRow& s : r.steps) {
    out << FormatDouble(s.step) << "," << FormatDouble(s.roc.auc) << ","
        << FormatDouble(s.roc.best_accuracy);
    for (const auto& [level, tpr] : s.roc.tpr_at_fpr) {
      out << "," << FormatDouble(tpr);
    }
    out << "\n";
  }
  return out.str();
}

void WriteReport(const Report& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
  };
  WriteTextFile(path("summary.txt"), SummaryText(r));
  if (!r.steps.empty()) {
    WriteTextFile(path("tpr_vs_step.csv"), StepTableCsv(r));
    const StepRow& best = r.steps[*r.best_step];
    SaveRoc(best.roc, "loss_best_step_" + StepLabel(best.step),
            r.config_fingerprint, path("roc_loss_best.csv"));
    SaveRoc(r.steps.back().roc,
            "loss_last_step_" + StepLabel(r.steps.back().step),
            r.config_fingerprint, path("roc_loss_last.csv"));
  }
  if (r.likelihood) {
    SaveRoc(*r.likelihood, "likelihood", r.config_fingerprint,
            path("roc_likelihood.csv"));
  }
}

}  // namespace diffmia
