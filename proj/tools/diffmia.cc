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

// Command-line front end: gen-data, train, sample, attack-loss,
// attack-likelihood and report.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "diffmia/attacks.h"
#include "diffmia/config.h"
#include "diffmia/data.h"
#include "diffmia/errors.h"
#include "diffmia/kernels.h"
#include "diffmia/likelihood.h"
#include "diffmia/metrics.h"
#include "diffmia/report.h"
#include "diffmia/sampler.h"
#include "diffmia/scorenet.h"
#include "diffmia/trainer.h"

namespace fs = std::filesystem;
using namespace diffmia;

namespace {

enum ExitCode {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kIo = 3,
  kSchema = 4,
  kDivergence = 5,
  kConvergence = 6,
  kContract = 7,
};

int ExitCodeFor(const Error& e) {
  const std::string& k = e.kind();
  if (k == "ConfigError") return kConfig;
  if (k == "IoError") return kIo;
  if (k == "SchemaError" || k == "VersionError") return kSchema;
  if (k == "DivergenceError") return kDivergence;
  if (k == "ConvergenceError") return kConvergence;
  return kContract;
}

// Flags shared by every subcommand.
struct Common {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> sets;
  int threads = 0;
  // Shorthand flags, each bound to one dotted config key.
  std::vector<std::pair<std::string, std::string>> shorthand;
  std::vector<std::string> values;
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON run config");
  app->add_option("--out", c.out_dir,
                  "Output directory (default: $DIFFMIA_OUTPUT_ROOT or "
                  "./diffmia_out)");
  app->add_option("--set", c.sets, "Override a config field, key=value")
      ->allow_extra_args(false);
  app->add_option("--threads", c.threads, "Cap on worker threads")
      ->check(CLI::NonNegativeNumber);
  c.shorthand = {{"kind", "model.schedule.kind"},
                 {"generator", "data.generator"},
                 {"n-members", "data.n_members"},
                 {"n-nonmembers", "data.n_nonmembers"},
                 {"data-seed", "data.seed"},
                 {"model-seed", "model.seed"},
                 {"steps", "train.steps"},
                 {"batch-size", "train.batch_size"},
                 {"lr", "train.learning_rate"},
                 {"train-seed", "train.seed"},
                 {"dp", "train.dp.enabled"},
                 {"dp-clip", "train.dp.clip_bound"},
                 {"dp-noise", "train.dp.noise_multiplier"},
                 {"k-draws", "attack.k_draws"},
                 {"attack-seed", "attack.seed"},
                 {"stride", "attack.discrete_stride"},
                 {"step-selection", "attack.continuous_steps"},
                 {"n-probes", "ode.n_probes"},
                 {"ode-seed", "ode.seed"},
                 {"n-samples", "sampler.n_samples"}};
  c.values.assign(c.shorthand.size(), "");
  for (std::size_t i = 0; i < c.shorthand.size(); ++i) {
    app->add_option("--" + c.shorthand[i].first, c.values[i],
                    "Sets " + c.shorthand[i].second);
  }
}

// default < file < flags.
RunConfig Resolve(const Common& c) {
  RunConfig config = DefaultConfig();
  if (!c.config_path.empty()) config = LoadConfigFile(c.config_path, config);
  for (const std::string& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + s + "'");
    }
    ApplyOverride(config, s.substr(0, eq), s.substr(eq + 1));
  }
  for (std::size_t i = 0; i < c.shorthand.size(); ++i) {
    if (!c.values[i].empty()) {
      ApplyOverride(config, c.shorthand[i].second, c.values[i]);
    }
  }
  if (!c.out_dir.empty()) {
    config.out_dir = c.out_dir;
  } else if (config.out_dir.empty()) {
    const char* root = std::getenv("DIFFMIA_OUTPUT_ROOT");
    config.out_dir = root && *root ? root : "diffmia_out";
  }
  ValidateConfig(config);
  if (c.threads > 0) SetMaxThreads(c.threads);
  return config;
}

std::string OutPath(const RunConfig& config, const std::string& name) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) {
    throw IoError("cannot create '" + config.out_dir + "': " + ec.message());
  }
  return (fs::path(config.out_dir) / name).string();
}

void Echo(const std::string& command, const RunConfig& config) {
  std::cout << "command " << command << "\n"
            << "config_fingerprint " << ConfigFingerprint(config) << "\n"
            << "resolved config\n"
            << ConfigToString(config);
  std::cout.flush();
}

Checkpoint LoadModel(const RunConfig& config) {
  Checkpoint ck = LoadCheckpoint(OutPath(config, "checkpoint.json"));
  if (ck.training.config_fingerprint != ConfigFingerprint(config)) {
    std::cerr << "warning: checkpoint was trained under config "
              << ck.training.config_fingerprint << "\n";
  }
  return ck;
}

void GenData(const RunConfig& config) {
  const Dataset d =
      GenerateDataset(config.data.generator, config.data.n_members,
                      config.data.n_nonmembers, config.data.seed);
  const std::string path = OutPath(config, "dataset.csv");
  SaveDataset(d, path, ConfigFingerprint(config));
  std::cout << "wrote " << path << " (" << d.member_idx.size() << " members, "
            << d.nonmember_idx.size() << " nonmembers, fingerprint "
            << d.fingerprint() << ")\n";
}

void TrainCmd(const RunConfig& config) {
  const Dataset d = LoadDataset(OutPath(config, "dataset.csv"));
  const Schedule schedule = config.schedule.Build();
  ScoreNetwork net =
      ScoreNetwork::Create(config.ResolvedArchitecture(), config.model_seed);
  TrainResult result = Train(std::move(net), d.members(), config.train,
                             schedule);
  Checkpoint ck;
  ck.model_kind = config.schedule.kind;
  ck.schedule = config.schedule;
  ck.network = std::move(result.network);
  ck.training.steps = config.train.steps;
  ck.training.seed = config.train.seed;
  ck.training.dataset_fingerprint = d.fingerprint();
  ck.training.config_fingerprint = ConfigFingerprint(config);
  ck.training.batch_size = static_cast<long>(config.train.batch_size);
  if (config.train.dp) {
    ck.training.dp = true;
    ck.training.dp_clip = config.train.dp->clip_bound;
    ck.training.dp_noise_multiplier = config.train.dp->noise_multiplier;
    ck.training.dp_delta = config.train.dp->delta;
  }
  SaveCheckpoint(ck, OutPath(config, "checkpoint.json"));
  std::vector<std::pair<long, double>> history;
  for (const LossRecord& r : result.history) {
    history.emplace_back(r.step, r.mean_loss);
  }
  SaveLossHistory(history, ConfigFingerprint(config),
                  OutPath(config, "loss_history.csv"));
  if (!history.empty()) {
    std::cout << "final window loss " << FormatDouble(history.back().second)
              << "\n";
  }
  if (config.train.dp) {
    double worst = 0.0;
    for (double v : result.max_clipped_norms) worst = std::max(worst, v);
    std::cout << "max clipped per-sample gradient norm " << FormatDouble(worst)
              << " (C=" << FormatDouble(config.train.dp->clip_bound) << ")\n";
  }
  std::cout << "wrote " << OutPath(config, "checkpoint.json") << "\n";
}

void SampleCmd(const RunConfig& config) {
  const Checkpoint ck = LoadModel(config);
  const Tensor samples =
      Generate(ck.network, ck.schedule.Build(), config.sampler);
  SaveSamples(samples, ConfigFingerprint(config),
              OutPath(config, "samples.csv"));
  const Dataset d = LoadDataset(OutPath(config, "dataset.csv"));
  std::cout << "frechet_distance(samples, members) "
            << FormatDouble(FrechetDistance(samples, d.members())) << "\n";
}

void AttackLoss(const RunConfig& config) {
  const Checkpoint ck = LoadModel(config);
  const Dataset d = LoadDataset(OutPath(config, "dataset.csv"));
  const Schedule schedule = ck.schedule.Build();
  RunConfig step_config = config;
  step_config.schedule = ck.schedule;
  const std::vector<double> steps = AttackSteps(step_config);
  StepProfile profile =
      LossAttackScores(ck.network, d.eval_set(), steps, schedule,
                       config.attack.k_draws, config.attack.seed);
  ScoreFile file{"loss", ConfigFingerprint(config), std::move(profile.sets)};
  SaveScores(file, OutPath(config, "loss_scores.csv"));
  ReportInputs in;
  in.loss = file;
  in.fpr_levels = config.fpr_levels;
  const Report report = BuildReport(in);
  WriteTextFile(OutPath(config, "loss_profile.csv"), StepTableCsv(report));
  const StepRow& best = report.steps[*report.best_step];
  std::cout << "best step " << FormatDouble(best.step) << " auc "
            << FormatDouble(best.roc.auc) << "\n";
}

void AttackLikelihood(const RunConfig& config) {
  const Checkpoint ck = LoadModel(config);
  const Dataset d = LoadDataset(OutPath(config, "dataset.csv"));
  const Schedule schedule = ck.schedule.Build();
  const EvalSet eval = d.eval_set();
  const auto mem = LogLikelihoods(ck.network, eval.members, eval.member_ids,
                                  schedule, config.ode);
  const auto non = LogLikelihoods(ck.network, eval.nonmembers,
                                  eval.nonmember_ids, schedule, config.ode);
  std::vector<LikelihoodRow> rows;
  AttackScoreSet set;
  set.orientation = Orientation::kHigherIsMember;
  auto take = [&](const auto& results, const std::vector<std::uint64_t>& ids,
                  bool member) {
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i]) {
        ++set.excluded;
        continue;
      }
      rows.push_back({ids[i], member, results[i]->log_likelihood,
                      results[i]->bits_per_dim});
      (member ? set.member_scores : set.nonmember_scores)
          .push_back(results[i]->log_likelihood);
      (member ? set.member_ids : set.nonmember_ids).push_back(ids[i]);
    }
  };
  take(mem, eval.member_ids, true);
  take(non, eval.nonmember_ids, false);
  const std::string fp = ConfigFingerprint(config);
  SaveLikelihoods(rows, fp, OutPath(config, "likelihood.csv"));
  SaveScores({"likelihood", fp, {set}}, OutPath(config, "likelihood_scores.csv"));
  std::cout << "likelihood auc " << FormatDouble(Roc(set).auc) << " excluded "
            << set.excluded << "\n";
}

void ReportCmd(const RunConfig& config) {
  ReportInputs in;
  in.fpr_levels = config.fpr_levels;
  const std::string loss = OutPath(config, "loss_scores.csv");
  const std::string lik = OutPath(config, "likelihood_scores.csv");
  if (fs::exists(loss)) in.loss = LoadScores(loss);
  if (fs::exists(lik)) in.likelihood = LoadScores(lik);
  if (!in.loss && !in.likelihood) {
    throw IoError("no score files in '" + config.out_dir + "'");
  }
  const ModelKind kind = config.schedule.kind;
  in.model_label = std::string(ModelKindName(kind));
  if (IsDiscrete(kind)) {
    in.model_label += kind == ModelKind::kDdpm
                          ? " (likelihood under the vpsde counterpart)"
                          : " (likelihood under the vesde counterpart)";
  }
  const std::string samples = OutPath(config, "samples.csv");
  if (fs::exists(samples)) {
    std::string fp;
    const Tensor s = LoadSamples(samples, &fp);
    if (fp != ConfigFingerprint(config)) {
      throw ContractError("report: samples.csv has config fingerprint " + fp);
    }
    in.frechet =
        FrechetDistance(s, LoadDataset(OutPath(config, "dataset.csv")).members());
  }
  const Report report = BuildReport(in);
  if (report.config_fingerprint != ConfigFingerprint(config)) {
    throw ContractError("report: score files have config fingerprint " +
                        report.config_fingerprint + ", current config is " +
                        ConfigFingerprint(config));
  }
  const std::string dir = OutPath(config, "report");
  WriteReport(report, dir);
  std::cout << SummaryText(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership-inference auditing for toy diffusion models"};
  app.require_subcommand(1);
  struct Cmd {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&);
  };
  const Cmd cmds[] = {
      {"gen-data", "Generate and split a toy dataset", GenData},
      {"train", "Train a model on the members", TrainCmd},
      {"sample", "Draw samples from the trained model", SampleCmd},
      {"attack-loss", "Per-step loss attack", AttackLoss},
      {"attack-likelihood", "Likelihood attack", AttackLikelihood},
      {"report", "ROC curves and summary tables", ReportCmd},
  };
  std::vector<Common> commons(std::size(cmds));
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(cmds); ++i) {
    CLI::App* sub = app.add_subcommand(cmds[i].name, cmds[i].help);
    AddCommon(sub, commons[i]);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      const RunConfig config = Resolve(commons[i]);
      Echo(cmds[i].name, config);
      cmds[i].run(config);
      return kOk;
    } catch (const Error& e) {
      std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
      return ExitCodeFor(e);
    } catch (const std::exception& e) {
      std::cerr << "error: InternalError: " << e.what() << "\n";
      return kInternal;
    }
  }
  return kInternal;
}
