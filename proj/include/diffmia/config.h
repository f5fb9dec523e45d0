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

#ifndef DIFFMIA_CONFIG_H_
#define DIFFMIA_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diffmia/likelihood.h"
#include "diffmia/sampler.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"
#include "diffmia/trainer.h"

namespace diffmia {

struct DataConfig {
  std::string generator = "gauss_grid";
  std::size_t n_members = 64;
  std::size_t n_nonmembers = 64;
  std::uint64_t seed = 1;
};

struct AttackConfig {
  int k_draws = 5;
  std::uint64_t seed = 0;
  // "grid" or "random" for continuous kinds.
  std::string continuous_steps = "grid";
  std::size_t n_continuous_steps = 1000;
  int discrete_stride = 1;
};

struct RunConfig {
  ScheduleParams schedule;
  Architecture architecture;
  // Empty means the default for the model kind.
  std::optional<ParamKind> param_kind;
  std::uint64_t model_seed = 0;
  DataConfig data;
  TrainConfig train;
  AttackConfig attack;
  OdeConfig ode;
  SamplerConfig sampler;
  std::vector<double> fpr_levels = {0.1, 0.01, 0.001, 0.0001};
  std::string out_dir;

  // Architecture with the resolved parameterization.
  Architecture ResolvedArchitecture() const;
};

RunConfig DefaultConfig(ModelKind kind = ModelKind::kDdpm);

// Pretty JSON with every field explicit.
std::string ConfigToString(const RunConfig& config);
// Fields present in `text` replace those of `base`. Unknown keys and
// ill-typed values raise ConfigError.
RunConfig ConfigFromString(std::string_view text, const RunConfig& base);
RunConfig LoadConfigFile(const std::string& path, const RunConfig& base);

// Sets one dotted field, e.g. "train.steps" = "500". The value is read as
// JSON when it parses, otherwise as a string.
void ApplyOverride(RunConfig& config, std::string_view dotted_key,
                   std::string_view value);

void ValidateConfig(const RunConfig& config);

// Hash of everything but the output location.
std::string ConfigFingerprint(const RunConfig& config);

// The steps attacked by the loss attack under this config.
std::vector<double> AttackSteps(const RunConfig& config);

}  // namespace diffmia

#endif  // DIFFMIA_CONFIG_H_
