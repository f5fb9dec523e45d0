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

#include "diffmia/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "diffmia/attacks.h"
#include "diffmia/data.h"
#include "diffmia/errors.h"
#include "json_io.h"

namespace diffmia {

using internal::Json;

Architecture RunConfig::ResolvedArchitecture() const {
  Architecture a = architecture;
  a.param_kind = param_kind.value_or(DefaultParamKind(schedule.kind));
  return a;
}

RunConfig DefaultConfig(ModelKind kind) {
  RunConfig c;
  c.schedule = ScheduleParams::Defaults(kind);
  return c;
}

namespace {

Json ToJson(const RunConfig& c) {
  Json j;
  Json model;
  model["schedule"] = internal::ScheduleToJson(c.schedule);
  Json arch = internal::ArchitectureToJson(c.architecture);
  arch["param_kind"] =
      c.param_kind ? std::string(ParamKindName(*c.param_kind)) : "auto";
  arch.erase("data_dim");
  model["architecture"] = arch;
  model["seed"] = c.model_seed;
  j["model"] = model;

  j["data"] = {{"generator", c.data.generator},
               {"n_members", c.data.n_members},
               {"n_nonmembers", c.data.n_nonmembers},
               {"seed", c.data.seed}};

  Json train = {{"steps", c.train.steps},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"seed", c.train.seed},
                {"history_interval", c.train.history_interval}};
  const DpConfig dp = c.train.dp.value_or(DpConfig{});
  train["dp"] = {{"enabled", c.train.dp.has_value()},
                 {"clip_bound", dp.clip_bound},
                 {"noise_multiplier", dp.noise_multiplier},
                 {"delta", dp.delta}};
  j["train"] = train;

  j["attack"] = {{"k_draws", c.attack.k_draws},
                 {"seed", c.attack.seed},
                 {"continuous_steps", c.attack.continuous_steps},
                 {"n_continuous_steps", c.attack.n_continuous_steps},
                 {"discrete_stride", c.attack.discrete_stride}};
  j["ode"] = {{"rtol", c.ode.rtol},
              {"atol", c.ode.atol},
              {"n_probes", c.ode.n_probes},
              {"probe_dist", std::string(ProbeDistName(c.ode.probe_dist))},
              {"seed", c.ode.seed},
              {"max_steps", c.ode.max_steps}};
  j["sampler"] = {{"n_samples", c.sampler.n_samples},
                  {"seed", c.sampler.seed},
                  {"langevin_inner_steps", c.sampler.langevin_inner_steps},
                  {"langevin_step_scale", c.sampler.langevin_step_scale},
                  {"sde_steps", c.sampler.sde_steps}};
  j["report"] = {{"fpr_levels", c.fpr_levels}};
  j["paths"] = {{"out_dir", c.out_dir}};
  return j;
}

// Rejects keys outside `allowed` so that typos do not pass silently.
void CheckKeys(const Json& j, std::string_view where,
               std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) {
    throw ConfigError("config: '" + std::string(where) + "' must be an object");
  }
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) {
      throw ConfigError("config: unknown key '" + std::string(where) + "." +
                        key + "'");
    }
  }
}

template <typename T>
void Read(const Json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  field = j.at(key).get<T>();
}

RunConfig FromJson(const Json& j, RunConfig c) {
  CheckKeys(j, "", {"model", "data", "train", "attack", "ode", "sampler",
                    "report", "paths"});
  if (j.contains("model")) {
    const Json& m = j.at("model");
    CheckKeys(m, "model", {"schedule", "architecture", "seed"});
    if (m.contains("schedule")) {
      const Json& s = m.at("schedule");
      CheckKeys(s, "model.schedule",
                {"kind", "steps", "beta_start", "beta_end", "sigma_min",
                 "sigma_max", "beta_min", "beta_max"});
      ScheduleParams base = c.schedule;
      // A kind change starts from that kind's defaults.
      if (s.contains("kind")) {
        const ModelKind k = ParseModelKind(s.at("kind").get<std::string>());
        if (k != base.kind) base = ScheduleParams::Defaults(k);
      }
      c.schedule = internal::ScheduleFromJson(s, base);
    }
    if (m.contains("architecture")) {
      Json a = m.at("architecture");
      CheckKeys(a, "model.architecture",
                {"hidden", "time_embed_width", "time_freq_min",
                 "time_freq_ratio", "input_features", "input_feature_scale",
                 "param_kind", "zero_init_output"});
      if (a.contains("param_kind")) {
        const std::string pk = a.at("param_kind").get<std::string>();
        c.param_kind = pk == "auto" ? std::nullopt
                                    : std::optional(ParseParamKind(pk));
        a.erase("param_kind");
      }
      c.architecture = internal::ArchitectureFromJson(a, c.architecture);
      Read(a, "zero_init_output", c.architecture.zero_init_output);
    }
    Read(m, "seed", c.model_seed);
  }
  if (j.contains("data")) {
    const Json& d = j.at("data");
    CheckKeys(d, "data", {"generator", "n_members", "n_nonmembers", "seed"});
    Read(d, "generator", c.data.generator);
    Read(d, "n_members", c.data.n_members);
    Read(d, "n_nonmembers", c.data.n_nonmembers);
    Read(d, "seed", c.data.seed);
  }
  if (j.contains("train")) {
    const Json& t = j.at("train");
    CheckKeys(t, "train", {"steps", "batch_size", "learning_rate", "seed",
                           "history_interval", "dp"});
    Read(t, "steps", c.train.steps);
    Read(t, "batch_size", c.train.batch_size);
    Read(t, "learning_rate", c.train.learning_rate);
    Read(t, "seed", c.train.seed);
    Read(t, "history_interval", c.train.history_interval);
    if (t.contains("dp")) {
      const Json& d = t.at("dp");
      CheckKeys(d, "train.dp",
                {"enabled", "clip_bound", "noise_multiplier", "delta"});
      DpConfig dp = c.train.dp.value_or(DpConfig{});
      bool enabled = c.train.dp.has_value();
      Read(d, "enabled", enabled);
      Read(d, "clip_bound", dp.clip_bound);
      Read(d, "noise_multiplier", dp.noise_multiplier);
      Read(d, "delta", dp.delta);
      c.train.dp = enabled ? std::optional(dp) : std::nullopt;
    }
  }
  if (j.contains("attack")) {
    const Json& a = j.at("attack");
    CheckKeys(a, "attack", {"k_draws", "seed", "continuous_steps",
                            "n_continuous_steps", "discrete_stride"});
    Read(a, "k_draws", c.attack.k_draws);
    Read(a, "seed", c.attack.seed);
    Read(a, "continuous_steps", c.attack.continuous_steps);
    Read(a, "n_continuous_steps", c.attack.n_continuous_steps);
    Read(a, "discrete_stride", c.attack.discrete_stride);
  }
  if (j.contains("ode")) {
    const Json& o = j.at("ode");
    CheckKeys(o, "ode", {"rtol", "atol", "n_probes", "probe_dist", "seed",
                         "max_steps"});
    Read(o, "rtol", c.ode.rtol);
    Read(o, "atol", c.ode.atol);
    Read(o, "n_probes", c.ode.n_probes);
    if (o.contains("probe_dist")) {
      c.ode.probe_dist = ParseProbeDist(o.at("probe_dist").get<std::string>());
    }
    Read(o, "seed", c.ode.seed);
    Read(o, "max_steps", c.ode.max_steps);
  }
  if (j.contains("sampler")) {
    const Json& s = j.at("sampler");
    CheckKeys(s, "sampler", {"n_samples", "seed", "langevin_inner_steps",
                             "langevin_step_scale", "sde_steps"});
    Read(s, "n_samples", c.sampler.n_samples);
    Read(s, "seed", c.sampler.seed);
    Read(s, "langevin_inner_steps", c.sampler.langevin_inner_steps);
    Read(s, "langevin_step_scale", c.sampler.langevin_step_scale);
    Read(s, "sde_steps", c.sampler.sde_steps);
  }
  if (j.contains("report")) {
    const Json& r = j.at("report");
    CheckKeys(r, "report", {"fpr_levels"});
    Read(r, "fpr_levels", c.fpr_levels);
  }
  if (j.contains("paths")) {
    const Json& p = j.at("paths");
    CheckKeys(p, "paths", {"out_dir"});
    Read(p, "out_dir", c.out_dir);
  }
  return c;
}

}  // namespace

std::string ConfigToString(const RunConfig& config) {
  return ToJson(config).dump(2) + "\n";
}

RunConfig ConfigFromString(std::string_view text, const RunConfig& base) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  try {
    return FromJson(j, base);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig LoadConfigFile(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ConfigFromString(ss.str(), base);
}

void ApplyOverride(RunConfig& config, std::string_view dotted_key,
                   std::string_view value) {
  Json v;
  try {
    v = Json::parse(value);
  } catch (const Json::parse_error&) {
    v = std::string(value);
  }
  Json patch = v;
  std::string key(dotted_key);
  while (true) {
    const auto dot = key.rfind('.');
    const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
    if (leaf.empty()) {
      throw ConfigError("config: malformed key '" + std::string(dotted_key) + "'");
    }
    Json wrapped;
    wrapped[leaf] = patch;
    patch = wrapped;
    if (dot == std::string::npos) break;
    key = key.substr(0, dot);
  }
  config = ConfigFromString(patch.dump(), config);
}

void ValidateConfig(const RunConfig& c) {
  if (c.schedule.steps < 2 && IsDiscrete(c.schedule.kind)) {
    throw ConfigError("schedule: discrete kinds need at least 2 steps");
  }
  c.schedule.Build();
  if (c.architecture.hidden.empty()) {
    throw ConfigError("architecture: at least one hidden layer required");
  }
  if (c.architecture.time_embed_width % 2 != 0) {
    throw ConfigError("architecture: time_embed_width must be even");
  }
  bool known = false;
  for (auto g : kGenerators) known = known || c.data.generator == g;
  if (!known) {
    throw ConfigError("unknown generator '" + c.data.generator + "'");
  }
  if (c.data.n_members < 1 || c.data.n_nonmembers < 1) {
    throw ConfigError("data: n_members and n_nonmembers must be >= 1");
  }
  ValidateTrainConfig(c.train, c.data.n_members);
  if (c.attack.k_draws < 1) throw ConfigError("attack: k_draws must be >= 1");
  if (c.attack.discrete_stride < 1) {
    throw ConfigError("attack: discrete_stride must be >= 1");
  }
  if (c.attack.continuous_steps != "grid" &&
      c.attack.continuous_steps != "random") {
    throw ConfigError("attack: continuous_steps must be 'grid' or 'random'");
  }
  if (c.attack.n_continuous_steps < 1) {
    throw ConfigError("attack: n_continuous_steps must be >= 1");
  }
  ValidateOdeConfig(c.ode);
  if (c.sampler.langevin_inner_steps < 1 || c.sampler.sde_steps < 1 ||
      !(c.sampler.langevin_step_scale > 0.0)) {
    throw ConfigError("sampler: step counts and step scale must be positive");
  }
  for (double level : c.fpr_levels) {
    if (!(level > 0.0 && level <= 1.0)) {
      throw ConfigError("report: fpr levels must lie in (0, 1]");
    }
  }
}

std::string ConfigFingerprint(const RunConfig& config) {
  Json j = ToJson(config);
  j.erase("paths");
  return Fingerprint(j.dump());
}

std::vector<double> AttackSteps(const RunConfig& c) {
  if (IsDiscrete(c.schedule.kind)) {
    return DiscreteSteps(c.schedule.steps, c.attack.discrete_stride);
  }
  if (c.attack.continuous_steps == "random") {
    return ContinuousRandomSteps(c.attack.n_continuous_steps, c.attack.seed);
  }
  return ContinuousGrid(c.attack.n_continuous_steps);
}

}  // namespace diffmia
