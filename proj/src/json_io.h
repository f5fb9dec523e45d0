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

// JSON mappings shared by the persistence code. Internal to the library.

#ifndef DIFFMIA_SRC_JSON_IO_H_
#define DIFFMIA_SRC_JSON_IO_H_

#include <string>

#include "diffmia/errors.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"
#include "json.hpp"

namespace diffmia::internal {

using Json = nlohmann::ordered_json;

inline Json ScheduleToJson(const ScheduleParams& p) {
  Json j;
  j["kind"] = std::string(ModelKindName(p.kind));
  switch (p.kind) {
    case ModelKind::kDdpm:
      j["steps"] = p.steps;
      j["beta_start"] = p.beta_start;
      j["beta_end"] = p.beta_end;
      break;
    case ModelKind::kSmld:
      j["steps"] = p.steps;
      j["sigma_min"] = p.sigma_min;
      j["sigma_max"] = p.sigma_max;
      break;
    case ModelKind::kVpsde:
      j["beta_min"] = p.beta_min;
      j["beta_max"] = p.beta_max;
      break;
    case ModelKind::kVesde:
      j["sigma_min"] = p.sigma_min;
      j["sigma_max"] = p.sigma_max;
      break;
  }
  return j;
}

// Missing fields keep their defaults.
inline ScheduleParams ScheduleFromJson(const Json& j, ScheduleParams p) {
  if (j.contains("kind")) p.kind = ParseModelKind(j.at("kind").get<std::string>());
  p.steps = j.value("steps", p.steps);
  p.beta_start = j.value("beta_start", p.beta_start);
  p.beta_end = j.value("beta_end", p.beta_end);
  p.sigma_min = j.value("sigma_min", p.sigma_min);
  p.sigma_max = j.value("sigma_max", p.sigma_max);
  p.beta_min = j.value("beta_min", p.beta_min);
  p.beta_max = j.value("beta_max", p.beta_max);
  return p;
}

inline Json ArchitectureToJson(const Architecture& a) {
  Json j;
  j["data_dim"] = a.data_dim;
  j["hidden"] = a.hidden;
  j["time_embed_width"] = a.time_embed_width;
  j["time_freq_min"] = a.time_freq_min;
  j["time_freq_ratio"] = a.time_freq_ratio;
  j["input_features"] = a.input_features;
  j["input_feature_scale"] = a.input_feature_scale;
  j["param_kind"] = std::string(ParamKindName(a.param_kind));
  return j;
}

inline Architecture ArchitectureFromJson(const Json& j, Architecture a) {
  a.data_dim = j.value("data_dim", a.data_dim);
  if (j.contains("hidden")) a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  a.time_embed_width = j.value("time_embed_width", a.time_embed_width);
  a.time_freq_min = j.value("time_freq_min", a.time_freq_min);
  a.time_freq_ratio = j.value("time_freq_ratio", a.time_freq_ratio);
  a.input_features = j.value("input_features", a.input_features);
  a.input_feature_scale = j.value("input_feature_scale", a.input_feature_scale);
  if (j.contains("param_kind")) {
    a.param_kind = ParseParamKind(j.at("param_kind").get<std::string>());
  }
  return a;
}

inline Json TensorToJson(const Tensor& t) {
  Json j;
  j["shape"] = t.shape();
  j["data"] = t.ToVector();
  return j;
}

inline Tensor TensorFromJson(const Json& j) {
  return Tensor(j.at("shape").get<Shape>(),
                j.at("data").get<std::vector<double>>());
}

}  // namespace diffmia::internal

#endif  // DIFFMIA_SRC_JSON_IO_H_
