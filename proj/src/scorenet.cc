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

#include "diffmia/scorenet.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "diffmia/errors.h"
#include "diffmia/rng.h"
#include "json_io.h"

namespace diffmia {

using internal::Json;

std::string_view ParamKindName(ParamKind kind) {
  return kind == ParamKind::kEpsilon ? "epsilon" : "score";
}

ParamKind ParseParamKind(std::string_view name) {
  if (name == "epsilon") return ParamKind::kEpsilon;
  if (name == "score") return ParamKind::kScore;
  throw ConfigError("unknown parameterization '" + std::string(name) + "'");
}

ParamKind DefaultParamKind(ModelKind kind) {
  return kind == ModelKind::kDdpm || kind == ModelKind::kVpsde
             ? ParamKind::kEpsilon
             : ParamKind::kScore;
}

std::vector<double> TimeFrequencies(std::size_t width, double f_min,
                                    double ratio) {
  std::vector<double> f(width / 2);
  double v = f_min;
  for (double& x : f) {
    x = v;
    v *= ratio;
  }
  return f;
}

Tensor TimeEmbedding(double u, std::size_t width, double f_min,
                     double ratio) {
  if (width % 2 != 0) {
    throw ConfigError("time embedding width must be even");
  }
  const auto freqs = TimeFrequencies(width, f_min, ratio);
  const std::size_t half = freqs.size();
  std::vector<double> out(width);
  for (std::size_t k = 0; k < half; ++k) {
    const double a = 2.0 * std::numbers::pi * freqs[k] * u;
    out[k] = std::sin(a);
    out[half + k] = std::cos(a);
  }
  return Tensor::Vector(std::move(out));
}

Tensor TimeEmbeddingBatch(const Architecture& arch, std::size_t rows,
                          std::span<const double> u) {
  if (u.size() != 1 && u.size() != rows) {
    throw ShapeError("time embedding: " + std::to_string(u.size()) +
                     " times for " + std::to_string(rows) + " rows");
  }
  const std::size_t w = arch.time_embed_width;
  std::vector<double> out(rows * w);
  Tensor shared;
  if (u.size() == 1) {
    shared = TimeEmbedding(u[0], w, arch.time_freq_min, arch.time_freq_ratio);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const Tensor e = u.size() == 1 ? shared
                                   : TimeEmbedding(u[r], w, arch.time_freq_min,
                                                   arch.time_freq_ratio);
    std::copy(e.data().begin(), e.data().end(), out.begin() + r * w);
  }
  return Tensor::Matrix(rows, w, std::move(out));
}

ScoreNetwork ScoreNetwork::Create(const Architecture& arch,
                                  std::uint64_t seed) {
  if (arch.data_dim == 0 || arch.time_embed_width % 2 != 0) {
    throw ConfigError("network: data_dim must be positive and the time "
                      "embedding width even");
  }
  ScoreNetwork net;
  net.arch_ = arch;
  Rng rng(seed);
  {
    std::vector<double> p(arch.data_dim * arch.input_features);
    for (double& v : p) v = arch.input_feature_scale * rng.Normal();
    net.projection_ = Tensor::Matrix(arch.data_dim, arch.input_features,
                                     std::move(p));
  }
  const auto dims = net.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    const bool last = l + 2 == dims.size();
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out);
    std::vector<double> b(out);
    for (double& v : w) v = rng.Uniform(-bound, bound);
    for (double& v : b) v = rng.Uniform(-bound, bound);
    if (last && arch.zero_init_output) {
      std::fill(w.begin(), w.end(), 0.0);
      std::fill(b.begin(), b.end(), 0.0);
    }
    net.params_.push_back(Tensor::Matrix(in, out, std::move(w)));
    net.params_.push_back(Tensor::Vector(std::move(b)));
  }
  return net;
}

ScoreNetwork ScoreNetwork::FromParts(const Architecture& arch,
                                     Tensor projection,
                                     std::vector<Tensor> parameters) {
  ScoreNetwork net;
  net.arch_ = arch;
  if (projection.shape() != Shape{arch.data_dim, arch.input_features}) {
    throw SchemaError("network: input projection has shape " +
                      ShapeString(projection.shape()));
  }
  net.projection_ = std::move(projection);
  net.set_parameters(std::move(parameters));
  return net;
}

std::vector<std::size_t> ScoreNetwork::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.push_back(arch_.data_dim + arch_.time_embed_width +
                 2 * arch_.input_features);
  for (std::size_t h : arch_.hidden) dims.push_back(h);
  dims.push_back(arch_.data_dim);
  return dims;
}

void ScoreNetwork::set_parameters(std::vector<Tensor> params) {
  const auto dims = layer_dims();
  if (params.size() != 2 * (dims.size() - 1)) {
    throw SchemaError("network: expected " +
                      std::to_string(2 * (dims.size() - 1)) +
                      " parameter tensors, got " +
                      std::to_string(params.size()));
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (params[2 * l].shape() != Shape{dims[l], dims[l + 1]} ||
        params[2 * l + 1].shape() != Shape{dims[l + 1]}) {
      throw SchemaError("network: layer " + std::to_string(l) +
                        " parameters have wrong shape");
    }
  }
  params_ = std::move(params);
}

std::size_t ScoreNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& p : params_) n += p.size();
  return n;
}

Var ScoreNetwork::Body(Tape& tape, Var x, std::span<const double> u,
                       std::span<const Var> params) const {
  const Tensor& xv = x.value();
  if (xv.rank() != 2 || xv.dim(1) != arch_.data_dim) {
    throw ShapeError("network: input shape " + ShapeString(xv.shape()) +
                     " is not [B, " + std::to_string(arch_.data_dim) + "]");
  }
  const std::size_t rows = xv.dim(0);
  std::vector<Var> parts = {
      x, tape.Constant(TimeEmbeddingBatch(arch_, rows, u))};
  if (arch_.input_features > 0) {
    Var proj = Matmul(x, tape.Constant(projection_));
    parts.push_back(Sin(proj));
    parts.push_back(Cos(proj));
  }
  Var h = Concat(parts);
  const std::size_t layers = params.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    h = Matmul(h, params[2 * l]) + params[2 * l + 1];
    if (l + 1 < layers) h = Tanh(h);
  }
  return h;
}

Var ScoreNetwork::Apply(Tape& tape, Var x, std::span<const double> u) const {
  std::vector<Var> consts;
  consts.reserve(params_.size());
  for (const Tensor& p : params_) consts.push_back(tape.Constant(p));
  return Body(tape, x, u, consts);
}

Var ScoreNetwork::ApplyWith(Tape& tape, Var x, std::span<const double> u,
                            std::span<const Var> params) const {
  if (params.size() != params_.size()) {
    throw ContractError("network: wrong number of parameter nodes");
  }
  return Body(tape, x, u, params);
}

namespace {

// Runs the model on [m] or [B, m] input and returns output in the same shape.
Tensor RunRaw(const ScoreModel& model, const Tensor& x, double u) {
  const bool single = x.rank() == 1;
  if ((single && x.dim(0) != model.dim()) ||
      (!single && (x.rank() != 2 || x.dim(1) != model.dim()))) {
    throw ShapeError("model input shape " + ShapeString(x.shape()) +
                     " does not match dimension " +
                     std::to_string(model.dim()));
  }
  Tape tape;
  Var in = tape.Constant(single ? x.Reshape({1, x.dim(0)}) : x);
  const double times[1] = {u};
  Var out = model.Apply(tape, in, times);
  return single ? out.value().Reshape(x.shape()) : out.value();
}

}  // namespace

Tensor RawOutput(const ScoreModel& model, const Tensor& x, double u) {
  return RunRaw(model, x, u);
}

Tensor PredictEps(const ScoreModel& model, const Schedule& schedule,
                  const Tensor& x_t, double t) {
  if (model.param_kind() != ParamKind::kEpsilon) {
    throw KindError("predict_eps: model is score-parameterized");
  }
  schedule.Marginal(t);  // validates t
  return RunRaw(model, x_t, schedule.NetworkTime(t));
}

Tensor PredictScore(const ScoreModel& model, const Schedule& schedule,
                    const Tensor& x_t, double t) {
  const double std = schedule.Marginal(t).std;
  if (std == 0.0) throw SingularityError("predict_score: marginal std is 0");
  const Tensor raw = RunRaw(model, x_t, schedule.NetworkTime(t));
  const double sign = model.param_kind() == ParamKind::kEpsilon ? -1.0 : 1.0;
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sign * raw[i] / std;
  return Tensor(raw.shape(), std::move(out));
}

Var ScoreFromRaw(Var raw, ParamKind kind, double std) {
  if (std == 0.0) throw SingularityError("score: marginal std is 0");
  return Scale(raw, (kind == ParamKind::kEpsilon ? -1.0 : 1.0) / std);
}

std::string CheckpointToString(const Checkpoint& c) {
  Json j;
  j["format"] = "diffmia-checkpoint";
  j["version"] = Checkpoint::kVersion;
  j["model_kind"] = std::string(ModelKindName(c.model_kind));
  j["schedule"] = internal::ScheduleToJson(c.schedule);
  j["architecture"] = internal::ArchitectureToJson(c.network.architecture());
  Json t;
  t["steps"] = c.training.steps;
  t["seed"] = c.training.seed;
  t["batch_size"] = c.training.batch_size;
  t["dataset_fingerprint"] = c.training.dataset_fingerprint;
  t["config_fingerprint"] = c.training.config_fingerprint;
  t["dp"] = c.training.dp;
  t["dp_clip"] = c.training.dp_clip;
  t["dp_noise_multiplier"] = c.training.dp_noise_multiplier;
  t["dp_delta"] = c.training.dp_delta;
  j["training"] = t;
  j["input_projection"] = internal::TensorToJson(c.network.input_projection());
  Json params = Json::array();
  for (const Tensor& p : c.network.parameters()) {
    params.push_back(internal::TensorToJson(p));
  }
  j["parameters"] = params;
  return j.dump(1) + "\n";
}

Checkpoint CheckpointFromString(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "diffmia-checkpoint") {
    throw SchemaError("checkpoint: missing format tag");
  }
  const int version = j.value("version", -1);
  if (version != Checkpoint::kVersion) {
    throw VersionError("checkpoint: file version " + std::to_string(version) +
                       ", reader supports version " +
                       std::to_string(Checkpoint::kVersion));
  }
  try {
    Checkpoint c;
    c.model_kind = ParseModelKind(j.at("model_kind").get<std::string>());
    c.schedule = internal::ScheduleFromJson(
        j.at("schedule"), ScheduleParams::Defaults(c.model_kind));
    const Architecture arch =
        internal::ArchitectureFromJson(j.at("architecture"), Architecture{});
    std::vector<Tensor> params;
    for (const auto& p : j.at("parameters")) {
      params.push_back(internal::TensorFromJson(p));
    }
    c.network = ScoreNetwork::FromParts(
        arch, internal::TensorFromJson(j.at("input_projection")),
        std::move(params));
    const Json& t = j.at("training");
    c.training.steps = t.at("steps").get<long>();
    c.training.seed = t.at("seed").get<std::uint64_t>();
    c.training.batch_size = t.value("batch_size", 0L);
    c.training.dataset_fingerprint = t.value("dataset_fingerprint", "");
    c.training.config_fingerprint = t.value("config_fingerprint", "");
    c.training.dp = t.value("dp", false);
    c.training.dp_clip = t.value("dp_clip", 0.0);
    c.training.dp_noise_multiplier = t.value("dp_noise_multiplier", 0.0);
    c.training.dp_delta = t.value("dp_delta", 0.0);
    return c;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << CheckpointToString(checkpoint);
  if (!out) throw IoError("failed writing checkpoint " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return CheckpointFromString(buf.str());
}

}  // namespace diffmia
