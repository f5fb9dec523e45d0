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

#ifndef DIFFMIA_SCORENET_H_
#define DIFFMIA_SCORENET_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "diffmia/autodiff.h"
#include "diffmia/schedules.h"
#include "diffmia/tensor.h"

namespace diffmia {

// What the raw network output means: the injected noise (DDPM, VP) or the
// score scaled by the marginal std (SMLD, VE).
enum class ParamKind { kEpsilon, kScore };

std::string_view ParamKindName(ParamKind kind);
ParamKind ParseParamKind(std::string_view name);
ParamKind DefaultParamKind(ModelKind kind);

// A time-conditioned vector field whose evaluation is recorded on a tape, so
// both parameter gradients and input VJPs are available. Rows of the input
// batch never interact.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual ParamKind param_kind() const = 0;
  virtual std::size_t dim() const = 0;
  // Raw output for x of shape [B, m] at network times u (size B or 1).
  virtual Var Apply(Tape& tape, Var x, std::span<const double> u) const = 0;
};

// ScoreModel backed by a callable. Used to plug analytic oracles into the
// likelihood, sampler and attack paths.
class CallableModel : public ScoreModel {
 public:
  using Fn = std::function<Var(Tape&, Var, std::span<const double>)>;

  CallableModel(ParamKind kind, std::size_t dim, Fn fn)
      : kind_(kind), dim_(dim), fn_(std::move(fn)) {}

  ParamKind param_kind() const override { return kind_; }
  std::size_t dim() const override { return dim_; }
  Var Apply(Tape& tape, Var x, std::span<const double> u) const override {
    return fn_(tape, x, u);
  }

 private:
  ParamKind kind_;
  std::size_t dim_;
  Fn fn_;
};

struct Architecture {
  std::size_t data_dim = 2;
  std::vector<std::size_t> hidden = {128, 128, 128, 128};
  std::size_t time_embed_width = 16;
  double time_freq_min = 0.25;
  double time_freq_ratio = 2.0;
  // Random Fourier features of the input, sin/cos(x P) with P ~ N(0, s^2).
  std::size_t input_features = 32;
  double input_feature_scale = 8.0;
  ParamKind param_kind = ParamKind::kEpsilon;
  bool zero_init_output = true;
};

// Geometric frequencies f_k = f_min * ratio^k, k < width / 2.
std::vector<double> TimeFrequencies(std::size_t width, double f_min,
                                    double ratio);
// [sin(2 pi f_k u)..., cos(2 pi f_k u)...] of length `width` (even).
Tensor TimeEmbedding(double u, std::size_t width, double f_min = 0.25,
                     double ratio = 2.0);

// Tanh MLP on concat(x, time embedding, input features).
class ScoreNetwork : public ScoreModel {
 public:
  ScoreNetwork() = default;
  static ScoreNetwork Create(const Architecture& arch, std::uint64_t seed);
  // Rebuild from stored pieces; validates every shape.
  static ScoreNetwork FromParts(const Architecture& arch, Tensor projection,
                                std::vector<Tensor> parameters);

  ParamKind param_kind() const override { return arch_.param_kind; }
  std::size_t dim() const override { return arch_.data_dim; }
  Var Apply(Tape& tape, Var x, std::span<const double> u) const override;
  // Same forward pass with parameters supplied as tape nodes, in the order
  // of parameters().
  Var ApplyWith(Tape& tape, Var x, std::span<const double> u,
                std::span<const Var> params) const;

  const Architecture& architecture() const { return arch_; }
  // W0, b0, W1, b1, ... with W of shape [in, out].
  const std::vector<Tensor>& parameters() const { return params_; }
  void set_parameters(std::vector<Tensor> params);
  const Tensor& input_projection() const { return projection_; }
  std::vector<std::size_t> layer_dims() const;
  std::size_t parameter_count() const;

 private:
  Var Body(Tape& tape, Var x, std::span<const double> u,
           std::span<const Var> params) const;

  Architecture arch_;
  Tensor projection_;  // [m, input_features]
  std::vector<Tensor> params_;
};

// Embedding rows for a batch; `u` holds one time per row or a single time.
Tensor TimeEmbeddingBatch(const Architecture& arch, std::size_t rows,
                          std::span<const double> u);

// Noise prediction at schedule time t. x_t is [m] or [B, m]. KindError for
// score-parameterized models.
Tensor PredictEps(const ScoreModel& model, const Schedule& schedule,
                  const Tensor& x_t, double t);
// Score at schedule time t; SingularityError when the marginal std is 0.
Tensor PredictScore(const ScoreModel& model, const Schedule& schedule,
                    const Tensor& x_t, double t);
// Raw model output at an explicit network time.
Tensor RawOutput(const ScoreModel& model, const Tensor& x, double u);

// Maps a raw output node to the score given the marginal std.
Var ScoreFromRaw(Var raw, ParamKind kind, double std);

struct TrainingInfo {
  long steps = 0;
  std::uint64_t seed = 0;
  std::string dataset_fingerprint;
  std::string config_fingerprint;
  bool dp = false;
  double dp_clip = 0.0;
  double dp_noise_multiplier = 0.0;
  double dp_delta = 0.0;
  long batch_size = 0;
};

struct Checkpoint {
  static constexpr int kVersion = 1;

  ModelKind model_kind = ModelKind::kDdpm;
  ScheduleParams schedule;
  ScoreNetwork network;
  TrainingInfo training;
};

// Versioned JSON document; doubles are written with round-trip precision.
void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path);
// IoError for unreadable files, SchemaError for malformed documents,
// VersionError for an unknown version.
Checkpoint LoadCheckpoint(const std::string& path);
std::string CheckpointToString(const Checkpoint& checkpoint);
Checkpoint CheckpointFromString(const std::string& text);

}  // namespace diffmia

#endif  // DIFFMIA_SCORENET_H_
