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

#ifndef DIFFMIA_DATA_H_
#define DIFFMIA_DATA_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diffmia/attacks.h"
#include "diffmia/metrics.h"
#include "diffmia/tensor.h"

namespace diffmia {

// 16 hex digits of FNV-1a over the bytes.
std::string Fingerprint(std::string_view bytes);

struct Dataset {
  Tensor points;  // [n, 2], standardized over the members
  std::vector<int> components;
  std::string generator;
  std::uint64_t seed = 0;
  std::vector<std::size_t> member_idx;
  std::vector<std::size_t> nonmember_idx;
  // Affine map applied to the raw draws: (raw - shift) / scale.
  std::vector<double> shift;
  std::vector<double> scale;

  Tensor members() const;
  Tensor nonmembers() const;
  std::vector<std::uint64_t> member_ids() const;
  std::vector<std::uint64_t> nonmember_ids() const;
  EvalSet eval_set() const;
  std::string fingerprint() const;
};

// Throws ContractError if the split overlaps, repeats or is out of range.
void ValidateSplit(const Dataset& dataset);

inline constexpr std::string_view kGenerators[] = {"ring8", "moons", "spiral",
                                                   "gauss_grid"};

// Members occupy rows [0, n_members), nonmembers the rest; both come from
// one seeded stream of the same generator.
Dataset GenerateDataset(std::string_view generator, std::size_t n_members,
                        std::size_t n_nonmembers, std::uint64_t seed);

// CSV files begin with "# key=value" lines. The first is the format tag
// with its version; readers reject any other version.
struct CsvMeta {
  std::string format;
  int version = 0;
  std::vector<std::pair<std::string, std::string>> fields;

  void Set(std::string key, std::string value);
  std::optional<std::string> Find(std::string_view key) const;
  std::string Get(std::string_view key) const;  // SchemaError if missing
};

// Formats with up to 17 significant digits, enough to round-trip.
std::string FormatDouble(double v);
double ParseDouble(std::string_view text);

void SaveDataset(const Dataset& dataset, const std::string& path,
                 const std::string& config_fingerprint = "");
Dataset LoadDataset(const std::string& path);

struct ScoreFile {
  std::string provenance;  // "loss" or "likelihood"
  std::string config_fingerprint;
  std::vector<AttackScoreSet> sets;  // one per step, in file order
};

void SaveScores(const ScoreFile& file, const std::string& path);
ScoreFile LoadScores(const std::string& path);

struct RocFile {
  std::string label;
  std::string config_fingerprint;
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;
  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
};

void SaveRoc(const RocReport& report, const std::string& label,
             const std::string& config_fingerprint, const std::string& path);
RocFile LoadRoc(const std::string& path);

void SaveLossHistory(std::span<const std::pair<long, double>> history,
                     const std::string& config_fingerprint,
                     const std::string& path);

void SaveSamples(const Tensor& samples, const std::string& config_fingerprint,
                 const std::string& path);
Tensor LoadSamples(const std::string& path, std::string* config_fingerprint);

struct LikelihoodRow {
  std::uint64_t sample_id = 0;
  bool is_member = false;
  double log_likelihood = 0.0;
  double bits_per_dim = 0.0;
};

void SaveLikelihoods(std::span<const LikelihoodRow> rows,
                     const std::string& config_fingerprint,
                     const std::string& path);

// Reads the metadata block of any artifact.
CsvMeta ReadCsvMeta(const std::string& path);

void WriteTextFile(const std::string& path, std::string_view text);
std::string ReadTextFile(const std::string& path);

}  // namespace diffmia

#endif  // DIFFMIA_DATA_H_
