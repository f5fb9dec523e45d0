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

#include "diffmia/data.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "diffmia/errors.h"
#include "diffmia/rng.h"

namespace diffmia {

std::string Fingerprint(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

Tensor GatherRows(const Tensor& points, const std::vector<std::size_t>& idx) {
  const std::size_t m = points.dim(1);
  std::vector<double> out;
  out.reserve(idx.size() * m);
  for (std::size_t i : idx) {
    for (std::size_t c = 0; c < m; ++c) out.push_back(points.at(i, c));
  }
  return Tensor::Matrix(idx.size(), m, std::move(out));
}

std::vector<std::uint64_t> Ids(const std::vector<std::size_t>& idx) {
  return {idx.begin(), idx.end()};
}

}  // namespace

Tensor Dataset::members() const { return GatherRows(points, member_idx); }
Tensor Dataset::nonmembers() const { return GatherRows(points, nonmember_idx); }
std::vector<std::uint64_t> Dataset::member_ids() const { return Ids(member_idx); }
std::vector<std::uint64_t> Dataset::nonmember_ids() const {
  return Ids(nonmember_idx);
}

EvalSet Dataset::eval_set() const {
  return {members(), nonmembers(), member_ids(), nonmember_ids()};
}

std::string Dataset::fingerprint() const {
  std::string bytes = generator + "|" + std::to_string(seed) + "|" +
                      std::to_string(member_idx.size()) + "|" +
                      std::to_string(nonmember_idx.size()) + "|";
  for (double v : points.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    bytes.append(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
  for (std::size_t i : member_idx) bytes += std::to_string(i) + ",";
  return Fingerprint(bytes);
}

void ValidateSplit(const Dataset& d) {
  const std::size_t n = d.points.rank() == 2 ? d.points.dim(0) : 0;
  std::set<std::size_t> seen;
  for (const auto* idx : {&d.member_idx, &d.nonmember_idx}) {
    for (std::size_t i : *idx) {
      if (i >= n) {
        throw ContractError("dataset: index " + std::to_string(i) +
                            " out of range");
      }
      if (!seen.insert(i).second) {
        throw ContractError("dataset: index " + std::to_string(i) +
                            " appears twice in the split");
      }
    }
  }
}

Dataset GenerateDataset(std::string_view generator, std::size_t n_members,
                        std::size_t n_nonmembers, std::uint64_t seed) {
  if (n_members < 1 || n_nonmembers < 1) {
    throw ConfigError("dataset: n_members and n_nonmembers must be >= 1");
  }
  int kind = -1;
  for (int i = 0; i < 4; ++i) {
    if (generator == kGenerators[i]) kind = i;
  }
  if (kind < 0) {
    throw ConfigError("unknown generator '" + std::string(generator) + "'");
  }
  const std::size_t n = n_members + n_nonmembers;
  Rng rng(seed);
  std::vector<double> raw(2 * n);
  std::vector<int> comp(n, 0);
  constexpr double pi = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0, y = 0.0, noise = 0.0;
    switch (kind) {
      case 0: {  // ring8
        comp[i] = static_cast<int>(rng.Below(8));
        const double a = 2.0 * pi * comp[i] / 8.0;
        x = 2.0 * std::cos(a);
        y = 2.0 * std::sin(a);
        noise = 0.3;
        break;
      }
      case 1: {  // moons
        comp[i] = static_cast<int>(rng.Below(2));
        const double a = rng.Uniform(0.0, pi);
        x = comp[i] == 0 ? std::cos(a) : 1.0 - std::cos(a);
        y = comp[i] == 0 ? std::sin(a) : 0.5 - std::sin(a);
        noise = 0.1;
        break;
      }
      case 2: {  // spiral
        const double u = rng.Uniform();
        const double r = 0.25 + 2.75 * u;
        x = r * std::cos(3.0 * pi * u);
        y = r * std::sin(3.0 * pi * u);
        noise = 0.05;
        break;
      }
      default: {  // gauss_grid
        comp[i] = static_cast<int>(rng.Below(25));
        x = comp[i] % 5 - 2.0;
        y = comp[i] / 5 - 2.0;
        noise = 0.2;
        break;
      }
    }
    raw[2 * i] = x + noise * rng.Normal();
    raw[2 * i + 1] = y + noise * rng.Normal();
  }

  Dataset d;
  d.generator = std::string(generator);
  d.seed = seed;
  d.components = std::move(comp);
  d.shift.assign(2, 0.0);
  d.scale.assign(2, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n_members; ++i) mean += raw[2 * i + c];
    mean /= static_cast<double>(n_members);
    double var = 0.0;
    for (std::size_t i = 0; i < n_members; ++i) {
      const double dlt = raw[2 * i + c] - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(n_members);
    d.shift[c] = mean;
    d.scale[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      raw[2 * i + c] = (raw[2 * i + c] - d.shift[c]) / d.scale[c];
    }
  }
  d.points = Tensor::Matrix(n, 2, std::move(raw));
  for (std::size_t i = 0; i < n_members; ++i) d.member_idx.push_back(i);
  for (std::size_t i = n_members; i < n; ++i) d.nonmember_idx.push_back(i);
  ValidateSplit(d);
  return d;
}

void CsvMeta::Set(std::string key, std::string value) {
  for (auto& [k, v] : fields) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  fields.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> CsvMeta::Find(std::string_view key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string CsvMeta::Get(std::string_view key) const {
  auto v = Find(key);
  if (!v) throw SchemaError(format + ": missing header field '" +
                            std::string(key) + "'");
  return *v;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseDouble(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaError("cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

namespace {

constexpr int kCsvVersion = 1;

std::uint64_t ParseUint(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaError("cannot parse integer '" + std::string(text) + "'");
  }
  return v;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void WriteMeta(std::ostream& out, const CsvMeta& meta) {
  out << "# " << meta.format << " version=" << meta.version << "\n";
  for (const auto& [k, v] : meta.fields) out << "# " << k << "=" << v << "\n";
}

void Finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct CsvTable {
  CsvMeta meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvMeta ParseMetaLines(std::istream& in, const std::string& path,
                       std::string& first_data_line) {
  CsvMeta meta;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) != 0) {
      first_data_line = line;
      break;
    }
    const std::string body = line.substr(2);
    if (first) {
      const auto sp = body.find(" version=");
      if (sp == std::string::npos) {
        throw SchemaError("'" + path + "': missing format/version line");
      }
      meta.format = body.substr(0, sp);
      meta.version = static_cast<int>(ParseUint(body.substr(sp + 9)));
      first = false;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("'" + path + "': malformed header line '" + line + "'");
    }
    meta.fields.emplace_back(body.substr(0, eq), body.substr(eq + 1));
  }
  if (first) throw SchemaError("'" + path + "': no metadata header");
  return meta;
}

CsvTable ReadCsv(const std::string& path, std::string_view format,
                 const std::vector<std::string>& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  CsvTable t;
  std::string header_line;
  t.meta = ParseMetaLines(in, path, header_line);
  if (t.meta.format != format) {
    throw SchemaError("'" + path + "': expected " + std::string(format) +
                      ", found " + t.meta.format);
  }
  if (t.meta.version != kCsvVersion) {
    throw VersionError("'" + path + "': " + t.meta.format + " version " +
                       std::to_string(t.meta.version) +
                       " is not supported (expected " +
                       std::to_string(kCsvVersion) + ")");
  }
  t.header = Split(header_line);
  if (t.header != expected_header) {
    throw SchemaError("'" + path + "': unexpected column header '" +
                      header_line + "'");
  }
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = Split(line);
    if (cells.size() != t.header.size()) {
      throw SchemaError("'" + path + "': row has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

CsvMeta NewMeta(std::string format, const std::string& fingerprint) {
  CsvMeta meta;
  meta.format = std::move(format);
  meta.version = kCsvVersion;
  meta.Set("config_fingerprint", fingerprint);
  return meta;
}

std::string JoinDoubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ";";
    s += FormatDouble(v[i]);
  }
  return s;
}

std::vector<double> SplitDoubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ';')) out.push_back(ParseDouble(cell));
  return out;
}

}  // namespace

void SaveDataset(const Dataset& d, const std::string& path,
                 const std::string& config_fingerprint) {
  ValidateSplit(d);
  CsvMeta meta = NewMeta("diffmia-dataset", config_fingerprint);
  meta.Set("generator", d.generator);
  meta.Set("seed", std::to_string(d.seed));
  meta.Set("n_members", std::to_string(d.member_idx.size()));
  meta.Set("n_nonmembers", std::to_string(d.nonmember_idx.size()));
  meta.Set("shift", JoinDoubles(d.shift));
  meta.Set("scale", JoinDoubles(d.scale));
  meta.Set("dataset_fingerprint", d.fingerprint());
  std::vector<std::string> split(d.points.dim(0), "unused");
  for (std::size_t i : d.member_idx) split[i] = "member";
  for (std::size_t i : d.nonmember_idx) split[i] = "nonmember";
  auto out = OpenOut(path);
  WriteMeta(out, meta);
  out << "index,split,component,x0,x1\n";
  for (std::size_t i = 0; i < d.points.dim(0); ++i) {
    out << i << "," << split[i] << ","
        << (d.components.empty() ? 0 : d.components[i]) << ","
        << FormatDouble(d.points.at(i, 0)) << ","
        << FormatDouble(d.points.at(i, 1)) << "\n";
  }
  Finish(out, path);
}

Dataset LoadDataset(const std::string& path) {
  const CsvTable t = ReadCsv(path, "diffmia-dataset",
                             {"index", "split", "component", "x0", "x1"});
  Dataset d;
  d.generator = t.meta.Get("generator");
  d.seed = ParseUint(t.meta.Get("seed"));
  d.shift = SplitDoubles(t.meta.Get("shift"));
  d.scale = SplitDoubles(t.meta.Get("scale"));
  std::vector<double> pts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (ParseUint(row[0]) != r) {
      throw SchemaError("'" + path + "': rows out of index order");
    }
    if (row[1] == "member") {
      d.member_idx.push_back(r);
    } else if (row[1] == "nonmember") {
      d.nonmember_idx.push_back(r);
    } else if (row[1] != "unused") {
      throw SchemaError("'" + path + "': unknown split '" + row[1] + "'");
    }
    d.components.push_back(static_cast<int>(ParseUint(row[2])));
    pts.push_back(ParseDouble(row[3]));
    pts.push_back(ParseDouble(row[4]));
  }
  d.points = Tensor::Matrix(t.rows.size(), 2, std::move(pts));
  ValidateSplit(d);
  if (std::to_string(d.member_idx.size()) != t.meta.Get("n_members") ||
      std::to_string(d.nonmember_idx.size()) != t.meta.Get("n_nonmembers")) {
    throw SchemaError("'" + path + "': split sizes disagree with the header");
  }
  return d;
}

void SaveScores(const ScoreFile& file, const std::string& path) {
  CsvMeta meta = NewMeta("diffmia-scores", file.config_fingerprint);
  meta.Set("provenance", file.provenance);
  std::size_t excluded = 0;
  for (const auto& s : file.sets) excluded += s.excluded;
  meta.Set("excluded", std::to_string(excluded));
  auto out = OpenOut(path);
  WriteMeta(out, meta);
  out << "sample_id,is_member,step_or_NA,score,orientation\n";
  for (const AttackScoreSet& s : file.sets) {
    ValidateScoreSet(s);
    if (s.member_ids.size() != s.member_scores.size() ||
        s.nonmember_ids.size() != s.nonmember_scores.size()) {
      throw ContractError("save scores: every score needs a sample id");
    }
    const std::string step = s.step ? FormatDouble(*s.step) : "NA";
    const std::string_view orient = OrientationName(s.orientation);
    for (std::size_t i = 0; i < s.member_scores.size(); ++i) {
      out << s.member_ids[i] << ",1," << step << ","
          << FormatDouble(s.member_scores[i]) << "," << orient << "\n";
    }
    for (std::size_t i = 0; i < s.nonmember_scores.size(); ++i) {
      out << s.nonmember_ids[i] << ",0," << step << ","
          << FormatDouble(s.nonmember_scores[i]) << "," << orient << "\n";
    }
  }
  Finish(out, path);
}

ScoreFile LoadScores(const std::string& path) {
  const CsvTable t =
      ReadCsv(path, "diffmia-scores",
              {"sample_id", "is_member", "step_or_NA", "score", "orientation"});
  ScoreFile f;
  f.provenance = t.meta.Get("provenance");
  f.config_fingerprint = t.meta.Get("config_fingerprint");
  std::string current;
  for (const auto& row : t.rows) {
    if (f.sets.empty() || row[2] != current) {
      current = row[2];
      AttackScoreSet s;
      if (current != "NA") s.step = ParseDouble(current);
      s.orientation = ParseOrientation(row[4]);
      f.sets.push_back(std::move(s));
    }
    AttackScoreSet& s = f.sets.back();
    if (ParseOrientation(row[4]) != s.orientation) {
      throw SchemaError("'" + path + "': mixed orientations within one step");
    }
    const std::uint64_t id = ParseUint(row[0]);
    const double score = ParseDouble(row[3]);
    if (row[1] == "1") {
      s.member_ids.push_back(id);
      s.member_scores.push_back(score);
    } else if (row[1] == "0") {
      s.nonmember_ids.push_back(id);
      s.nonmember_scores.push_back(score);
    } else {
      throw SchemaError("'" + path + "': is_member must be 0 or 1");
    }
  }
  if (!f.sets.empty()) {
    f.sets.front().excluded = ParseUint(t.meta.Get("excluded"));
  }
  for (const auto& s : f.sets) ValidateScoreSet(s);
  return f;
}

void SaveRoc(const RocReport& report, const std::string& label,
             const std::string& config_fingerprint, const std::string& path) {
  CsvMeta meta = NewMeta("diffmia-roc", config_fingerprint);
  meta.Set("label", label);
  meta.Set("n_members", std::to_string(report.n_members));
  meta.Set("n_nonmembers", std::to_string(report.n_nonmembers));
  meta.Set("auc", FormatDouble(report.auc));
  meta.Set("fpr_floor", FormatDouble(report.resolution_floor()));
  auto out = OpenOut(path);
  WriteMeta(out, meta);
  out << "fpr,tpr\n";
  for (const RocPoint& p : report.points) {
    out << FormatDouble(p.fpr) << "," << FormatDouble(p.tpr) << "\n";
  }
  Finish(out, path);
}

RocFile LoadRoc(const std::string& path) {
  const CsvTable t = ReadCsv(path, "diffmia-roc", {"fpr", "tpr"});
  RocFile f;
  f.label = t.meta.Get("label");
  f.config_fingerprint = t.meta.Get("config_fingerprint");
  f.n_members = ParseUint(t.meta.Get("n_members"));
  f.n_nonmembers = ParseUint(t.meta.Get("n_nonmembers"));
  for (const auto& row : t.rows) {
    f.points.emplace_back(ParseDouble(row[0]), ParseDouble(row[1]));
  }
  return f;
}

void SaveLossHistory(std::span<const std::pair<long, double>> history,
                     const std::string& config_fingerprint,
                     const std::string& path) {
  auto out = OpenOut(path);
  WriteMeta(out, NewMeta("diffmia-loss-history", config_fingerprint));
  out << "step,mean_loss\n";
  for (const auto& [step, loss] : history) {
    out << step << "," << FormatDouble(loss) << "\n";
  }
  Finish(out, path);
}

void SaveSamples(const Tensor& samples, const std::string& config_fingerprint,
                 const std::string& path) {
  if (samples.rank() != 2 || samples.dim(1) != 2) {
    throw ShapeError("save samples: expected [n, 2]");
  }
  auto out = OpenOut(path);
  WriteMeta(out, NewMeta("diffmia-samples", config_fingerprint));
  out << "x0,x1\n";
  for (std::size_t i = 0; i < samples.dim(0); ++i) {
    out << FormatDouble(samples.at(i, 0)) << ","
        << FormatDouble(samples.at(i, 1)) << "\n";
  }
  Finish(out, path);
}

Tensor LoadSamples(const std::string& path, std::string* config_fingerprint) {
  const CsvTable t = ReadCsv(path, "diffmia-samples", {"x0", "x1"});
  if (config_fingerprint) {
    *config_fingerprint = t.meta.Get("config_fingerprint");
  }
  std::vector<double> v;
  for (const auto& row : t.rows) {
    v.push_back(ParseDouble(row[0]));
    v.push_back(ParseDouble(row[1]));
  }
  return Tensor::Matrix(t.rows.size(), 2, std::move(v));
}

void SaveLikelihoods(std::span<const LikelihoodRow> rows,
                     const std::string& config_fingerprint,
                     const std::string& path) {
  auto out = OpenOut(path);
  WriteMeta(out, NewMeta("diffmia-likelihood", config_fingerprint));
  out << "sample_id,is_member,log_likelihood_nats,bits_per_dim\n";
  for (const LikelihoodRow& r : rows) {
    out << r.sample_id << "," << (r.is_member ? 1 : 0) << ","
        << FormatDouble(r.log_likelihood) << ","
        << FormatDouble(r.bits_per_dim) << "\n";
  }
  Finish(out, path);
}

CsvMeta ReadCsvMeta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string ignored;
  return ParseMetaLines(in, path, ignored);
}

void WriteTextFile(const std::string& path, std::string_view text) {
  auto out = OpenOut(path);
  out << text;
  Finish(out, path);
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace diffmia
