// Copyright 2026 The DeepJSCC Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "djscc/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "djscc/binary_io.hpp"
#include "djscc/common.hpp"
#include "djscc/pipeline.hpp"

namespace djscc {
namespace {

using nlohmann::ordered_json;

// Non-finite qualities (+inf PSNR at zero error) are stored as strings.
ordered_json encode_real(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

double decode_real(const ordered_json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

std::string model_fingerprint(const ModelParams<float>& model) {
  const auto bytes = serialize_checkpoint(model);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char b : bytes) h = (h ^ b) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return model.version_tag + ":" + buf;
}

}  // namespace

QualityMetric parse_quality_metric(std::string_view name) {
  if (name == "psnr") return QualityMetric::kPsnr;
  if (name == "ms_ssim" || name == "msssim") return QualityMetric::kMsSsim;
  throw Error(ErrorCode::kBadParams, "unknown metric '" + std::string(name) + "'");
}

std::string to_string(QualityMetric metric) { return metric == QualityMetric::kPsnr ? "psnr" : "ms_ssim"; }

RtpSpec RtpSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::kBadParams, "rtp must be metric:target");
  RtpSpec rtp;
  rtp.metric = parse_quality_metric(text.substr(0, colon));
  const std::string value(text.substr(colon + 1));
  std::size_t used = 0;
  try {
    rtp.target = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw Error(ErrorCode::kBadParams, "bad rtp target '" + value + "'");
  rtp.validate();
  return rtp;
}

void RtpSpec::validate() const {
  if (!std::isfinite(target)) throw Error(ErrorCode::kBadParams, "rtp target must be finite");
  if (metric == QualityMetric::kPsnr && !(target > 0)) throw Error(ErrorCode::kBadParams, "psnr target must be > 0");
  if (metric == QualityMetric::kMsSsim && !(target > 0 && target <= 1)) {
    throw Error(ErrorCode::kBadParams, "ms_ssim target must lie in (0,1]");
  }
}

std::size_t RateQualityTable::bin_for(double snr_db) const {
  if (empty()) throw Error(ErrorCode::kEmptyTable, "rate-quality table is empty");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < snr_grid_db.size(); ++i) {
    const double g = snr_grid_db[i];
    const double dist = g == snr_db ? 0.0 : std::abs(g - snr_db);
    if (dist < best_dist) {  // ties go to the lower bin
      best_dist = dist;
      best = i;
    }
  }
  if (std::isnan(best_dist) || best_dist == std::numeric_limits<double>::infinity()) {
    // Only reachable for a +inf query against a finite grid or vice versa.
    best = snr_db > 0 ? snr_grid_db.size() - 1 : 0;
  }
  return best;
}

std::vector<MonotonicityViolation> RateQualityTable::violations(double tolerance) const {
  if (tolerance < 0) tolerance = metric == QualityMetric::kPsnr ? 0.1 : 1e-3;
  std::vector<MonotonicityViolation> out;
  for (std::size_t b = 0; b < quality.size(); ++b) {
    for (int l = 2; l <= layers; ++l) {
      const double drop = at(b, l - 1) - at(b, l);
      if (drop > tolerance) out.push_back({b, l, drop});
    }
  }
  return out;
}

void RateQualityTable::validate() const {
  if (empty()) throw Error(ErrorCode::kEmptyTable, "rate-quality table is empty");
  if (!std::is_sorted(snr_grid_db.begin(), snr_grid_db.end())) {
    throw Error(ErrorCode::kBadParams, "snr grid must be ascending");
  }
  if (quality.size() != snr_grid_db.size()) throw Error(ErrorCode::kBadParams, "missing grid bins");
  for (const auto& row : quality) {
    if (row.size() != static_cast<std::size_t>(layers)) throw Error(ErrorCode::kBadParams, "missing layer entries");
  }
}

TableBuild build_rate_quality_table(const ModelParams<float>& model, const std::vector<ImageTensor>& val,
                                    const std::vector<double>& snr_grid_db, const TableOptions& options) {
  if (val.empty()) throw Error(ErrorCode::kEmptyValidationSet, "no validation images");
  if (snr_grid_db.empty()) throw Error(ErrorCode::kEmptyTable, "empty SNR grid");
  TableBuild build;
  RateQualityTable& t = build.table;
  t.metric = options.metric;
  t.model_version = model_fingerprint(model);
  t.seed = options.seed;
  t.layers = model.config.layers;
  t.snr_grid_db = snr_grid_db;
  std::sort(t.snr_grid_db.begin(), t.snr_grid_db.end());

  EvalOptions eval;
  eval.model = options.channel;
  eval.seed = options.seed;
  eval.with_ms_ssim = options.metric == QualityMetric::kMsSsim;
  for (double snr : t.snr_grid_db) {
    auto& row = t.quality.emplace_back();
    for (int l = 1; l <= t.layers; ++l) {
      const QualityReport r = evaluate_model(model, val, snr, l, eval);
      row.push_back(options.metric == QualityMetric::kPsnr ? r.psnr_db : r.ms_ssim);
    }
  }
  build.warnings = t.violations();
  return build;
}

BandwidthDecision decide_bandwidth(const RateQualityTable& table, const ChannelState& csi, const RtpSpec& rtp) {
  if (table.empty()) throw Error(ErrorCode::kEmptyTable, "rate-quality table is empty");
  if (rtp.metric != table.metric) {
    throw Error(ErrorCode::kBadParams, "rtp metric " + to_string(rtp.metric) + " but table holds " +
                                           to_string(table.metric));
  }
  BandwidthDecision d;
  d.bin = table.bin_for(csi.snr_db);
  for (int l = 1; l <= table.layers; ++l) {
    if (table.at(d.bin, l) >= rtp.target) {
      d.l = l;
      d.achievable = true;
      d.expected_quality = table.at(d.bin, l);
      return d;
    }
  }
  d.l = table.layers;
  d.expected_quality = table.at(d.bin, d.l);
  return d;
}

std::string table_to_json(const RateQualityTable& table, const std::string& config_snapshot) {
  table.validate();
  ordered_json j;
  j["schema_version"] = RateQualityTable::kSchemaVersion;
  j["metric"] = to_string(table.metric);
  j["model_version"] = table.model_version;
  j["seed"] = table.seed;
  j["layers"] = table.layers;
  ordered_json grid = ordered_json::array();
  for (double g : table.snr_grid_db) grid.push_back(encode_real(g));
  j["grid"] = grid;
  ordered_json entries = ordered_json::array();
  for (std::size_t b = 0; b < table.snr_grid_db.size(); ++b) {
    for (int l = 1; l <= table.layers; ++l) {
      entries.push_back({{"snr_db", encode_real(table.snr_grid_db[b])}, {"l", l}, {"quality", encode_real(table.at(b, l))}});
    }
  }
  j["entries"] = entries;
  j["version"] = version_string();
  j["config"] = config_snapshot;
  return j.dump(2) + "\n";
}

RateQualityTable table_from_json(const std::string& text) {
  RateQualityTable t;
  try {
    const auto j = ordered_json::parse(text);
    if (j.at("schema_version").get<int>() != RateQualityTable::kSchemaVersion) {
      throw Error(ErrorCode::kBadParams, "unsupported table schema_version");
    }
    t.metric = parse_quality_metric(j.at("metric").get<std::string>());
    t.model_version = j.value("model_version", "");
    t.seed = j.value("seed", std::uint64_t{0});
    t.layers = j.at("layers").get<int>();
    for (const auto& g : j.at("grid")) t.snr_grid_db.push_back(decode_real(g));
    if (t.layers < 1) throw Error(ErrorCode::kEmptyTable, "table has no layers");
    t.quality.assign(t.snr_grid_db.size(), std::vector<double>(static_cast<std::size_t>(t.layers),
                                                               std::numeric_limits<double>::quiet_NaN()));
    for (const auto& e : j.at("entries")) {
      const double snr = decode_real(e.at("snr_db"));
      const int l = e.at("l").get<int>();
      const auto it = std::find(t.snr_grid_db.begin(), t.snr_grid_db.end(), snr);
      if (it == t.snr_grid_db.end() || l < 1 || l > t.layers) throw Error(ErrorCode::kBadParams, "entry off the grid");
      t.quality[static_cast<std::size_t>(it - t.snr_grid_db.begin())][static_cast<std::size_t>(l - 1)] =
          decode_real(e.at("quality"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadParams, std::string("malformed table: ") + e.what());
  }
  t.validate();
  for (const auto& row : t.quality) {
    for (double q : row) {
      if (std::isnan(q)) throw Error(ErrorCode::kBadParams, "table is missing a (bin, l) entry");
    }
  }
  return t;
}

void save_table(const std::filesystem::path& path, const RateQualityTable& table, const std::string& config_snapshot) {
  const std::string text = table_to_json(table, config_snapshot);
  write_file_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

RateQualityTable load_table(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return table_from_json(std::string(bytes.begin(), bytes.end()));
}

}  // namespace djscc
