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

#ifndef DJSCC_ADAPTATION_HPP_
#define DJSCC_ADAPTATION_HPP_

// Measured rate-quality table over (SNR bin, layer count) and the decision
// rule that picks the fewest layers meeting a quality target.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "djscc/channel.hpp"
#include "djscc/codec.hpp"
#include "djscc/image.hpp"

namespace djscc {

enum class QualityMetric { kPsnr, kMsSsim };

QualityMetric parse_quality_metric(std::string_view name);
std::string to_string(QualityMetric metric);

struct RtpSpec {
  QualityMetric metric = QualityMetric::kPsnr;
  double target = 0.0;

  static RtpSpec parse(std::string_view text);  // "psnr:25" or "ms_ssim:0.9"
  void validate() const;
};

struct MonotonicityViolation {
  std::size_t bin = 0;
  int l = 0;         // quality(l) < quality(l-1) - tolerance
  double drop = 0.0;
};

struct RateQualityTable {
  static constexpr int kSchemaVersion = 1;

  QualityMetric metric = QualityMetric::kPsnr;
  std::string model_version;
  std::uint64_t seed = 0;
  int layers = 0;
  // Bin centers in dB, ascending; each bin spans the midpoints to its
  // neighbours. A +inf entry is the noise-free bin.
  std::vector<double> snr_grid_db;
  // quality[bin][l - 1]
  std::vector<std::vector<double>> quality;

  bool empty() const { return snr_grid_db.empty() || layers < 1; }
  double at(std::size_t bin, int l) const { return quality.at(bin).at(static_cast<std::size_t>(l - 1)); }
  // Nearest bin center; values outside the grid clamp to the edge bins.
  std::size_t bin_for(double snr_db) const;
  // Default tolerance: 0.1 dB for PSNR, 1e-3 for MS-SSIM.
  std::vector<MonotonicityViolation> violations(double tolerance = -1.0) const;
  void validate() const;
};

struct TableBuild {
  RateQualityTable table;
  std::vector<MonotonicityViolation> warnings;
};

struct TableOptions {
  QualityMetric metric = QualityMetric::kPsnr;
  ChannelModel channel = ChannelModel::kAwgn;
  std::uint64_t seed = 0;
};

// Evaluates every (snr, l) cell on `val` with seeded noise.
TableBuild build_rate_quality_table(const ModelParams<float>& model, const std::vector<ImageTensor>& val,
                                    const std::vector<double>& snr_grid_db, const TableOptions& options = {});

struct BandwidthDecision {
  int l = 0;
  bool achievable = false;
  std::size_t bin = 0;
  double expected_quality = 0.0;
};

BandwidthDecision decide_bandwidth(const RateQualityTable& table, const ChannelState& csi, const RtpSpec& rtp);

// Versioned JSON document: schema_version, metric, grid, entries, plus
// provenance fields (model_version, seed, layers, version, config).
std::string table_to_json(const RateQualityTable& table, const std::string& config_snapshot = {});
RateQualityTable table_from_json(const std::string& text);
void save_table(const std::filesystem::path& path, const RateQualityTable& table,
                const std::string& config_snapshot = {});
RateQualityTable load_table(const std::filesystem::path& path);

}  // namespace djscc

#endif  // DJSCC_ADAPTATION_HPP_
