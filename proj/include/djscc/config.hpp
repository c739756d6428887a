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

#ifndef DJSCC_CONFIG_HPP_
#define DJSCC_CONFIG_HPP_

// Flat "key = value" configuration files. Lines starting with '#' are
// comments; lists are comma separated; ranges are "low:high".

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "djscc/channel.hpp"
#include "djscc/codec.hpp"
#include "djscc/image.hpp"
#include "djscc/training.hpp"

namespace djscc {

class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::string& get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<int> get_ints(const std::string& key, std::vector<int> fallback) const;
  std::pair<double, double> get_range(const std::string& key, std::pair<double, double> fallback) const;

  // Sorted "key = value" lines; embedded in output files.
  std::string snapshot() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Scalar parsers shared with the command line. "inf" is accepted as the
// noise-free SNR sentinel.
double parse_double(const std::string& text);
std::vector<double> parse_doubles(const std::string& text);
std::vector<int> parse_ints(const std::string& text);
// "a:b" or "a:b:step" expanded inclusively when a step is given.
std::vector<double> parse_grid(const std::string& text);

struct DataConfig {
  std::filesystem::path path;
  ImageShape shape{32, 32, 3};
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 1;
  std::optional<std::size_t> limit;
};

struct ChannelConfig {
  ChannelModel model = ChannelModel::kAwgn;
  std::vector<double> snr_db = {10.0};
  std::uint64_t seed = 1;
};

// data.path falls back to the DJL_DATA environment variable, which takes
// precedence when set.
DataConfig data_config(const Config& config);
ChannelConfig channel_config(const Config& config);
CodecConfig codec_config(const Config& config);
TrainConfig train_config(const Config& config);

DatasetSplit load_split(const DataConfig& data);

}  // namespace djscc

#endif  // DJSCC_CONFIG_HPP_
