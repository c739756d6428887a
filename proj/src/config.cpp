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

#include "djscc/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "djscc/common.hpp"

namespace djscc {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

}  // namespace

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size()) throw Error(ErrorCode::kBadConfig, "not a number: '" + text + "'");
  return v;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) {
    if (!part.empty()) out.push_back(parse_double(part));
  }
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_doubles(text)) {
    if (v != std::floor(v)) throw Error(ErrorCode::kBadConfig, "not an integer list: '" + text + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_doubles(text);
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw Error(ErrorCode::kBadConfig, "grid must be low:high:step, got '" + text + "'");
  const double low = parse_double(parts[0]);
  const double high = parse_double(parts[1]);
  const double step = parse_double(parts[2]);
  if (!(step > 0) || !(high >= low)) throw Error(ErrorCode::kBadConfig, "bad grid '" + text + "'");
  std::vector<double> out;
  const auto count = static_cast<long long>(std::floor((high - low) / step + 1e-9));
  for (long long i = 0; i <= count; ++i) out.push_back(low + static_cast<double>(i) * step);
  return out;
}

Config Config::parse(const std::string& text) {
  Config config;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kBadConfig, "line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::kBadConfig, "line " + std::to_string(number) + ": empty key");
    config.values_[key] = trim(t.substr(eq + 1));
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingPath, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::kBadConfig, "missing key " + key);
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(get(key)) : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const double v = parse_double(get(key));
  if (v != std::floor(v) || !std::isfinite(v)) throw Error(ErrorCode::kBadConfig, key + " must be an integer");
  return static_cast<long long>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kBadConfig, key + " must be a boolean");
}

std::vector<double> Config::get_doubles(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? parse_grid(get(key)) : fallback;
}

std::vector<int> Config::get_ints(const std::string& key, std::vector<int> fallback) const {
  return has(key) ? parse_ints(get(key)) : fallback;
}

std::pair<double, double> Config::get_range(const std::string& key, std::pair<double, double> fallback) const {
  if (!has(key)) return fallback;
  const auto parts = split(get(key), ':');
  if (parts.size() != 2) throw Error(ErrorCode::kBadConfig, key + " must be low:high");
  const std::pair<double, double> r{parse_double(parts[0]), parse_double(parts[1])};
  if (r.first > r.second) throw Error(ErrorCode::kBadConfig, key + ": low > high");
  return r;
}

std::string Config::snapshot() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

DataConfig data_config(const Config& config) {
  DataConfig d;
  if (const char* env = std::getenv("DJL_DATA"); env != nullptr && *env != '\0') {
    d.path = env;
  } else {
    d.path = config.get_string("data.path", "");
  }
  if (config.has("data.shape")) d.shape = parse_shape(config.get("data.shape"));
  const auto fractions = config.get_doubles("data.split", {0.8, 0.1, 0.1});
  if (fractions.size() != 3) throw Error(ErrorCode::kBadConfig, "data.split needs train,val,test fractions");
  d.train_fraction = fractions[0];
  d.val_fraction = fractions[1];
  d.test_fraction = fractions[2];
  d.seed = static_cast<std::uint64_t>(config.get_int("data.seed", 1));
  if (config.has("data.limit")) d.limit = static_cast<std::size_t>(config.get_int("data.limit", 0));
  return d;
}

ChannelConfig channel_config(const Config& config) {
  ChannelConfig c;
  if (config.has("channel.model")) c.model = parse_channel_model(config.get("channel.model"));
  c.snr_db = config.get_doubles("channel.snr_db", c.snr_db);
  c.seed = static_cast<std::uint64_t>(config.get_int("channel.seed", 1));
  return c;
}

CodecConfig codec_config(const Config& config) {
  const ImageShape shape = config.has("data.shape") ? parse_shape(config.get("data.shape")) : ImageShape{32, 32, 3};
  const int k = static_cast<int>(config.get_int("codec.k", 256));
  const int layers = static_cast<int>(config.get_int("codec.layers", 1));
  const int kernel = static_cast<int>(config.get_int("codec.kernel", 3));
  const Conditioning cond = parse_conditioning(config.get_string("codec.conditioning", "none"));
  const auto widths = config.get_ints("codec.widths", {16, 32, 32, 32});
  CodecConfig c = CodecConfig::make(shape, k, layers, cond, widths, kernel);
  std::tie(c.snr_low_db, c.snr_high_db) = config.get_range("codec.snr_range_db", {c.snr_low_db, c.snr_high_db});
  c.validate();
  return c;
}

TrainConfig train_config(const Config& config) {
  TrainConfig t;
  std::tie(t.snr_low_db, t.snr_high_db) = config.get_range("train.snr_range_db", {t.snr_low_db, t.snr_high_db});
  t.epochs = static_cast<int>(config.get_int("train.epochs", t.epochs));
  t.batch_size = static_cast<int>(config.get_int("train.batch_size", t.batch_size));
  t.learning_rate = config.get_double("train.learning_rate", t.learning_rate);
  t.loss = config.get_string("train.loss", t.loss);
  t.seed = static_cast<std::uint64_t>(config.get_int("train.seed", static_cast<long long>(t.seed)));
  t.randomize_layers = config.get_bool("train.randomize_layers", t.randomize_layers);
  t.probe_snr_db = config.get_doubles("train.probe_snr_db", t.probe_snr_db);
  t.val_limit = static_cast<std::size_t>(config.get_int("train.val_limit", 0));
  t.record_wallclock = config.get_bool("train.record_wallclock", t.record_wallclock);
  if (config.has("train.checkpoint_path")) t.checkpoint_path = config.get("train.checkpoint_path");
  if (config.has("train.log_path")) t.log_path = config.get("train.log_path");
  t.validate();
  return t;
}

DatasetSplit load_split(const DataConfig& data) {
  if (data.path.empty()) throw Error(ErrorCode::kMissingPath, "data.path not set (and DJL_DATA unset)");
  return make_split(load_images(data.path, data.limit, data.shape), data.train_fraction, data.val_fraction,
                    data.test_fraction, data.seed);
}

}  // namespace djscc
