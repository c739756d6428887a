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

#include "djscc/codec.hpp"

#include <fstream>
#include <iterator>

#include "djscc/binary_io.hpp"

namespace djscc {

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingPath, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kDiskWriteFailure, path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kDiskWriteFailure, path.string());
}

Conditioning parse_conditioning(std::string_view name) {
  if (name == "none") return Conditioning::kNone;
  if (name == "snr") return Conditioning::kSnr;
  throw Error(ErrorCode::kBadConfig, "unknown conditioning '" + std::string(name) + "'");
}

std::string to_string(Conditioning c) { return c == Conditioning::kNone ? "none" : "snr"; }

CodecConfig CodecConfig::make(const ImageShape& shape, int k, int layers, Conditioning conditioning,
                              std::vector<int> hidden_widths, int kernel) {
  CodecConfig c;
  c.shape = shape;
  c.k = k;
  c.layers = layers;
  c.kernel = kernel;
  c.conditioning = conditioning;
  if (hidden_widths.size() != 4) throw Error(ErrorCode::kBadConfig, "expected four hidden FL widths");
  const int latent_positions = (shape.height / 4) * (shape.width / 4);
  if (latent_positions <= 0 || (2 * k) % latent_positions != 0) {
    throw Error(ErrorCode::kBadConfig, "2k must be a multiple of (h/4)*(w/4)");
  }
  hidden_widths.push_back(2 * k / latent_positions);
  c.fl_widths = std::move(hidden_widths);
  c.validate();
  return c;
}

void CodecConfig::validate() const {
  if (shape.height % 4 != 0 || shape.width % 4 != 0) throw Error(ErrorCode::kBadConfig, "image sides must be multiples of 4");
  if (layers < 1) throw Error(ErrorCode::kBadConfig, "L must be >= 1");
  if (k < 1 || k % layers != 0) throw Error(ErrorCode::kBadConfig, "k must be a positive multiple of L");
  if (kernel < 1 || kernel % 2 == 0) throw Error(ErrorCode::kBadConfig, "kernel must be odd");
  if (fl_widths.size() != 5) throw Error(ErrorCode::kBadConfig, "expected five FL widths");
  for (int w : fl_widths) {
    if (w < 1) throw Error(ErrorCode::kBadConfig, "FL widths must be positive");
  }
  if (fl_widths.back() * latent_height() * latent_width() != 2 * k) {
    throw Error(ErrorCode::kBadConfig, "last FL width inconsistent with k");
  }
  if (!(snr_high_db >= snr_low_db)) throw Error(ErrorCode::kBadConfig, "bad SNR adaptation range");
}

double CodecConfig::normalized_snr(double snr_db) const {
  if (snr_high_db == snr_low_db) return snr_db >= snr_high_db ? 1.0 : 0.0;
  return std::clamp((snr_db - snr_low_db) / (snr_high_db - snr_low_db), 0.0, 1.0);
}

std::vector<unsigned char> serialize_checkpoint(const ModelParams<float>& model) {
  const CodecConfig& c = model.config;
  ByteWriter w;
  w.put_raw("DJC1");
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(c.shape.height));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(c.shape.width));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.shape.channels));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.k));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(c.layers));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.kernel));
  w.put<std::uint8_t>(c.conditioning == Conditioning::kSnr ? 1 : 0);
  w.put_f64(c.snr_low_db);
  w.put_f64(c.snr_high_db);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.fl_widths.size()));
  for (int width : c.fl_widths) w.put<std::uint16_t>(static_cast<std::uint16_t>(width));
  w.put_string(model.version_tag);
  w.put_f64(model.metadata.snr_train_low_db);
  w.put_f64(model.metadata.snr_train_high_db);
  w.put<std::uint64_t>(model.metadata.seed);
  w.put<std::uint32_t>(model.metadata.epochs_completed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.tensors.size()));
  for (const auto& e : model.tensors.entries()) {
    w.put_string(e.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.value.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.value.cols()));
    for (Eigen::Index i = 0; i < e.value.size(); ++i) w.put_f32(e.value.data()[i]);
  }
  return w.bytes();
}

ModelParams<float> deserialize_checkpoint(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes, ErrorCode::kCheckpointVersionMismatch);
  if (r.get_raw(4) != "DJC1") throw Error(ErrorCode::kCheckpointVersionMismatch, "not a DJC1 checkpoint");
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kCheckpointVersionMismatch, "unsupported checkpoint version " + std::to_string(version));
  }
  ModelParams<float> model;
  CodecConfig& c = model.config;
  c.shape.height = r.get<std::uint16_t>();
  c.shape.width = r.get<std::uint16_t>();
  c.shape.channels = r.get<std::uint8_t>();
  c.k = static_cast<int>(r.get<std::uint32_t>());
  c.layers = r.get<std::uint16_t>();
  c.kernel = r.get<std::uint8_t>();
  c.conditioning = r.get<std::uint8_t>() ? Conditioning::kSnr : Conditioning::kNone;
  c.snr_low_db = r.get_f64();
  c.snr_high_db = r.get_f64();
  c.fl_widths.resize(r.get<std::uint8_t>());
  for (int& width : c.fl_widths) width = r.get<std::uint16_t>();
  c.validate();
  model.version_tag = r.get_string();
  model.metadata.snr_train_low_db = r.get_f64();
  model.metadata.snr_train_high_db = r.get_f64();
  model.metadata.seed = r.get<std::uint64_t>();
  model.metadata.epochs_completed = r.get<std::uint32_t>();

  model.tensors = Network<float>::skeleton(c);
  const auto count = r.get<std::uint32_t>();
  if (count != model.tensors.size()) throw Error(ErrorCode::kCheckpointVersionMismatch, "tensor count mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = r.get_string();
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    Matrix<float>& t = model.tensors[i];
    if (name != model.tensors.name(i) || rows != t.rows() || cols != t.cols()) {
      throw Error(ErrorCode::kCheckpointVersionMismatch, "unexpected tensor " + name);
    }
    for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] = r.get_f32();
  }
  if (!r.done()) throw Error(ErrorCode::kCheckpointVersionMismatch, "trailing bytes in checkpoint");
  if (!model.tensors.all_finite()) throw Error(ErrorCode::kNonFiniteActivation, "checkpoint has non-finite weights");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& model) {
  write_file_bytes(path, serialize_checkpoint(model));
}

ModelParams<float> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

}  // namespace djscc
