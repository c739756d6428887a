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

#ifndef DJSCC_CODEC_HPP_
#define DJSCC_CODEC_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "djscc/channel.hpp"
#include "djscc/common.hpp"
#include "djscc/image.hpp"
#include "djscc/nn.hpp"

namespace djscc {

enum class Conditioning { kNone, kSnr };

Conditioning parse_conditioning(std::string_view name);
std::string to_string(Conditioning c);

struct CodecConfig {
  ImageShape shape;
  int k = 256;       // complex channel symbols per image
  int layers = 1;    // L, prefix-decodable layers
  int kernel = 3;
  // Encoder stage widths; the last entry is 2k / (h/4 * w/4).
  std::vector<int> fl_widths = {16, 32, 32, 32, 8};
  Conditioning conditioning = Conditioning::kNone;
  // SNR span mapped onto [0,1] for the attention context.
  double snr_low_db = 0.0;
  double snr_high_db = 20.0;

  int n() const { return shape.size(); }
  double rho() const { return static_cast<double>(k) / n(); }
  int latent_channels() const { return fl_widths.back(); }
  int latent_height() const { return shape.height / 4; }
  int latent_width() const { return shape.width / 4; }
  int real_dim() const { return 2 * k; }
  int layer_real_dim() const { return 2 * k / layers; }

  // Fills fl_widths.back() from k and validates everything.
  static CodecConfig make(const ImageShape& shape, int k, int layers, Conditioning conditioning,
                          std::vector<int> hidden_widths = {16, 32, 32, 32}, int kernel = 3);
  void validate() const;
  double normalized_snr(double snr_db) const;

  friend bool operator==(const CodecConfig&, const CodecConfig&) = default;
};

struct TrainingMetadata {
  double snr_train_low_db = 0.0;
  double snr_train_high_db = 0.0;
  std::uint64_t seed = 0;
  std::uint32_t epochs_completed = 0;
};

template <typename Scalar>
struct ModelParams {
  CodecConfig config;
  ParameterSet<Scalar> tensors;
  std::string version_tag = "djscc-1";
  TrainingMetadata metadata;

  template <typename To>
  ModelParams<To> cast() const {
    return {config, tensors.template cast<To>(), version_tag, metadata};
  }
};

// Encoder: five FL stages (stride 2 at the first two), PReLU after all but the
// last, an AF stage after each when conditioned. Decoder mirrors it with
// transposed convolutions and ends in a logistic output.
template <typename Scalar>
class Network {
 public:
  Network(const CodecConfig& config, ParameterSet<Scalar>& params) : config_(config) {
    config.validate();
    const auto& w = config.fl_widths;
    const bool af = config.conditioning == Conditioning::kSnr;
    int in = config.shape.channels;
    for (int i = 0; i < 5; ++i) {
      const std::string name = "enc" + std::to_string(i);
      enc_conv_.emplace_back(params, name + ".conv", in, w[i], config.kernel, i < 2 ? 2 : 1);
      if (i < 4) enc_act_.emplace_back(params, name + ".act", w[i]);
      if (af) enc_af_.emplace_back(params, name + ".af", w[i]);
      in = w[i];
    }
    in = config.latent_channels() + flag_planes();
    const std::vector<int> out = {w[3], w[2], w[1], w[0], config.shape.channels};
    for (int i = 0; i < 5; ++i) {
      const std::string name = "dec" + std::to_string(i);
      dec_conv_.emplace_back(params, name + ".conv", in, out[i], config.kernel, i >= 3 ? 2 : 1);
      if (i < 4) {
        dec_act_.emplace_back(params, name + ".act", out[i]);
        if (af) dec_af_.emplace_back(params, name + ".af", out[i]);
      }
      in = out[i];
    }
  }

  static ParameterSet<Scalar> skeleton(const CodecConfig& config) {
    ParameterSet<Scalar> params;
    Network net(config, params);
    return params;
  }

  void init(ParameterSet<Scalar>& params, std::uint64_t seed) const {
    auto rng = make_stream(seed, Stream::kInit);
    for (const auto& c : enc_conv_) c.init(params, rng);
    for (const auto& a : enc_act_) a.init(params);
    for (const auto& f : enc_af_) f.init(params, rng);
    for (const auto& c : dec_conv_) c.init(params, rng);
    for (const auto& a : dec_act_) a.init(params);
    for (const auto& f : dec_af_) f.init(params, rng);
  }

  int flag_planes() const { return config_.layers > 1 ? config_.layers : 0; }

  // Returns the raw latent, (2k, batch), before power normalization.
  Matrix<Scalar> encode_latent(const ParameterSet<Scalar>& params, const FeatureMap<Scalar>& images,
                               const Vector<Scalar>& snr_normalized) {
    FeatureMap<Scalar> x = images;
    for (std::size_t i = 0; i < enc_conv_.size(); ++i) {
      x = enc_conv_[i].forward(params, x);
      if (i < enc_act_.size()) x.data = enc_act_[i].forward(params, x.data);
      if (!enc_af_.empty()) x = enc_af_[i].forward(params, x, snr_normalized);
    }
    return feature_to_latent(x);
  }

  void backward_encoder(const ParameterSet<Scalar>& params, ParameterSet<Scalar>& grads,
                        const Matrix<Scalar>& dlatent) {
    FeatureMap<Scalar> dx = latent_to_feature(dlatent);
    for (std::size_t i = enc_conv_.size(); i-- > 0;) {
      if (!enc_af_.empty()) dx = enc_af_[i].backward(params, grads, dx);
      if (i < enc_act_.size()) dx.data = enc_act_[i].backward(params, grads, dx.data);
      dx = enc_conv_[i].backward(params, grads, dx);
    }
  }

  // latent: received reals (2k, batch) with unavailable layers zeroed;
  // flags: (L, batch) availability. Returns logistic output (C, batch*h*w).
  FeatureMap<Scalar> decode_image(const ParameterSet<Scalar>& params, const Matrix<Scalar>& latent,
                                  const Matrix<Scalar>& flags, const Vector<Scalar>& snr_normalized) {
    FeatureMap<Scalar> x = latent_to_feature(latent);
    if (flag_planes() > 0) {
      const int hw = x.pixels();
      Matrix<Scalar> stacked(x.channels() + flag_planes(), x.data.cols());
      stacked.topRows(x.channels()) = x.data;
      for (int b = 0; b < x.batch; ++b) {
        stacked.bottomRows(flag_planes()).middleCols(static_cast<Eigen::Index>(b) * hw, hw).colwise() = flags.col(b);
      }
      x.data = std::move(stacked);
    }
    for (std::size_t i = 0; i < dec_conv_.size(); ++i) {
      x = dec_conv_[i].forward(params, x);
      if (i < dec_act_.size()) {
        x.data = dec_act_[i].forward(params, x.data);
        if (!dec_af_.empty()) x = dec_af_[i].forward(params, x, snr_normalized);
      }
    }
    x.data = (Scalar(1) / (Scalar(1) + (-x.data.array()).exp())).matrix();
    output_ = x.data;
    return x;
  }

  // d_output is the gradient w.r.t. the logistic output.
  Matrix<Scalar> backward_decoder(const ParameterSet<Scalar>& params, ParameterSet<Scalar>& grads,
                                  const FeatureMap<Scalar>& d_output) {
    FeatureMap<Scalar> dx = d_output;
    dx.data = (d_output.data.array() * output_.array() * (Scalar(1) - output_.array())).matrix();
    for (std::size_t i = dec_conv_.size(); i-- > 0;) {
      if (i < dec_act_.size()) {
        if (!dec_af_.empty()) dx = dec_af_[i].backward(params, grads, dx);
        dx.data = dec_act_[i].backward(params, grads, dx.data);
      }
      dx = dec_conv_[i].backward(params, grads, dx);
    }
    dx.data.conservativeResize(config_.latent_channels(), Eigen::NoChange);
    return feature_to_latent(dx);
  }

  const std::vector<AttentionFeature<Scalar>>& encoder_attention() const { return enc_af_; }
  const std::vector<AttentionFeature<Scalar>>& decoder_attention() const { return dec_af_; }

  // Per image, latent index = channel * (h/4 * w/4) + position.
  Matrix<Scalar> feature_to_latent(const FeatureMap<Scalar>& x) const {
    const int hw = x.pixels();
    Matrix<Scalar> latent(static_cast<Eigen::Index>(x.channels()) * hw, x.batch);
    for (int b = 0; b < x.batch; ++b) {
      latent.col(b) = x.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw).transpose().reshaped();
    }
    return latent;
  }

  FeatureMap<Scalar> latent_to_feature(const Matrix<Scalar>& latent) const {
    const int c = config_.latent_channels();
    const int h = config_.latent_height();
    const int w = config_.latent_width();
    const int batch = static_cast<int>(latent.cols());
    FeatureMap<Scalar> x{Matrix<Scalar>(c, static_cast<Eigen::Index>(batch) * h * w), batch, h, w};
    for (int b = 0; b < batch; ++b) {
      x.data.middleCols(static_cast<Eigen::Index>(b) * h * w, h * w) = latent.col(b).reshaped(h * w, c).transpose();
    }
    return x;
  }

 private:
  CodecConfig config_;
  std::vector<Conv2d<Scalar>> enc_conv_;
  std::vector<PRelu<Scalar>> enc_act_;
  std::vector<AttentionFeature<Scalar>> enc_af_;
  std::vector<ConvTranspose2d<Scalar>> dec_conv_;
  std::vector<PRelu<Scalar>> dec_act_;
  std::vector<AttentionFeature<Scalar>> dec_af_;
  Matrix<Scalar> output_;
};

// Throws BadParams unless `params` has exactly the names and shapes of `layout`.
template <typename Scalar>
void check_layout(const ParameterSet<Scalar>& layout, const ParameterSet<Scalar>& params) {
  if (layout.size() != params.size()) throw Error(ErrorCode::kBadParams, "parameter count does not match codec config");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout.name(i) != params.name(i) || layout[i].rows() != params[i].rows() || layout[i].cols() != params[i].cols()) {
      throw Error(ErrorCode::kBadParams, "parameter " + params.name(i) + " does not match codec config");
    }
  }
}

template <typename Scalar>
ModelParams<Scalar> init_model(const CodecConfig& config, std::uint64_t seed) {
  ModelParams<Scalar> model{config, {}, "djscc-1", {}};
  Network<Scalar> net(config, model.tensors);
  net.init(model.tensors, seed);
  model.metadata.seed = seed;
  return model;
}

// ---------------------------------------------------------------------------
// Latent bookkeeping.

template <typename Scalar>
struct LatentLayers {
  std::vector<Vector<Scalar>> layers;  // importance-descending, each 2k/L reals
  std::vector<int> available;          // 1 if the layer was received

  Eigen::Index real_dim() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.size();
    return n;
  }
  Vector<Scalar> flatten() const {
    Vector<Scalar> v(real_dim());
    Eigen::Index off = 0;
    for (const auto& l : layers) {
      v.segment(off, l.size()) = l;
      off += l.size();
    }
    return v;
  }
};

template <typename Scalar>
LatentLayers<Scalar> split_layers(const Vector<Scalar>& flat, int layer_count) {
  if (layer_count < 1 || flat.size() % layer_count != 0) {
    throw Error(ErrorCode::kLayerOutOfRange, "latent length not divisible by layer count");
  }
  const Eigen::Index chunk = flat.size() / layer_count;
  LatentLayers<Scalar> out;
  for (int i = 0; i < layer_count; ++i) out.layers.push_back(flat.segment(i * chunk, chunk));
  out.available.assign(layer_count, 1);
  return out;
}

template <typename Scalar>
LatentLayers<Scalar> prefix_mask(const LatentLayers<Scalar>& latent, int l) {
  const int total = static_cast<int>(latent.layers.size());
  if (l < 1 || l > total) {
    throw Error(ErrorCode::kLayerOutOfRange, "l=" + std::to_string(l) + " outside [1," + std::to_string(total) + "]");
  }
  LatentLayers<Scalar> out = latent;
  for (int i = 0; i < total; ++i) {
    out.available[i] = i < l ? 1 : 0;
    if (i >= l) out.layers[i].setZero();
  }
  return out;
}

// (r0, r1, r2, r3, ...) -> (r0 + i r1, r2 + i r3, ...)
template <typename Scalar>
ComplexVector<Scalar> pack_complex(const Vector<Scalar>& real) {
  if (real.size() % 2 != 0) throw Error(ErrorCode::kOddLength, "cannot pack an odd-length vector");
  ComplexVector<Scalar> z(real.size() / 2);
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = {real[2 * j], real[2 * j + 1]};
  return z;
}

template <typename Scalar>
Vector<Scalar> unpack_complex(const ComplexVector<Scalar>& z) {
  Vector<Scalar> real(2 * z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    real[2 * j] = z[j].real();
    real[2 * j + 1] = z[j].imag();
  }
  return real;
}

// Normalizes every layer chunk of every column to average power P per complex
// symbol, so any prefix meets the power constraint exactly. Energies are
// accumulated in double.
template <typename Scalar>
struct LayerNormalization {
  Matrix<Scalar> output;
  Matrix<double> norms;  // (L, batch)
};

template <typename Scalar>
LayerNormalization<Scalar> normalize_layers(const Matrix<Scalar>& raw, int layer_count, double power) {
  const Eigen::Index chunk = raw.rows() / layer_count;
  const double target = std::sqrt(static_cast<double>(chunk / 2) * power);
  LayerNormalization<Scalar> out{raw, Matrix<double>(layer_count, raw.cols())};
  for (Eigen::Index b = 0; b < raw.cols(); ++b) {
    for (int l = 0; l < layer_count; ++l) {
      auto seg = out.output.col(b).segment(l * chunk, chunk);
      const double norm = std::sqrt(seg.template cast<double>().squaredNorm());
      if (!(norm > 0.0)) throw Error(ErrorCode::kZeroVector, "encoder produced an all-zero layer");
      out.norms(l, b) = norm;
      seg = (seg.template cast<double>() * (target / norm)).template cast<Scalar>();
    }
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> normalize_layers_backward(const LayerNormalization<Scalar>& fwd, const Matrix<Scalar>& d_out,
                                         double power) {
  const int layer_count = static_cast<int>(fwd.norms.rows());
  const Eigen::Index chunk = fwd.output.rows() / layer_count;
  const double target_sq = static_cast<double>(chunk / 2) * power;
  const double target = std::sqrt(target_sq);
  Matrix<Scalar> d_raw(d_out.rows(), d_out.cols());
  for (Eigen::Index b = 0; b < d_out.cols(); ++b) {
    for (int l = 0; l < layer_count; ++l) {
      const auto z = fwd.output.col(b).segment(l * chunk, chunk).template cast<double>();
      const auto dz = d_out.col(b).segment(l * chunk, chunk).template cast<double>();
      const double proj = z.dot(dz) / target_sq;
      d_raw.col(b).segment(l * chunk, chunk) = ((target / fwd.norms(l, b)) * (dz - proj * z)).template cast<Scalar>();
    }
  }
  return d_raw;
}

template <typename Scalar>
FeatureMap<Scalar> images_to_features(const std::vector<const ImageTensor*>& images) {
  const ImageShape shape = images.front()->shape;
  const int hw = shape.height * shape.width;
  FeatureMap<Scalar> x{Matrix<Scalar>(shape.channels, static_cast<Eigen::Index>(images.size()) * hw),
                       static_cast<int>(images.size()), shape.height, shape.width};
  for (std::size_t b = 0; b < images.size(); ++b) {
    x.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw) =
        images[b]->pixels.matrix().reshaped(shape.channels, hw).template cast<Scalar>();
  }
  return x;
}

template <typename Scalar>
ImageTensor feature_to_image(const FeatureMap<Scalar>& x, int b, const std::string& id) {
  const int hw = x.pixels();
  ImageTensor img = make_image(id, {x.height, x.width, x.channels()});
  img.pixels = x.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw)
                   .reshaped()
                   .array()
                   .template cast<float>()
                   .max(0.0f)
                   .min(1.0f);
  return img;
}

template <typename Scalar>
struct EncodeResult {
  LatentLayers<Scalar> latent;  // after per-layer power normalization
  ChannelSymbolBlock<Scalar> block;
};

template <typename Scalar>
void check_shape(const ImageTensor& x, const CodecConfig& config) {
  if (!(x.shape == config.shape)) {
    throw Error(ErrorCode::kShapeMismatch, x.id + " is " + to_string(x.shape) + ", codec expects " +
                                               to_string(config.shape));
  }
}

template <typename Scalar>
std::vector<EncodeResult<Scalar>> encode_batch(const std::vector<const ImageTensor*>& images, const ChannelState& csi,
                                               const ModelParams<Scalar>& params) {
  const CodecConfig& config = params.config;
  for (const auto* x : images) check_shape<Scalar>(*x, config);
  ParameterSet<Scalar> layout;
  Network<Scalar> net(config, layout);
  check_layout(layout, params.tensors);
  const Vector<Scalar> snr =
      Vector<Scalar>::Constant(static_cast<Eigen::Index>(images.size()), static_cast<Scalar>(config.normalized_snr(csi.snr_db)));
  const Matrix<Scalar> raw = net.encode_latent(params.tensors, images_to_features<Scalar>(images), snr);
  if (!raw.allFinite()) throw Error(ErrorCode::kNonFiniteActivation, "encoder output is not finite");
  const auto norm = normalize_layers(raw, config.layers, 1.0);
  std::vector<EncodeResult<Scalar>> out;
  for (Eigen::Index b = 0; b < norm.output.cols(); ++b) {
    const Vector<Scalar> flat = norm.output.col(b);
    out.push_back({split_layers(flat, config.layers), {pack_complex(flat), Scalar(1)}});
  }
  return out;
}

template <typename Scalar>
EncodeResult<Scalar> encode(const ImageTensor& x, const ChannelState& csi, const ModelParams<Scalar>& params) {
  return std::move(encode_batch<Scalar>({&x}, csi, params).front());
}

// Receiver side: equalize (Rayleigh), unpack, keep the first l layers and run
// the decoder with the availability flags.
template <typename Scalar>
std::vector<ImageTensor> decode_batch(const std::vector<ChannelSymbolBlock<Scalar>>& received, int l,
                                      const ChannelState& csi, const ModelParams<Scalar>& params) {
  const CodecConfig& config = params.config;
  if (l < 1 || l > config.layers) {
    throw Error(ErrorCode::kLayerOutOfRange, "l=" + std::to_string(l) + " outside [1," + std::to_string(config.layers) + "]");
  }
  Matrix<Scalar> latent(config.real_dim(), static_cast<Eigen::Index>(received.size()));
  Matrix<Scalar> flags(config.layers, static_cast<Eigen::Index>(received.size()));
  for (std::size_t b = 0; b < received.size(); ++b) {
    if (received[b].size() != config.k) throw Error(ErrorCode::kShapeMismatch, "received block length != k");
    ChannelSymbolBlock<Scalar> block = received[b];
    if (csi.model == ChannelModel::kRayleigh && csi.fading_gain) block = equalize(block, *csi.fading_gain);
    const auto masked = prefix_mask(split_layers(unpack_complex(block.symbols), config.layers), l);
    latent.col(b) = masked.flatten();
    for (int i = 0; i < config.layers; ++i) flags(i, b) = static_cast<Scalar>(masked.available[i]);
  }
  ParameterSet<Scalar> layout;
  Network<Scalar> net(config, layout);
  check_layout(layout, params.tensors);
  const Vector<Scalar> snr = Vector<Scalar>::Constant(latent.cols(), static_cast<Scalar>(config.normalized_snr(csi.snr_db)));
  const FeatureMap<Scalar> y = net.decode_image(params.tensors, latent, flags, snr);
  std::vector<ImageTensor> out;
  for (int b = 0; b < y.batch; ++b) out.push_back(feature_to_image(y, b, "recon#" + std::to_string(b)));
  return out;
}

template <typename Scalar>
ImageTensor decode(const ChannelSymbolBlock<Scalar>& received, int l, const ChannelState& csi,
                   const ModelParams<Scalar>& params) {
  return std::move(decode_batch<Scalar>({received}, l, csi, params).front());
}

// Parameters of a single attention-feature stage.
template <typename Scalar>
struct AttentionParams {
  Matrix<Scalar> fc1_weight;  // (C, C+1)
  Vector<Scalar> fc1_bias;
  Vector<Scalar> hidden_slope;
  Matrix<Scalar> fc2_weight;  // (C, C)
  Vector<Scalar> fc2_bias;

  int channels() const { return static_cast<int>(fc2_bias.size()); }
};

// stage is e.g. "enc0.af" or "dec2.af".
template <typename Scalar>
AttentionParams<Scalar> attention_params(const ModelParams<Scalar>& params, const std::string& stage) {
  const auto& t = params.tensors;
  return {t[t.index_of(stage + ".fc1.weight")], t[t.index_of(stage + ".fc1.bias")],
          t[t.index_of(stage + ".hidden.slope")], t[t.index_of(stage + ".fc2.weight")],
          t[t.index_of(stage + ".fc2.bias")]};
}

template <typename Scalar>
struct AttentionOutput {
  FeatureMap<Scalar> features;
  Matrix<Scalar> mask;  // (C, batch)
};

template <typename Scalar>
AttentionOutput<Scalar> af_scale(const FeatureMap<Scalar>& features, double snr_normalized,
                                 const AttentionParams<Scalar>& af) {
  if (features.data.size() == 0) throw Error(ErrorCode::kShapeMismatch, "empty feature map");
  if (features.channels() != af.channels()) throw Error(ErrorCode::kShapeMismatch, "AF channel mismatch");
  ParameterSet<Scalar> p;
  AttentionFeature<Scalar> stage(p, "af", af.channels());
  p[p.index_of("af.fc1.weight")] = af.fc1_weight;
  p[p.index_of("af.fc1.bias")] = af.fc1_bias;
  p[p.index_of("af.hidden.slope")] = af.hidden_slope;
  p[p.index_of("af.fc2.weight")] = af.fc2_weight;
  p[p.index_of("af.fc2.bias")] = af.fc2_bias;
  const Vector<Scalar> snr = Vector<Scalar>::Constant(features.batch, static_cast<Scalar>(snr_normalized));
  FeatureMap<Scalar> y = stage.forward(p, features, snr);
  return {std::move(y), stage.last_mask()};
}

template <typename Scalar>
AttentionOutput<Scalar> af_scale(const FeatureMap<Scalar>& features, const ChannelState& csi,
                                 const AttentionParams<Scalar>& af, const CodecConfig& config) {
  return af_scale(features, config.normalized_snr(csi.snr_db), af);
}

// ---------------------------------------------------------------------------
// Checkpoints: "DJC1", u16 version, config, metadata, named f32 tensors.

inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& model);
ModelParams<float> load_checkpoint(const std::filesystem::path& path);
std::vector<unsigned char> serialize_checkpoint(const ModelParams<float>& model);
ModelParams<float> deserialize_checkpoint(const std::vector<unsigned char>& bytes);

}  // namespace djscc

#endif  // DJSCC_CODEC_HPP_
