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

#ifndef DJSCC_PIPELINE_HPP_
#define DJSCC_PIPELINE_HPP_

// End-to-end encode -> channel -> decode with MSE loss and gradients. Channel
// noise is drawn from (noise_seed, image index) and treated as a constant, so
// the whole map is differentiable in the parameters.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "djscc/channel.hpp"
#include "djscc/codec.hpp"
#include "djscc/metrics.hpp"

namespace djscc {

// Replaces the AWGN draw: maps the transmitted block of image `index` to the
// received block. The difference is treated as additive, gradient-free noise.
template <typename Scalar>
using ChannelHook = std::function<ComplexVector<Scalar>(const ComplexVector<Scalar>&, std::size_t index)>;

template <typename Scalar>
struct PassResult {
  double loss = 0.0;
  FeatureMap<Scalar> reconstruction;
  double max_power_error = 0.0;  // over every transmitted prefix
};

template <typename Scalar>
class Pipeline {
 public:
  explicit Pipeline(const CodecConfig& config) : config_(config), net_(config, layout_) {}

  const CodecConfig& config() const { return config_; }

  // grads may be null (forward only). grads are accumulated, not reset.
  PassResult<Scalar> run(const ParameterSet<Scalar>& params, const std::vector<const ImageTensor*>& batch,
                         double snr_db, int l, std::uint64_t noise_seed, ParameterSet<Scalar>* grads,
                         const ChannelHook<Scalar>& hook = {}) {
    if (batch.empty()) throw Error(ErrorCode::kEmptyDataset, "empty batch");
    if (l < 1 || l > config_.layers) throw Error(ErrorCode::kLayerOutOfRange, "bad layer count");
    for (const auto* x : batch) check_shape<Scalar>(*x, config_);
    check_layout(layout_, params);
    const auto batch_size = static_cast<Eigen::Index>(batch.size());
    const FeatureMap<Scalar> x = images_to_features<Scalar>(batch);
    const Vector<Scalar> snr = Vector<Scalar>::Constant(batch_size, static_cast<Scalar>(config_.normalized_snr(snr_db)));

    const Matrix<Scalar> raw = net_.encode_latent(params, x, snr);
    if (!raw.allFinite()) throw Error(ErrorCode::kNonFiniteActivation, "encoder output is not finite");
    const auto norm = normalize_layers(raw, config_.layers, 1.0);

    PassResult<Scalar> result;
    const Eigen::Index kept = static_cast<Eigen::Index>(l) * config_.layer_real_dim();
    for (Eigen::Index b = 0; b < batch_size; ++b) {
      const double p = norm.output.col(b).head(kept).template cast<double>().squaredNorm() / static_cast<double>(kept / 2);
      result.max_power_error = std::max(result.max_power_error, std::abs(p - 1.0));
    }

    Matrix<Scalar> received = norm.output;
    const double sigma = std::sqrt(snr_db_to_noise_variance(snr_db, 1.0));
    for (Eigen::Index b = 0; b < batch_size; ++b) {
      if (hook) {
        received.col(b) = unpack_complex<Scalar>(hook(pack_complex<Scalar>(norm.output.col(b)), static_cast<std::size_t>(b)));
      } else if (sigma > 0.0) {
        received.col(b) += static_cast<Scalar>(sigma) *
                           unpack_complex<Scalar>(standard_complex_noise<Scalar>(config_.k, noise_seed, static_cast<std::uint64_t>(b)));
      }
    }
    received.bottomRows(received.rows() - kept).setZero();
    Matrix<Scalar> flags = Matrix<Scalar>::Zero(config_.layers, batch_size);
    flags.topRows(l).setOnes();

    result.reconstruction = net_.decode_image(params, received, flags, snr);
    const auto diff = (result.reconstruction.data - x.data).array();
    const double count = static_cast<double>(diff.size());
    result.loss = diff.template cast<double>().square().sum() / count;

    if (grads != nullptr) {
      FeatureMap<Scalar> d_out = result.reconstruction;
      d_out.data = (diff * static_cast<Scalar>(2.0 / count)).matrix();
      Matrix<Scalar> d_latent = net_.backward_decoder(params, *grads, d_out);
      d_latent.bottomRows(d_latent.rows() - kept).setZero();
      net_.backward_encoder(params, *grads, normalize_layers_backward(norm, d_latent, 1.0));
    }
    return result;
  }

 private:
  CodecConfig config_;
  ParameterSet<Scalar> layout_;
  Network<Scalar> net_;
};

struct EvalOptions {
  ChannelModel model = ChannelModel::kAwgn;
  std::uint64_t seed = 0;
  bool with_ms_ssim = true;
  int batch = 64;
  // Replaces the AWGN channel when set (image index is global).
  std::function<ChannelSymbolBlock<float>(const ChannelSymbolBlock<float>&, std::size_t)> channel;
};

// Mean quality over `images` at one (SNR, l) cell. Image i uses noise block i
// of `seed`, so every SNR of a sweep sees the same underlying draws.
QualityReport evaluate_model(const ModelParams<float>& model, const std::vector<ImageTensor>& images, double snr_db,
                             int l, const EvalOptions& options = {});

std::vector<ImageTensor> transmit_and_decode(const ModelParams<float>& model, const std::vector<ImageTensor>& images,
                                             double snr_db, int l, const EvalOptions& options = {});

}  // namespace djscc

#endif  // DJSCC_PIPELINE_HPP_
