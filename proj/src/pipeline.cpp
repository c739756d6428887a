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

#include "djscc/pipeline.hpp"

#include <algorithm>

namespace djscc {

std::vector<ImageTensor> transmit_and_decode(const ModelParams<float>& model, const std::vector<ImageTensor>& images,
                                             double snr_db, int l, const EvalOptions& options) {
  std::vector<ImageTensor> decoded;
  decoded.reserve(images.size());
  const auto step = static_cast<std::size_t>(std::max(1, options.batch));
  for (std::size_t start = 0; start < images.size(); start += step) {
    const std::size_t end = std::min(images.size(), start + step);
    std::vector<const ImageTensor*> chunk;
    for (std::size_t i = start; i < end; ++i) chunk.push_back(&images[i]);

    const auto encoded = encode_batch<float>(chunk, ChannelState::awgn(snr_db), model);
    if (options.channel || options.model == ChannelModel::kAwgn) {
      std::vector<ChannelSymbolBlock<float>> received;
      for (std::size_t i = 0; i < encoded.size(); ++i) {
        received.push_back(options.channel ? options.channel(encoded[i].block, start + i)
                                           : awgn_transmit(encoded[i].block, snr_db, options.seed, start + i));
      }
      auto out = decode_batch<float>(received, l, ChannelState::awgn(snr_db), model);
      std::move(out.begin(), out.end(), std::back_inserter(decoded));
    } else {
      // One fading gain per image; decode each with its own CSI.
      for (std::size_t i = 0; i < encoded.size(); ++i) {
        const auto faded = rayleigh_transmit(encoded[i].block, snr_db, options.seed, start + i);
        ChannelState csi = ChannelState::rayleigh(snr_db, faded.fading_gain);
        if (std::abs(faded.fading_gain) <= 1e-12) csi = ChannelState::awgn(snr_db);
        decoded.push_back(decode<float>(faded.received, l, csi, model));
      }
    }
  }
  for (std::size_t i = 0; i < decoded.size(); ++i) decoded[i].id = images[i].id;
  return decoded;
}

QualityReport evaluate_model(const ModelParams<float>& model, const std::vector<ImageTensor>& images, double snr_db,
                             int l, const EvalOptions& options) {
  return evaluate_quality(images, transmit_and_decode(model, images, snr_db, l, options), options.with_ms_ssim);
}

}  // namespace djscc
