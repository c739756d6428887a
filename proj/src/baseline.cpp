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

#include "djscc/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "djscc/common.hpp"

namespace djscc {
namespace {

constexpr int kBlock = 8;

// Orthonormal DCT-II basis, row u = frequency.
Eigen::Matrix<double, kBlock, kBlock> dct_basis() {
  Eigen::Matrix<double, kBlock, kBlock> c;
  for (int u = 0; u < kBlock; ++u) {
    const double scale = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
    for (int x = 0; x < kBlock; ++x) c(u, x) = scale * std::cos((2 * x + 1) * u * std::numbers::pi / (2.0 * kBlock));
  }
  return c;
}

double zero_order_entropy_bits(const Eigen::ArrayXi& symbols) {
  std::map<int, std::size_t> counts;
  for (Eigen::Index i = 0; i < symbols.size(); ++i) ++counts[symbols[i]];
  const auto n = static_cast<double>(symbols.size());
  double h = 0.0;
  for (const auto& [symbol, count] : counts) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return n * h;
}

}  // namespace

double capacity_bits(double snr_db, int k) {
  if (k < 1) throw Error(ErrorCode::kBadParams, "k must be >= 1");
  if (snr_db == -std::numeric_limits<double>::infinity()) return 0.0;
  return k * std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

void SeparationConfig::validate() const {
  if (k < 1) throw Error(ErrorCode::kBadParams, "k must be >= 1");
  if (!std::isfinite(design_snr_db)) throw Error(ErrorCode::kBadParams, "design SNR must be finite");
  if (quantizer_bits_grid.empty()) throw Error(ErrorCode::kBadParams, "empty bit-depth grid");
  if (outage_image.pixels.size() == 0) throw Error(ErrorCode::kBadParams, "missing outage image");
}

TransformCode transform_encode(const ImageTensor& x, int bit_depth, int header_bits) {
  const ImageShape& s = x.shape;
  if (s.height % kBlock || s.width % kBlock) throw Error(ErrorCode::kShapeMismatch, "sides must be multiples of 8");
  const auto c = dct_basis();
  TransformCode code;
  code.bit_depth = bit_depth;
  code.step = 8.0 / std::pow(2.0, bit_depth);
  code.symbols.resize(s.size());
  Eigen::Index idx = 0;
  for (int ch = 0; ch < s.channels; ++ch) {
    for (int by = 0; by < s.height; by += kBlock) {
      for (int bx = 0; bx < s.width; bx += kBlock) {
        Eigen::Matrix<double, kBlock, kBlock> block;
        for (int y = 0; y < kBlock; ++y)
          for (int xx = 0; xx < kBlock; ++xx) block(y, xx) = x.at(by + y, bx + xx, ch) - 0.5;
        const Eigen::Matrix<double, kBlock, kBlock> coeff = c * block * c.transpose();
        for (int i = 0; i < kBlock * kBlock; ++i) {
          code.symbols[idx++] = static_cast<int>(std::lround(coeff.data()[i] / code.step));
        }
      }
    }
  }
  code.entropy_bits = zero_order_entropy_bits(code.symbols);
  code.size_bits = code.entropy_bits + header_bits;
  return code;
}

ImageTensor transform_decode(const TransformCode& code, const ImageShape& s) {
  const auto c = dct_basis();
  ImageTensor out = make_image("decoded", s);
  Eigen::Index idx = 0;
  for (int ch = 0; ch < s.channels; ++ch) {
    for (int by = 0; by < s.height; by += kBlock) {
      for (int bx = 0; bx < s.width; bx += kBlock) {
        Eigen::Matrix<double, kBlock, kBlock> coeff;
        for (int i = 0; i < kBlock * kBlock; ++i) coeff.data()[i] = code.symbols[idx++] * code.step;
        const Eigen::Matrix<double, kBlock, kBlock> block = c.transpose() * coeff * c;
        for (int y = 0; y < kBlock; ++y)
          for (int xx = 0; xx < kBlock; ++xx)
            out.at(by + y, bx + xx, ch) = static_cast<float>(std::clamp(block(y, xx) + 0.5, 0.0, 1.0));
      }
    }
  }
  return out;
}

int choose_bit_depth(const ImageTensor& x, double budget_bits, const SeparationConfig& config) {
  int best = -1;
  for (int bits : config.quantizer_bits_grid) {
    if (bits > best && transform_encode(x, bits, config.header_bits).size_bits <= budget_bits) best = bits;
  }
  return best;
}

SeparationResult separation_eval(const std::vector<ImageTensor>& images, double snr_test_db,
                                 const SeparationConfig& config) {
  config.validate();
  SeparationResult result;
  result.budget_bits = capacity_bits(config.design_snr_db, config.k);
  result.budget_too_small = result.budget_bits < config.header_bits;
  result.outage = result.budget_too_small || snr_test_db < config.design_snr_db;

  std::vector<ImageQuality> rows;
  double size_sum = 0.0;
  for (const auto& x : images) {
    const int bits = result.budget_too_small ? -1 : choose_bit_depth(x, result.budget_bits, config);
    result.bit_depths.push_back(bits);
    ImageTensor recon = config.outage_image;
    if (bits < 0) {
      ++result.undeliverable;
    } else {
      const TransformCode code = transform_encode(x, bits, config.header_bits);
      size_sum += code.size_bits;
      if (!result.outage) recon = transform_decode(code, x.shape);
    }
    rows.push_back({x.id, psnr(x, recon), ms_ssim(x, recon)});
  }
  const std::size_t delivered = images.size() - result.undeliverable;
  result.mean_size_bits = delivered ? size_sum / static_cast<double>(delivered) : 0.0;
  result.report = QualityReport::from(std::move(rows));
  return result;
}

}  // namespace djscc
