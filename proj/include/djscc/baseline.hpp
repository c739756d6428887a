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

#ifndef DJSCC_BASELINE_HPP_
#define DJSCC_BASELINE_HPP_

// Separation baseline: 8x8 block DCT + uniform quantization at the rate an
// ideal capacity-achieving code supports at the design SNR. Below the design
// SNR the code fails and the receiver falls back to the mean image.

#include <Eigen/Core>
#include <vector>

#include "djscc/image.hpp"
#include "djscc/metrics.hpp"

namespace djscc {

// k log2(1 + 10^(snr/10)) bits (Shannon capacity per complex symbol).
double capacity_bits(double snr_db, int k);

struct SeparationConfig {
  double design_snr_db = 10.0;
  int k = 256;
  std::vector<int> quantizer_bits_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int header_bits = 16;
  ImageTensor outage_image;  // training-set mean

  void validate() const;
};

struct TransformCode {
  int bit_depth = 0;
  double step = 0.0;
  Eigen::ArrayXi symbols;   // quantized DCT coefficients, per channel plane
  double entropy_bits = 0;  // count * empirical zero-order entropy
  double size_bits = 0;     // entropy_bits + header
};

// Uniform mid-tread quantizer with step 8 / 2^bits on orthonormal DCT
// coefficients of (x - 0.5). Sides must be multiples of 8.
TransformCode transform_encode(const ImageTensor& x, int bit_depth, int header_bits = 16);
ImageTensor transform_decode(const TransformCode& code, const ImageShape& shape);

// Largest grid bit depth whose size fits the budget; -1 if none fits.
int choose_bit_depth(const ImageTensor& x, double budget_bits, const SeparationConfig& config);

struct SeparationResult {
  QualityReport report;
  double budget_bits = 0.0;
  bool outage = false;            // snr_test below design SNR
  bool budget_too_small = false;  // budget below the header cost
  std::size_t undeliverable = 0;  // images with no bit depth within budget
  double mean_size_bits = 0.0;
  std::vector<int> bit_depths;
};

SeparationResult separation_eval(const std::vector<ImageTensor>& images, double snr_test_db,
                                 const SeparationConfig& config);

}  // namespace djscc

#endif  // DJSCC_BASELINE_HPP_
