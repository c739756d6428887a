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

#ifndef DJSCC_METRICS_HPP_
#define DJSCC_METRICS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "djscc/image.hpp"

namespace djscc {

// 10 log10(max^2 / MSE); +infinity when the images are identical.
double psnr(const ImageTensor& x, const ImageTensor& x_hat, double max_val = 1.0);
double mse(const ImageTensor& x, const ImageTensor& x_hat);

struct MsSsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double max_val = 1.0;
};

// Standard scale weights for the five-scale MS-SSIM.
inline constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Scales used for a given minimum side: min(5, 1 + floor(log2(side / 8))).
// 32x32 -> 3 scales, 64x64 -> 4, >= 128 -> 5. Weights are renormalized over
// the scales used; windows are truncated to the side length at coarse scales.
int ms_ssim_scales(int min_side);

// Per-channel MS-SSIM averaged over channels; negative SSIM/CS terms are
// clamped to 0 so the result lies in [0,1].
double ms_ssim(const ImageTensor& x, const ImageTensor& x_hat, const MsSsimOptions& options = {});

struct ImageQuality {
  std::string id;
  double psnr_db = 0.0;
  double ms_ssim = 0.0;
};

struct QualityReport {
  std::vector<ImageQuality> per_image;
  double psnr_db = 0.0;  // mean over finite entries; +inf if none finite
  double ms_ssim = 0.0;
  std::size_t infinite_psnr = 0;

  static QualityReport from(std::vector<ImageQuality> per_image);
};

QualityReport evaluate_quality(const std::vector<ImageTensor>& reference, const std::vector<ImageTensor>& decoded,
                               bool with_ms_ssim = true);

// "inf" for the zero-MSE sentinel, shortest round-trip decimal otherwise.
std::string format_db(double value);

void write_quality_csv(std::ostream& out, const QualityReport& report);
std::string quality_json(const QualityReport& report);

}  // namespace djscc

#endif  // DJSCC_METRICS_HPP_
