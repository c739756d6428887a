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

#include "djscc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "djscc/common.hpp"

namespace djscc {
namespace {

using Plane = Eigen::ArrayXXd;  // (height, width)

void check_same_shape(const ImageTensor& a, const ImageTensor& b) {
  if (!(a.shape == b.shape)) {
    throw Error(ErrorCode::kShapeMismatch, to_string(a.shape) + " vs " + to_string(b.shape));
  }
}

Plane channel_plane(const ImageTensor& img, int c) {
  Plane p(img.shape.height, img.shape.width);
  for (int y = 0; y < img.shape.height; ++y)
    for (int x = 0; x < img.shape.width; ++x) p(y, x) = img.at(y, x, c);
  return p;
}

Eigen::ArrayXd gaussian_window(int size, double sigma) {
  Eigen::ArrayXd g(size);
  const double center = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) g[i] = std::exp(-((i - center) * (i - center)) / (2.0 * sigma * sigma));
  return g / g.sum();
}

// Separable "valid" filtering.
Plane filter_valid(const Plane& p, const Eigen::ArrayXd& g) {
  const auto n = g.size();
  const Eigen::Index h = p.rows() - n + 1;
  const Eigen::Index w = p.cols() - n + 1;
  Plane rows_done = Plane::Zero(h, p.cols());
  for (Eigen::Index i = 0; i < n; ++i) rows_done += g[i] * p.middleRows(i, h);
  Plane out = Plane::Zero(h, w);
  for (Eigen::Index j = 0; j < n; ++j) out += g[j] * rows_done.middleCols(j, w);
  return out;
}

Plane downsample(const Plane& p) {
  const Eigen::Index h = p.rows() / 2;
  const Eigen::Index w = p.cols() / 2;
  Plane out(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      out(y, x) = 0.25 * (p(2 * y, 2 * x) + p(2 * y + 1, 2 * x) + p(2 * y, 2 * x + 1) + p(2 * y + 1, 2 * x + 1));
  return out;
}

struct ScaleTerms {
  double ssim;
  double cs;
};

ScaleTerms ssim_terms(const Plane& a, const Plane& b, const MsSsimOptions& o) {
  const int size = static_cast<int>(std::min<Eigen::Index>({o.window, a.rows(), a.cols()}));
  const Eigen::ArrayXd g = gaussian_window(size, o.sigma);
  const double c1 = (o.k1 * o.max_val) * (o.k1 * o.max_val);
  const double c2 = (o.k2 * o.max_val) * (o.k2 * o.max_val);
  const Plane mu_a = filter_valid(a, g);
  const Plane mu_b = filter_valid(b, g);
  const Plane var_a = filter_valid(a * a, g) - mu_a * mu_a;
  const Plane var_b = filter_valid(b * b, g) - mu_b * mu_b;
  const Plane cov = filter_valid(a * b, g) - mu_a * mu_b;
  const Plane cs = (2.0 * cov + c2) / (var_a + var_b + c2);
  const Plane luminance = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
  return {(luminance * cs).mean(), cs.mean()};
}

}  // namespace

double mse(const ImageTensor& x, const ImageTensor& x_hat) {
  check_same_shape(x, x_hat);
  return (x.pixels.cast<double>() - x_hat.pixels.cast<double>()).square().mean();
}

double psnr(const ImageTensor& x, const ImageTensor& x_hat, double max_val) {
  if (!(max_val > 0.0)) throw Error(ErrorCode::kBadParams, "max_val must be > 0");
  const double m = mse(x, x_hat);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / m);
}

int ms_ssim_scales(int min_side) {
  if (min_side < 11) throw Error(ErrorCode::kImageTooSmall, "MS-SSIM needs sides of at least 11 pixels");
  return std::min(5, 1 + static_cast<int>(std::floor(std::log2(min_side / 8.0))));
}

double ms_ssim(const ImageTensor& x, const ImageTensor& x_hat, const MsSsimOptions& options) {
  check_same_shape(x, x_hat);
  const int scales = ms_ssim_scales(std::min(x.shape.height, x.shape.width));
  double weight_sum = 0.0;
  for (int s = 0; s < scales; ++s) weight_sum += kMsSsimWeights[s];

  double total = 0.0;
  for (int c = 0; c < x.shape.channels; ++c) {
    Plane a = channel_plane(x, c);
    Plane b = channel_plane(x_hat, c);
    double value = 1.0;
    for (int s = 0; s < scales; ++s) {
      const ScaleTerms t = ssim_terms(a, b, options);
      const double w = kMsSsimWeights[s] / weight_sum;
      const double term = s + 1 == scales ? t.ssim : t.cs;
      value *= std::pow(std::max(term, 0.0), w);
      if (s + 1 < scales) {
        a = downsample(a);
        b = downsample(b);
      }
    }
    total += value;
  }
  return std::clamp(total / x.shape.channels, 0.0, 1.0);
}

QualityReport QualityReport::from(std::vector<ImageQuality> per_image) {
  QualityReport r;
  r.per_image = std::move(per_image);
  double psnr_sum = 0.0, ssim_sum = 0.0;
  std::size_t finite = 0;
  for (const auto& q : r.per_image) {
    if (std::isinf(q.psnr_db)) {
      ++r.infinite_psnr;
    } else {
      psnr_sum += q.psnr_db;
      ++finite;
    }
    ssim_sum += q.ms_ssim;
  }
  r.psnr_db = finite ? psnr_sum / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
  r.ms_ssim = r.per_image.empty() ? 0.0 : ssim_sum / static_cast<double>(r.per_image.size());
  return r;
}

QualityReport evaluate_quality(const std::vector<ImageTensor>& reference, const std::vector<ImageTensor>& decoded,
                               bool with_ms_ssim) {
  if (reference.size() != decoded.size()) throw Error(ErrorCode::kShapeMismatch, "image count mismatch");
  std::vector<ImageQuality> rows;
  rows.reserve(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) {
    rows.push_back({reference[i].id, psnr(reference[i], decoded[i]),
                    with_ms_ssim ? ms_ssim(reference[i], decoded[i]) : 0.0});
  }
  return QualityReport::from(std::move(rows));
}

std::string format_db(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(10) << value;
  return s.str();
}

void write_quality_csv(std::ostream& out, const QualityReport& report) {
  out << "id,psnr_db,ms_ssim\n";
  for (const auto& q : report.per_image) out << q.id << ',' << format_db(q.psnr_db) << ',' << format_db(q.ms_ssim) << '\n';
}

std::string quality_json(const QualityReport& report) {
  nlohmann::ordered_json j;
  j["psnr_db"] = format_db(report.psnr_db);
  j["ms_ssim"] = report.ms_ssim;
  j["images"] = report.per_image.size();
  j["infinite_psnr"] = report.infinite_psnr;
  return j.dump(2);
}

}  // namespace djscc
