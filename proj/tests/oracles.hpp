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

// Loop-based reference metrics, written independently of src/metrics.cpp.

#ifndef DJSCC_TESTS_ORACLES_HPP_
#define DJSCC_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "djscc/image.hpp"

namespace djscc::testing {

inline double brute_psnr(const ImageTensor& a, const ImageTensor& b) {
  double sum = 0;
  long n = 0;
  for (int y = 0; y < a.shape.height; ++y)
    for (int x = 0; x < a.shape.width; ++x)
      for (int c = 0; c < a.shape.channels; ++c, ++n) {
        const double d = static_cast<double>(a.at(y, x, c)) - b.at(y, x, c);
        sum += d * d;
      }
  return 10.0 * std::log10(1.0 / (sum / n));
}

using Grid = std::vector<std::vector<double>>;

// Direct 2D windowed statistics, no separable filtering.
inline std::pair<double, double> direct_ssim_cs(const Grid& a, const Grid& b) {
  const int h = static_cast<int>(a.size()), w = static_cast<int>(a[0].size());
  const int n = std::min({11, h, w});
  std::vector<std::vector<double>> win(n, std::vector<double>(n));
  double total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double di = i - (n - 1) / 2.0, dj = j - (n - 1) / 2.0;
      win[i][j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      total += win[i][j];
    }
  const double c1 = 1e-4, c2 = 9e-4;
  double ssim_sum = 0, cs_sum = 0;
  int count = 0;
  for (int y = 0; y + n <= h; ++y)
    for (int x = 0; x + n <= w; ++x, ++count) {
      double ma = 0, mb = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          ma += win[i][j] / total * a[y + i][x + j];
          mb += win[i][j] / total * b[y + i][x + j];
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double wt = win[i][j] / total;
          va += wt * (a[y + i][x + j] - ma) * (a[y + i][x + j] - ma);
          vb += wt * (b[y + i][x + j] - mb) * (b[y + i][x + j] - mb);
          cov += wt * (a[y + i][x + j] - ma) * (b[y + i][x + j] - mb);
        }
      const double cs = (2 * cov + c2) / (va + vb + c2);
      cs_sum += cs;
      ssim_sum += cs * (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    }
  return {ssim_sum / count, cs_sum / count};
}

inline Grid halve(const Grid& g) {
  Grid out(g.size() / 2, std::vector<double>(g[0].size() / 2));
  for (std::size_t y = 0; y < out.size(); ++y)
    for (std::size_t x = 0; x < out[0].size(); ++x)
      out[y][x] = (g[2 * y][2 * x] + g[2 * y + 1][2 * x] + g[2 * y][2 * x + 1] + g[2 * y + 1][2 * x + 1]) / 4;
  return out;
}

inline double direct_ms_ssim(const ImageTensor& a, const ImageTensor& b, int scales) {
  const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double wsum = 0;
  for (int s = 0; s < scales; ++s) wsum += weights[s];
  double total = 0;
  for (int c = 0; c < a.shape.channels; ++c) {
    Grid ga(a.shape.height, std::vector<double>(a.shape.width)), gb = ga;
    for (int y = 0; y < a.shape.height; ++y)
      for (int x = 0; x < a.shape.width; ++x) {
        ga[y][x] = a.at(y, x, c);
        gb[y][x] = b.at(y, x, c);
      }
    double v = 1;
    for (int s = 0; s < scales; ++s) {
      const auto [ssim, cs] = direct_ssim_cs(ga, gb);
      v *= std::pow(std::max(s + 1 == scales ? ssim : cs, 0.0), weights[s] / wsum);
      ga = halve(ga);
      gb = halve(gb);
    }
    total += v;
  }
  return total / a.shape.channels;
}

}  // namespace djscc::testing

#endif  // DJSCC_TESTS_ORACLES_HPP_
