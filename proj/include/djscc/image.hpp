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

#ifndef DJSCC_IMAGE_HPP_
#define DJSCC_IMAGE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace djscc {

struct ImageShape {
  int height = 32;
  int width = 32;
  int channels = 3;

  int size() const { return height * width * channels; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

std::string to_string(const ImageShape& shape);
// Parses "HxWxC", e.g. "32x32x3".
ImageShape parse_shape(std::string_view text);

// Pixels are stored interleaved (HWC, row-major) with values in [0,1].
struct ImageTensor {
  std::string id;
  ImageShape shape;
  Eigen::ArrayXf pixels;

  float at(int y, int x, int c) const {
    return pixels[(static_cast<Eigen::Index>(y) * shape.width + x) * shape.channels + c];
  }
  float& at(int y, int x, int c) {
    return pixels[(static_cast<Eigen::Index>(y) * shape.width + x) * shape.channels + c];
  }
};

ImageTensor make_image(std::string id, const ImageShape& shape, float fill = 0.0f);

struct DatasetSplit {
  std::vector<ImageTensor> train;
  std::vector<ImageTensor> validation;
  std::vector<ImageTensor> test;
  std::uint64_t seed = 0;
};

// Loads a directory of PNG files (sorted by filename) or a single DJL1 batch
// file. Throws MissingPath, CorruptImage or ShapeMismatch.
std::vector<ImageTensor> load_images(const std::filesystem::path& path,
                                     std::optional<std::size_t> limit = std::nullopt,
                                     const ImageShape& expected = {});

// DJL1: "DJL1", u32 count, then per image u16 height, u16 width, u8 channels
// and height*width*channels raw bytes (HWC). All integers little-endian.
std::vector<ImageTensor> read_djl1(const std::filesystem::path& path,
                                   std::optional<std::size_t> limit = std::nullopt);
void write_djl1(const std::filesystem::path& path, const std::vector<ImageTensor>& images);

ImageTensor read_png(const std::filesystem::path& path, int channels);
void write_png(const std::filesystem::path& path, const ImageTensor& image);

// Fisher-Yates over mt19937_64(Stream::kShuffle): for i = n-1..1, j = draw % (i+1).
// val = floor(n*f_val), test = floor(n*f_test), train takes the remainder.
DatasetSplit make_split(std::vector<ImageTensor> images, double train_fraction,
                        double val_fraction, double test_fraction, std::uint64_t seed);

enum class FixtureKind { kConstant, kGradient, kChecker, kNoise };

FixtureKind parse_fixture_kind(std::string_view name);
ImageTensor synth_fixture(FixtureKind kind, std::uint64_t seed, const ImageShape& shape = {});

ImageTensor mean_image(const std::vector<ImageTensor>& images);

}  // namespace djscc

#endif  // DJSCC_IMAGE_HPP_
