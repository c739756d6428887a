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

#include "djscc/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "djscc/common.hpp"

namespace djscc {
namespace fs = std::filesystem;

std::string to_string(const ImageShape& shape) {
  return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
         std::to_string(shape.channels);
}

ImageShape parse_shape(std::string_view text) {
  ImageShape shape;
  std::string s(text);
  std::replace(s.begin(), s.end(), 'x', ' ');
  std::istringstream in(s);
  if (!(in >> shape.height >> shape.width >> shape.channels) || shape.height <= 0 ||
      shape.width <= 0 || shape.channels <= 0) {
    throw Error(ErrorCode::kBadConfig, "bad image shape '" + std::string(text) + "'");
  }
  return shape;
}

ImageTensor make_image(std::string id, const ImageShape& shape, float fill) {
  ImageTensor img;
  img.id = std::move(id);
  img.shape = shape;
  img.pixels = Eigen::ArrayXf::Constant(shape.size(), fill);
  return img;
}

namespace {

template <typename T>
bool read_le(std::istream& in, T& value) {
  std::array<unsigned char, sizeof(T)> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) return false;
  value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(buf[i]) << (8 * i);
  return true;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((value >> (8 * i)) & 0xff));
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

std::vector<ImageTensor> read_djl1(const fs::path& path, std::optional<std::size_t> limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingPath, path.string());
  char magic[4];
  std::uint32_t count = 0;
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "DJL1" || !read_le(in, count)) {
    throw Error(ErrorCode::kCorruptImage, path.string() + ": bad DJL1 header");
  }
  const std::size_t n = limit ? std::min<std::size_t>(*limit, count) : count;
  std::vector<ImageTensor> images;
  images.reserve(n);
  std::vector<unsigned char> raw;
  const std::string stem = path.filename().string();
  for (std::size_t i = 0; i < n; ++i) {
    std::uint16_t h = 0, w = 0;
    std::uint8_t c = 0;
    if (!read_le(in, h) || !read_le(in, w) || !read_le(in, c) || h == 0 || w == 0 || c == 0) {
      throw Error(ErrorCode::kCorruptImage, stem + " record " + std::to_string(i) + ": bad header");
    }
    ImageShape shape{h, w, c};
    raw.resize(shape.size());
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
      throw Error(ErrorCode::kCorruptImage, stem + " record " + std::to_string(i) + ": truncated");
    }
    ImageTensor img = make_image(stem + "#" + std::to_string(i), shape);
    for (std::size_t j = 0; j < raw.size(); ++j) img.pixels[j] = static_cast<float>(raw[j]) / 255.0f;
    images.push_back(std::move(img));
  }
  return images;
}

void write_djl1(const fs::path& path, const std::vector<ImageTensor>& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kDiskWriteFailure, path.string());
  out.write("DJL1", 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(images.size()));
  for (const auto& img : images) {
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(img.shape.height));
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(img.shape.width));
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(img.shape.channels));
    for (Eigen::Index j = 0; j < img.pixels.size(); ++j) out.put(static_cast<char>(to_byte(img.pixels[j])));
  }
  if (!out) throw Error(ErrorCode::kDiskWriteFailure, path.string());
}

ImageTensor read_png(const fs::path& path, int channels) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(ErrorCode::kCorruptImage, path.string() + ": " + png.message);
  }
  const auto stored = static_cast<int>(PNG_IMAGE_SAMPLE_CHANNELS(png.format));
  if (stored != channels) {
    png_image_free(&png);
    throw Error(ErrorCode::kShapeMismatch, path.string() + " has " + std::to_string(stored) + " channels, expected " +
                                               std::to_string(channels));
  }
  if (channels != 1 && channels != 3 && channels != 4) {
    png_image_free(&png);
    throw Error(ErrorCode::kShapeMismatch, "unsupported channel count " + std::to_string(channels));
  }
  png.format = channels == 1 ? PNG_FORMAT_GRAY : channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
  std::vector<unsigned char> raw(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(ErrorCode::kCorruptImage, path.string() + ": " + png.message);
  }
  ImageTensor img = make_image(path.filename().string(),
                               {static_cast<int>(png.height), static_cast<int>(png.width), channels});
  for (std::size_t j = 0; j < raw.size(); ++j) img.pixels[j] = static_cast<float>(raw[j]) / 255.0f;
  return img;
}

void write_png(const fs::path& path, const ImageTensor& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = image.shape.width;
  png.height = image.shape.height;
  png.format = image.shape.channels == 1 ? PNG_FORMAT_GRAY
               : image.shape.channels == 3 ? PNG_FORMAT_RGB
                                           : PNG_FORMAT_RGBA;
  std::vector<unsigned char> raw(image.pixels.size());
  for (std::size_t j = 0; j < raw.size(); ++j) raw[j] = to_byte(image.pixels[j]);
  if (!png_image_write_to_file(&png, path.c_str(), 0, raw.data(), 0, nullptr)) {
    throw Error(ErrorCode::kDiskWriteFailure, path.string() + ": " + png.message);
  }
}

std::vector<ImageTensor> load_images(const fs::path& path, std::optional<std::size_t> limit,
                                     const ImageShape& expected) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingPath, path.string());
  std::vector<ImageTensor> images;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (limit && files.size() > *limit) files.resize(*limit);
    for (const auto& f : files) images.push_back(read_png(f, expected.channels));
  } else {
    images = read_djl1(path, limit);
  }
  for (const auto& img : images) {
    if (!(img.shape == expected)) {
      throw Error(ErrorCode::kShapeMismatch,
                  img.id + " is " + to_string(img.shape) + ", expected " + to_string(expected));
    }
  }
  return images;
}

DatasetSplit make_split(std::vector<ImageTensor> images, double train_fraction, double val_fraction,
                        double test_fraction, std::uint64_t seed) {
  if (images.empty()) throw Error(ErrorCode::kEmptyDataset, "no images to split");
  if (train_fraction < 0 || val_fraction < 0 || test_fraction < 0 ||
      std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw Error(ErrorCode::kBadFractions, "split fractions must be non-negative and sum to 1");
  }
  std::set<std::string> ids;
  for (const auto& img : images) {
    if (!ids.insert(img.id).second) throw Error(ErrorCode::kBadFractions, "duplicate image id " + img.id);
  }
  auto rng = make_stream(seed, Stream::kShuffle);
  for (std::size_t i = images.size() - 1; i > 0; --i) {
    const std::size_t j = rng() % (i + 1);
    std::swap(images[i], images[j]);
  }
  const std::size_t n = images.size();
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_fraction));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction));
  const std::size_t n_train = n - n_val - n_test;

  DatasetSplit split;
  split.seed = seed;
  auto first = std::make_move_iterator(images.begin());
  split.train.assign(first, first + n_train);
  split.validation.assign(first + n_train, first + n_train + n_val);
  split.test.assign(first + n_train + n_val, std::make_move_iterator(images.end()));
  return split;
}

FixtureKind parse_fixture_kind(std::string_view name) {
  if (name == "constant") return FixtureKind::kConstant;
  if (name == "gradient") return FixtureKind::kGradient;
  if (name == "checker") return FixtureKind::kChecker;
  if (name == "noise") return FixtureKind::kNoise;
  throw Error(ErrorCode::kUnknownKind, "unknown fixture kind '" + std::string(name) + "'");
}

ImageTensor synth_fixture(FixtureKind kind, std::uint64_t seed, const ImageShape& shape) {
  ImageTensor img = make_image("fixture", shape);
  auto rng = make_stream(seed, Stream::kFixture);
  std::uniform_real_distribution<float> uniform(0.0f, 1.0f);
  const float span = static_cast<float>(std::max(1, shape.height + shape.width - 2));
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      for (int c = 0; c < shape.channels; ++c) {
        float v = 0.0f;
        switch (kind) {
          case FixtureKind::kConstant: v = 0.5f; break;
          case FixtureKind::kGradient: v = static_cast<float>(x + y) / span; break;
          case FixtureKind::kChecker: v = static_cast<float>((x + y) % 2); break;
          case FixtureKind::kNoise: v = uniform(rng); break;
        }
        img.at(y, x, c) = v;
      }
    }
  }
  return img;
}

ImageTensor mean_image(const std::vector<ImageTensor>& images) {
  if (images.empty()) throw Error(ErrorCode::kEmptyDataset, "mean of empty image set");
  ImageTensor mean = make_image("mean", images.front().shape);
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(mean.pixels.size());
  for (const auto& img : images) {
    if (!(img.shape == mean.shape)) throw Error(ErrorCode::kShapeMismatch, img.id);
    acc += img.pixels.cast<double>();
  }
  mean.pixels = (acc / static_cast<double>(images.size())).cast<float>();
  return mean;
}

}  // namespace djscc
