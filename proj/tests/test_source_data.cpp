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

#include <doctest.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>

#include "djscc/common.hpp"
#include "djscc/image.hpp"
#include "test_util.hpp"

using namespace djscc;
using djscc::testing::TempDir;

namespace {

// Writes RGB bytes with libpng directly, bypassing the library writer.
void write_png_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& rgb, int h, int w) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(w);
  png.height = static_cast<png_uint_32>(h);
  png.format = PNG_FORMAT_RGB;
  REQUIRE(png_image_write_to_file(&png, path.c_str(), 0, rgb.data(), 0, nullptr));
}

void write_djl1_by_hand(const std::filesystem::path& path, const std::vector<std::vector<unsigned char>>& images,
                        int h, int w, int c) {
  std::ofstream out(path, std::ios::binary);
  auto u16 = [&](std::uint16_t v) { out.put(static_cast<char>(v & 0xff)).put(static_cast<char>(v >> 8)); };
  out.write("DJL1", 4);
  const auto n = static_cast<std::uint32_t>(images.size());
  for (int b = 0; b < 4; ++b) out.put(static_cast<char>((n >> (8 * b)) & 0xff));
  for (const auto& img : images) {
    u16(static_cast<std::uint16_t>(h));
    u16(static_cast<std::uint16_t>(w));
    out.put(static_cast<char>(c));
    out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  }
}

// Seeding as documented in docs/formats.md, written out independently.
std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::size_t> reference_shuffle(std::size_t n, std::uint64_t seed) {
  constexpr std::uint64_t kShuffleTag = 1;
  std::mt19937_64 rng(splitmix(splitmix(seed ^ (kShuffleTag << 56)) + 0));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
  return order;
}

std::vector<std::string> ids(const std::vector<ImageTensor>& images) {
  std::vector<std::string> out;
  for (const auto& img : images) out.push_back(img.id);
  return out;
}

}  // namespace

TEST_CASE("all-zero and all-255 files load as 0.0 and 1.0") {
  TempDir dir("zero");
  write_png_bytes(dir / "a_zero.png", std::vector<unsigned char>(32 * 32 * 3, 0), 32, 32);
  write_png_bytes(dir / "b_full.png", std::vector<unsigned char>(32 * 32 * 3, 255), 32, 32);
  const auto images = load_images(dir.path());
  REQUIRE(images.size() == 2);
  CHECK(images[0].pixels.maxCoeff() == 0.0f);
  CHECK(images[1].pixels.minCoeff() == 1.0f);
  CHECK(images[1].pixels.maxCoeff() == 1.0f);
}

TEST_CASE("ten-image png directory matches stored bytes / 255") {
  TempDir dir("ten");
  std::mt19937 rng(5);
  std::vector<std::vector<unsigned char>> stored;
  for (int i = 0; i < 10; ++i) {
    std::vector<unsigned char> rgb(32 * 32 * 3);
    for (auto& b : rgb) b = static_cast<unsigned char>(rng() & 0xff);
    stored.push_back(rgb);
    write_png_bytes(dir / ("img_" + std::to_string(i) + ".png"), rgb, 32, 32);
  }
  const auto images = load_images(dir.path());
  REQUIRE(images.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(images[i].id == "img_" + std::to_string(i) + ".png");
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        for (int c = 0; c < 3; ++c) {
          const float expect = static_cast<float>(stored[i][(y * 32 + x) * 3 + c]) / 255.0f;
          REQUIRE(images[i].at(y, x, c) == expect);
        }
  }
  SUBCASE("limit keeps the first files by name") {
    const auto first = load_images(dir.path(), 3);
    CHECK(ids(first) == std::vector<std::string>{"img_0.png", "img_1.png", "img_2.png"});
  }
  SUBCASE("loading is idempotent") {
    const auto again = load_images(dir.path());
    for (std::size_t i = 0; i < images.size(); ++i) CHECK((again[i].pixels == images[i].pixels).all());
  }
}

TEST_CASE("DJL1 batch matches stored bytes / 255") {
  TempDir dir("djl");
  std::mt19937 rng(9);
  std::vector<std::vector<unsigned char>> stored(4, std::vector<unsigned char>(8 * 8 * 3));
  for (auto& img : stored)
    for (auto& b : img) b = static_cast<unsigned char>(rng() & 0xff);
  write_djl1_by_hand(dir / "batch.djl", stored, 8, 8, 3);
  const auto images = load_images(dir / "batch.djl", std::nullopt, {8, 8, 3});
  REQUIRE(images.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(images[i].id == "batch.djl#" + std::to_string(i));
    for (std::size_t j = 0; j < stored[i].size(); ++j) REQUIRE(images[i].pixels[j] == stored[i][j] / 255.0f);
    CHECK(images[i].pixels.minCoeff() >= 0.0f);
    CHECK(images[i].pixels.maxCoeff() <= 1.0f);
  }
  SUBCASE("write_djl1 round trips") {
    write_djl1(dir / "copy.djl", images);
    CHECK(djscc::testing::slurp(dir / "copy.djl") == djscc::testing::slurp(dir / "batch.djl"));
  }
}

TEST_CASE("load errors") {
  TempDir dir("err");
  CHECK_THROWS_AS(load_images(dir / "missing"), Error);
  try {
    load_images(dir / "missing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingPath);
  }

  std::ofstream(dir / "bad.png") << "not a png";
  try {
    load_images(dir.path());
    FAIL("expected CorruptImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptImage);
    CHECK(std::string(e.what()).find("bad.png") != std::string::npos);
  }
  std::filesystem::remove(dir / "bad.png");

  write_png_bytes(dir / "small.png", std::vector<unsigned char>(16 * 16 * 3, 7), 16, 16);
  try {
    load_images(dir.path());
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }

  std::ofstream(dir / "trunc.djl", std::ios::binary) << "DJL1\x05";
  try {
    read_djl1(dir / "trunc.djl");
    FAIL("expected CorruptImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptImage);
  }
}

TEST_CASE("split sizes and determinism") {
  const auto images = djscc::testing::random_images(10, 1, {4, 4, 3});
  const auto a = make_split(images, 0.8, 0.1, 0.1, 1);
  CHECK(a.train.size() == 8);
  CHECK(a.validation.size() == 1);
  CHECK(a.test.size() == 1);
  const auto b = make_split(images, 0.8, 0.1, 0.1, 1);
  CHECK(ids(a.train) == ids(b.train));
  CHECK(ids(a.validation) == ids(b.validation));
  CHECK(ids(a.test) == ids(b.test));
}

TEST_CASE("split matches an independent Fisher-Yates reimplementation") {
  const auto images = djscc::testing::random_images(100, 2, {2, 2, 1});
  const auto split = make_split(images, 0.7, 0.2, 0.1, 7);
  const auto order = reference_shuffle(100, 7);
  REQUIRE(split.train.size() == 70);
  REQUIRE(split.validation.size() == 20);
  REQUIRE(split.test.size() == 10);
  for (std::size_t i = 0; i < 70; ++i) CHECK(split.train[i].id == images[order[i]].id);
  for (std::size_t i = 0; i < 20; ++i) CHECK(split.validation[i].id == images[order[70 + i]].id);
  for (std::size_t i = 0; i < 10; ++i) CHECK(split.test[i].id == images[order[90 + i]].id);
}

TEST_CASE("split partitions ids for many sizes and seeds") {
  for (std::size_t n : {1u, 2u, 3u, 7u, 31u, 64u}) {
    const auto images = djscc::testing::random_images(n, 3, {2, 2, 1});
    for (std::uint64_t seed : {0u, 1u, 99u}) {
      const auto s = make_split(images, 0.6, 0.25, 0.15, seed);
      CHECK(s.train.size() + s.validation.size() + s.test.size() == n);
      CHECK(s.validation.size() == static_cast<std::size_t>(std::floor(n * 0.25)));
      CHECK(s.test.size() == static_cast<std::size_t>(std::floor(n * 0.15)));
      std::set<std::string> seen;
      for (const auto* part : {&s.train, &s.validation, &s.test})
        for (const auto& img : *part) CHECK(seen.insert(img.id).second);
      CHECK(seen.size() == n);
    }
  }
}

TEST_CASE("split errors") {
  const auto images = djscc::testing::random_images(5, 4, {2, 2, 1});
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kBadConfig;
  };
  CHECK(code_of([&] { make_split({}, 0.8, 0.1, 0.1, 1); }) == ErrorCode::kEmptyDataset);
  CHECK(code_of([&] { make_split(images, 0.8, 0.1, 0.2, 1); }) == ErrorCode::kBadFractions);
  CHECK(code_of([&] { make_split(images, 1.1, -0.1, 0.0, 1); }) == ErrorCode::kBadFractions);
  CHECK_NOTHROW(make_split(images, 0.8, 0.1, 0.1 + 1e-12, 1));
}

TEST_CASE("fixtures") {
  const auto constant = synth_fixture(FixtureKind::kConstant, 0);
  CHECK((constant.pixels == 0.5f).all());

  const auto checker = synth_fixture(FixtureKind::kChecker, 0);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c) REQUIRE(checker.at(y, x, c) == static_cast<float>((x + y) % 2));

  const auto gradient = synth_fixture(FixtureKind::kGradient, 0);
  CHECK(gradient.at(0, 0, 0) == 0.0f);
  CHECK(gradient.at(31, 31, 2) == doctest::Approx(1.0));
  CHECK(gradient.pixels.minCoeff() >= 0.0f);
  CHECK(gradient.pixels.maxCoeff() <= 1.0f);

  const auto n1 = synth_fixture(FixtureKind::kNoise, 3);
  const auto n2 = synth_fixture(FixtureKind::kNoise, 3);
  const auto n3 = synth_fixture(FixtureKind::kNoise, 4);
  CHECK((n1.pixels == n2.pixels).all());
  CHECK_FALSE((n1.pixels == n3.pixels).all());
  CHECK(n1.pixels.minCoeff() >= 0.0f);
  CHECK(n1.pixels.maxCoeff() <= 1.0f);

  CHECK(parse_fixture_kind("checker") == FixtureKind::kChecker);
  try {
    parse_fixture_kind("stripes");
    FAIL("expected UnknownKind");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownKind);
  }
}

TEST_CASE("shape parsing and mean image") {
  const ImageShape s = parse_shape("64x48x1");
  CHECK(s.height == 64);
  CHECK(s.width == 48);
  CHECK(s.channels == 1);
  CHECK(to_string(s) == "64x48x1");
  CHECK_THROWS_AS(parse_shape("64x48"), Error);

  std::vector<ImageTensor> images{make_image("a", {2, 2, 1}, 0.2f), make_image("b", {2, 2, 1}, 0.6f)};
  const auto mean = mean_image(images);
  CHECK((mean.pixels - 0.4f).abs().maxCoeff() < 1e-6f);
}
