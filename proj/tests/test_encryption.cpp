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

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <fstream>

#include "djscc/channel.hpp"
#include "djscc/encryption.hpp"
#include "test_util.hpp"

using namespace djscc;

namespace {

LweParams small_params() {
  LweParams p;
  p.dim = 8;
  p.q = 12289;
  p.p = 8;
  p.error_sigma = 0.0;
  p.pack = 16;
  return p;
}

IntVector uniform_message(Eigen::Index n, std::int64_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  IntVector m(n);
  for (auto& v : m) v = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(p));
  return m;
}

}  // namespace

TEST_CASE("is_prime") {
  CHECK(is_prime(2));
  CHECK(is_prime(12289));
  CHECK(is_prime(65537));
  CHECK_FALSE(is_prime(1));
  CHECK_FALSE(is_prime(12288));
  CHECK_FALSE(is_prime(7 * 1753));
}

TEST_CASE("exhaustive round trip at small parameters") {
  const auto keys = keygen(small_params(), 3);
  IntVector m(4);
  int failures = 0;
  for (int code = 0; code < 8 * 8 * 8 * 8; ++code) {
    for (int j = 0, c = code; j < 4; ++j, c /= 8) m[j] = c % 8;
    const auto ct = encrypt(keys.pk, m, static_cast<std::uint64_t>(code));
    if (decrypt(keys.sk, ct) != m) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("zero selection leaves only the scaled message") {
  const auto keys = keygen(small_params(), 4);
  const IntVector m = uniform_message(10, 8, 1);
  const auto ct = encrypt(keys.pk, m, 5, {.zero_selection = true});
  CHECK((ct.u.array() == 0).all());
  for (Eigen::Index j = 0; j < m.size(); ++j) CHECK(ct.v[j] == keys.pk.params.delta() * m[j] % keys.pk.params.q);
  CHECK(decrypt(keys.sk, ct) == m);
}

TEST_CASE("key generation shape and ranges") {
  const LweParams prm;
  const auto keys = keygen(prm, 1);
  CHECK(keys.pk.a.rows() == prm.pack);
  CHECK(keys.pk.a.cols() == prm.dim);
  CHECK(keys.pk.b.size() == prm.pack);
  CHECK(keys.sk.s.size() == prm.dim);
  CHECK((keys.pk.a.array() >= 0).all());
  CHECK((keys.pk.a.array() < prm.q).all());
  // b - A s is the small error vector.
  const IntVector e = keys.pk.b - (keys.pk.a * keys.sk.s).unaryExpr([&](std::int64_t x) { return mod_q(x, prm.q); });
  for (auto v : e) {
    const auto centered = mod_q(v, prm.q) > prm.q / 2 ? mod_q(v, prm.q) - prm.q : mod_q(v, prm.q);
    CHECK(std::abs(centered) <= static_cast<std::int64_t>(std::ceil(12 * prm.error_sigma)));
  }
  const auto again = keygen(prm, 1);
  CHECK(again.pk.a == keys.pk.a);
  CHECK(again.sk.s == keys.sk.s);
  CHECK(keygen(prm, 2).sk.s != keys.sk.s);
}

TEST_CASE("discrete gaussian moments") {
  std::mt19937_64 rng(11);
  double sum = 0, sq = 0;
  constexpr int kN = 200000;
  for (int i = 0; i < kN; ++i) {
    const double x = static_cast<double>(sample_discrete_gaussian(3.2, rng));
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / kN) < 0.05);
  CHECK(std::sqrt(sq / kN) == doctest::Approx(3.2).epsilon(0.02));
  CHECK(sample_discrete_gaussian(0.0, rng) == 0);
}

TEST_CASE("decryption failure rate at default parameters") {
  const LweParams prm;
  CHECK_NOTHROW(prm.validate());
  const auto keys = keygen(prm, 7);
  Eigen::Index failures = 0, total = 0;
  for (std::uint64_t block = 0; block < 10; ++block) {
    const IntVector m = uniform_message(10000, prm.p, block);
    failures += (decrypt(keys.sk, encrypt(keys.pk, m, block)).array() != m.array()).count();
    total += m.size();
  }
  CHECK(static_cast<double>(failures) / total < 1e-3);
}

TEST_CASE("wrong key decrypts to noise") {
  const LweParams prm;
  const auto keys = keygen(prm, 7);
  const auto other = keygen(prm, 8);
  const IntVector m = uniform_message(20000, prm.p, 3);
  const auto wrong = decrypt(other.sk, encrypt(keys.pk, m, 1));
  const double rate = static_cast<double>((wrong.array() != m.array()).count()) / m.size();
  CHECK(rate >= 1.0 - 2.0 / prm.p);
}

TEST_CASE("message range is enforced") {
  const auto keys = keygen(small_params(), 1);
  IntVector m(2);
  m << 0, 8;
  try {
    encrypt(keys.pk, m, 1);
    FAIL("expected MessageOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMessageOutOfRange);
  }
  m << -1, 0;
  CHECK_THROWS_AS(encrypt(keys.pk, m, 1), Error);
}

TEST_CASE("parameter validation") {
  LweParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.delta() == 192);
  CHECK(p.accumulated_error_std() == doctest::Approx(3.2 * std::sqrt(32.0)));
  p.q = 12288;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.p = 1;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.pack = 1024;  // q/p = 192 < 4 * 3.2 * sqrt(512)
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.error_sigma = -1;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.dim = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.q = 2147483647;  // prime, but dim * q^2 overflows exact doubles
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK_THROWS_AS(keygen(p, 1), Error);
}

TEST_CASE("quantizer error is bounded by half a cell") {
  const double clip = 3.0;
  for (std::int64_t p : {2, 8, 64}) {
    ComplexVector<double> z(2000);
    std::mt19937_64 rng(static_cast<std::uint64_t>(p));
    std::uniform_real_distribution<double> u(-clip, clip);
    for (auto& v : z) v = {u(rng), u(rng)};
    const IntVector m = quantize_symbols(z, p, clip);
    CHECK(m.size() == 4000);
    CHECK((m.array() >= 0).all());
    CHECK((m.array() < p).all());
    const auto back = dequantize_symbols(m, p, clip);
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      CHECK(std::abs(back[j].real() - z[j].real()) <= clip / p + 1e-12);
      CHECK(std::abs(back[j].imag() - z[j].imag()) <= clip / p + 1e-12);
    }
    // Cell centers are fixed points.
    CHECK(quantize_symbols(back, p, clip) == m);
  }
  ComplexVector<double> big(1);
  big[0] = {100.0, -100.0};
  const IntVector m = quantize_symbols(big, 64, clip);
  CHECK(m[0] == 63);
  CHECK(m[1] == 0);
  CHECK_THROWS_AS(quantize_symbols(big, 1, clip), Error);
  CHECK_THROWS_AS(dequantize_symbols(IntVector::Zero(3), 8, clip), Error);
}

TEST_CASE("constellation has unit average power and inverts") {
  const std::int64_t q = 12289;
  IntVector all(q + 1);
  for (std::int64_t i = 0; i < q; ++i) all[i] = i;
  all[q] = 0;
  const auto s = map_to_constellation(all.head(q - 1), q);
  // Exact mean power over every level pair is close to 1.
  double power = 0;
  for (std::int64_t i = 0; i < q; ++i) {
    const double a = (static_cast<double>(i) - (q - 1) / 2.0) * std::sqrt(6.0 / (static_cast<double>(q) * q - 1.0));
    power += a * a;
  }
  CHECK(2 * power / q == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(demap_from_constellation(s, q, q - 1) == all.head(q - 1));
  CHECK(demap_from_constellation(map_to_constellation(all.head(3), q), q, 3) == all.head(3));
}

TEST_CASE("secure transmission without noise is exact up to quantization") {
  const auto keys = keygen(LweParams{}, 5);
  ChannelSymbolBlock<double> z{ComplexVector<double>(256), 1.0};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  for (auto& v : z.symbols) v = {n(rng), n(rng)};
  const auto r = secure_transmit(z, keys, kNoiseFreeSnrDb, 3);
  CHECK(r.stats.symbol_errors == 0);
  CHECK(r.stats.channel_integer_errors == 0);
  CHECK(r.stats.failure_mse == 0.0);
  CHECK(r.stats.plaintext_symbols == 512);
  CHECK(r.stats.channel_uses == (512 * (512 + 1)) / 2);
  CHECK(r.stats.total_mse == doctest::Approx(r.stats.quantization_mse));
  CHECK(r.stats.quantization_mse <= std::pow(3.0 / 64, 2) + 1e-12);
  const auto again = secure_transmit(z, keys, 20.0, 3);
  const auto twice = secure_transmit(z, keys, 20.0, 3);
  CHECK(again.block.symbols == twice.block.symbols);
  CHECK(again.stats.channel_integer_errors > 0);
}

TEST_CASE("key files round trip") {
  djscc::testing::TempDir dir("keys");
  const auto keys = keygen(small_params(), 9);
  save_public_key(dir / "pub.djk", keys.pk);
  save_secret_key(dir / "sec.djk", keys.sk);
  const auto pk = load_public_key(dir / "pub.djk");
  const auto sk = load_secret_key(dir / "sec.djk");
  CHECK(pk.a == keys.pk.a);
  CHECK(pk.b == keys.pk.b);
  CHECK(sk.s == keys.sk.s);
  CHECK(pk.params.error_sigma == keys.pk.params.error_sigma);
  CHECK(sk.params.pack == keys.sk.params.pack);

  auto expect_corrupt = [](auto&& fn) {
    try {
      fn();
      FAIL("expected KeyFileCorrupt");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kKeyFileCorrupt);
    }
  };
  // Kind byte mismatch.
  expect_corrupt([&] { load_secret_key(dir / "pub.djk"); });
  expect_corrupt([&] { load_public_key(dir / "sec.djk"); });
  // Truncation.
  const auto raw = djscc::testing::slurp(dir / "pub.djk");
  const std::string bytes(raw.begin(), raw.end());
  std::ofstream(dir / "short.djk", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  expect_corrupt([&] { load_public_key(dir / "short.djk"); });
  std::ofstream(dir / "magic.djk", std::ios::binary) << "XXXX" << bytes.substr(4);
  expect_corrupt([&] { load_public_key(dir / "magic.djk"); });
  CHECK_THROWS_AS(load_public_key(dir / "absent.djk"), Error);
}

TEST_CASE("zero-error keys satisfy b = A s exactly") {
  auto prm = LweParams{};
  prm.error_sigma = 0.0;
  const auto keys = keygen(prm, 3);
  const IntVector as = (keys.pk.a * keys.sk.s).unaryExpr([&](std::int64_t x) { return mod_q(x, prm.q); });
  CHECK(as == keys.pk.b);
}

TEST_CASE("key error samples have the configured spread") {
  LweParams prm;
  prm.pack = 100000;
  prm.dim = 1;
  prm.error_sigma = 3.2;
  // q/p must cover the long pack's accumulated error.
  prm.q = 65537;
  prm.p = 2;
  const auto keys = keygen(prm, 12);
  const IntVector as = (keys.pk.a * keys.sk.s).unaryExpr([&](std::int64_t x) { return mod_q(x, prm.q); });
  double sq = 0;
  for (Eigen::Index i = 0; i < as.size(); ++i) {
    std::int64_t e = mod_q(keys.pk.b[i] - as[i], prm.q);
    if (e > prm.q / 2) e -= prm.q;
    sq += static_cast<double>(e * e);
  }
  CHECK(std::sqrt(sq / static_cast<double>(as.size())) == doctest::Approx(3.2).epsilon(0.02));
}

TEST_CASE("ciphertext entries look uniform") {
  const LweParams prm;
  const auto keys = keygen(prm, 21);
  const IntVector m = IntVector::Zero(200);
  const auto ct = encrypt(keys.pk, m, 4);
  std::vector<double> counts(static_cast<std::size_t>(prm.q), 0.0);
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < ct.u.size() && n < 100000; ++i, ++n) counts[static_cast<std::size_t>(ct.u.data()[i])] += 1;
  double chi2 = 0;
  const double expected = static_cast<double>(n) / static_cast<double>(prm.q);
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(static_cast<double>(prm.q - 1));
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.001);
  CHECK(encrypt(keys.pk, m, 4).u == ct.u);
}

TEST_CASE("modular reduction stays in range") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> any(-(std::int64_t{1} << 40), std::int64_t{1} << 40);
  for (int i = 0; i < 1000000; ++i) {
    const std::int64_t x = any(rng);
    const std::int64_t r = mod_q(x, 12289);
    REQUIRE(r >= 0);
    REQUIRE(r < 12289);
    REQUIRE((x - r) % 12289 == 0);
  }
}

TEST_CASE("quantizer endpoints and symmetry") {
  ComplexVector<double> z(2);
  z[0] = {0.0, 3.0};
  z[1] = {-3.0, 1e-9};
  const IntVector odd = quantize_symbols(z, 7, 3.0);
  CHECK(odd[0] == 3);
  CHECK(dequantize_symbols(odd, 7, 3.0)[0].real() == 0.0);
  CHECK(odd[1] == 6);
  CHECK(odd[2] == 0);
  const IntVector even = quantize_symbols(z, 64, 3.0);
  CHECK(even[1] == 63);
  CHECK(even[2] == 0);
}

TEST_CASE("secure transmission decomposes into quantization and failure noise") {
  const auto keys = keygen(LweParams{}, 5);
  ChannelSymbolBlock<double> z{standard_complex_noise<double>(256, 3, 0), 1.0};
  const auto r = secure_transmit(z, keys, 20.0, 8);
  const double floor = 3.0 * 3.0 / (3.0 * 64 * 64);
  // Unit-power Gaussian latents rarely clip at 3, so quantization noise is the uniform floor.
  CHECK(r.stats.quantization_mse == doctest::Approx(floor).epsilon(0.15));
  const ComplexVector<double> clean = dequantize_symbols(quantize_symbols(z.symbols, 64, 3.0), 64, 3.0);
  const double n = 512;
  const double cross = 2.0 * ((r.block.symbols - clean).array() * (clean - z.symbols).array().conjugate()).real().sum() / n;
  CHECK(r.stats.total_mse == doctest::Approx(r.stats.quantization_mse + r.stats.failure_mse + cross).epsilon(1e-9));
}
