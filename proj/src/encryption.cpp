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

#include "djscc/encryption.hpp"

#include <algorithm>
#include <cmath>

#include "djscc/binary_io.hpp"

namespace djscc {

bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  for (std::int64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

double LweParams::accumulated_error_std() const { return error_sigma * std::sqrt(pack / 2.0); }

std::int64_t LweParams::delta() const { return (q + p / 2) / p; }

void LweParams::validate() const {
  if (dim < 1 || pack < 1) throw Error(ErrorCode::kBadParams, "dim and pack must be >= 1");
  if (!is_prime(q)) throw Error(ErrorCode::kBadParams, "q must be prime");
  if (q >= (std::int64_t{1} << 31)) throw Error(ErrorCode::kBadParams, "q must fit in 31 bits");
  // Products are formed in double; keep every dot product exact.
  const double qm = static_cast<double>(q - 1);
  if (static_cast<double>(std::max(dim, pack)) * qm * qm >= 9007199254740992.0) {
    throw Error(ErrorCode::kBadParams, "max(dim, pack) * q^2 must stay below 2^53");
  }
  if (p < 2 || p >= q) throw Error(ErrorCode::kBadParams, "plaintext modulus must satisfy 2 <= p < q");
  if (error_sigma < 0.0) throw Error(ErrorCode::kBadParams, "error_sigma must be >= 0");
  if (!(static_cast<double>(q) / static_cast<double>(p) > 4.0 * accumulated_error_std())) {
    throw Error(ErrorCode::kBadParams, "q/p must exceed 4 * sigma * sqrt(pack/2)");
  }
}

std::int64_t sample_discrete_gaussian(double sigma, std::mt19937_64& rng) {
  if (sigma == 0.0) return 0;
  const auto bound = static_cast<std::int64_t>(std::ceil(12.0 * sigma));
  std::uniform_int_distribution<std::int64_t> proposal(-bound, bound);
  std::uniform_real_distribution<double> accept(0.0, 1.0);
  for (;;) {
    const std::int64_t x = proposal(rng);
    if (accept(rng) < std::exp(-static_cast<double>(x * x) / (2.0 * sigma * sigma))) return x;
  }
}

KeyPair keygen(const LweParams& params, std::uint64_t seed) {
  params.validate();
  auto rng = make_stream(seed, Stream::kLweKey);
  std::uniform_int_distribution<std::int64_t> uniform(0, params.q - 1);
  KeyPair keys;
  keys.pk.params = keys.sk.params = params;
  keys.pk.a.resize(params.pack, params.dim);
  for (Eigen::Index i = 0; i < keys.pk.a.size(); ++i) keys.pk.a.data()[i] = uniform(rng);
  keys.sk.s.resize(params.dim);
  for (auto& x : keys.sk.s) x = uniform(rng);
  // Sums stay below 2^53, so the double product is exact.
  const Eigen::VectorXd as = keys.pk.a.cast<double>() * keys.sk.s.cast<double>();
  keys.pk.b.resize(params.pack);
  for (int i = 0; i < params.pack; ++i) {
    const auto e = sample_discrete_gaussian(params.error_sigma, rng);
    keys.pk.b[i] = mod_q(static_cast<std::int64_t>(as[i]) + e, params.q);
  }
  return keys;
}

SymbolCiphertext encrypt(const PublicKey& pk, const IntVector& message, std::uint64_t seed,
                         const EncryptOptions& options) {
  const LweParams& prm = pk.params;
  for (auto m : message) {
    if (m < 0 || m >= prm.p) throw Error(ErrorCode::kMessageOutOfRange, "message entry outside [0,p)");
  }
  const Eigen::Index count = message.size();
  auto rng = make_stream(seed, Stream::kLweEncrypt);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(prm.pack, count);
  if (!options.zero_selection) {
    for (Eigen::Index j = 0; j < count; ++j) {
      for (int i = 0; i < prm.pack; i += 64) {
        std::uint64_t bits = rng();
        for (int t = i; t < std::min(prm.pack, i + 64); ++t, bits >>= 1) r(t, j) = static_cast<double>(bits & 1U);
      }
    }
  }
  // Binary selections keep every sum below pack * q < 2^53: exact in double.
  const Eigen::MatrixXd u = pk.a.cast<double>().transpose() * r;
  const Eigen::VectorXd br = r.transpose() * pk.b.cast<double>();
  SymbolCiphertext ct;
  ct.u.resize(prm.dim, count);
  ct.v.resize(count);
  for (Eigen::Index i = 0; i < u.size(); ++i) ct.u.data()[i] = mod_q(static_cast<std::int64_t>(u.data()[i]), prm.q);
  for (Eigen::Index j = 0; j < count; ++j) {
    ct.v[j] = mod_q(static_cast<std::int64_t>(br[j]) + prm.delta() * message[j], prm.q);
  }
  return ct;
}

IntVector decrypt(const SecretKey& sk, const SymbolCiphertext& ct) {
  const LweParams& prm = sk.params;
  if (ct.u.rows() != prm.dim) throw Error(ErrorCode::kBadParams, "ciphertext dimension mismatch");
  // dim * q^2 < 2^53 for the supported parameter range.
  const Eigen::VectorXd su = ct.u.cast<double>().transpose() * sk.s.cast<double>();
  IntVector m(ct.symbols());
  for (Eigen::Index j = 0; j < ct.symbols(); ++j) {
    const std::int64_t d = mod_q(ct.v[j] - mod_q(static_cast<std::int64_t>(su[j]), prm.q), prm.q);
    // round(d * p / q) with integer arithmetic.
    const std::int64_t rounded = (2 * d * prm.p + prm.q) / (2 * prm.q);
    m[j] = rounded % prm.p;
  }
  return m;
}

IntVector quantize_symbols(const ComplexVector<double>& z, std::int64_t p, double clip) {
  if (p < 2 || !(clip > 0.0)) throw Error(ErrorCode::kBadParams, "quantizer needs p >= 2 and clip > 0");
  IntVector m(2 * z.size());
  const double cell = 2.0 * clip / static_cast<double>(p);
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    for (int part = 0; part < 2; ++part) {
      const double v = std::clamp(part == 0 ? z[j].real() : z[j].imag(), -clip, clip);
      const auto idx = static_cast<std::int64_t>(std::floor((v + clip) / cell));
      m[2 * j + part] = std::clamp<std::int64_t>(idx, 0, p - 1);
    }
  }
  return m;
}

ComplexVector<double> dequantize_symbols(const IntVector& m, std::int64_t p, double clip) {
  if (m.size() % 2 != 0) throw Error(ErrorCode::kOddLength, "quantized vector must have even length");
  auto center = [&](std::int64_t idx) {
    return static_cast<double>(2 * idx + 1 - p) * clip / static_cast<double>(p);
  };
  ComplexVector<double> z(m.size() / 2);
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = {center(m[2 * j]), center(m[2 * j + 1])};
  return z;
}

namespace {

double constellation_step(std::int64_t q) {
  const auto qd = static_cast<double>(q);
  return std::sqrt(6.0 / (qd * qd - 1.0));
}

}  // namespace

ComplexVector<double> map_to_constellation(const IntVector& integers, std::int64_t q) {
  const double step = constellation_step(q);
  const double mid = static_cast<double>(q - 1) / 2.0;
  ComplexVector<double> s((integers.size() + 1) / 2);
  s.setZero();
  for (Eigen::Index i = 0; i < integers.size(); ++i) {
    const double a = (static_cast<double>(integers[i]) - mid) * step;
    if (i % 2 == 0) {
      s[i / 2].real(a);
    } else {
      s[i / 2].imag(a);
    }
  }
  return s;
}

IntVector demap_from_constellation(const ComplexVector<double>& symbols, std::int64_t q, Eigen::Index count) {
  const double step = constellation_step(q);
  const double mid = static_cast<double>(q - 1) / 2.0;
  IntVector out(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double a = i % 2 == 0 ? symbols[i / 2].real() : symbols[i / 2].imag();
    out[i] = std::clamp<std::int64_t>(std::llround(a / step + mid), 0, q - 1);
  }
  return out;
}

SecureResult secure_transmit(const ChannelSymbolBlock<double>& z, const KeyPair& keys, double snr_db,
                             std::uint64_t seed, double clip, std::uint64_t block_index) {
  const LweParams& prm = keys.pk.params;
  const IntVector m = quantize_symbols(z.symbols, prm.p, clip);
  const SymbolCiphertext ct = encrypt(keys.pk, m, mix_seed(seed + block_index));

  IntVector wire(ct.u.size() + ct.v.size());
  wire.head(ct.u.size()) = ct.u.reshaped();
  wire.tail(ct.v.size()) = ct.v;
  ChannelSymbolBlock<double> tx{map_to_constellation(wire, prm.q), 1.0};
  const auto rx = awgn_transmit(tx, snr_db, seed, block_index);
  const IntVector heard = demap_from_constellation(rx.symbols, prm.q, wire.size());

  SymbolCiphertext received;
  received.u = heard.head(ct.u.size()).reshaped(prm.dim, ct.v.size());
  received.v = heard.tail(ct.v.size());
  const IntVector decrypted = decrypt(keys.sk, received);

  SecureResult out{{dequantize_symbols(decrypted, prm.p, clip), z.power_budget}, {}};
  const ComplexVector<double> clean = dequantize_symbols(m, prm.p, clip);
  SecureStats& st = out.stats;
  st.plaintext_symbols = m.size();
  st.symbol_errors = (decrypted.array() != m.array()).count();
  st.channel_integer_errors = (heard.array() != wire.array()).count();
  st.channel_uses = tx.size();
  const double n = static_cast<double>(m.size());
  st.quantization_mse = (clean - z.symbols).squaredNorm() / n;
  st.failure_mse = (out.block.symbols - clean).squaredNorm() / n;
  st.total_mse = (out.block.symbols - z.symbols).squaredNorm() / n;
  return out;
}

namespace {

constexpr std::uint16_t kKeyVersion = 1;

void put_header(ByteWriter& w, const LweParams& prm, std::uint8_t kind) {
  w.put_raw("DJK1");
  w.put<std::uint16_t>(kKeyVersion);
  w.put<std::uint8_t>(kind);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(prm.dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(prm.q));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(prm.p));
  w.put_f64(prm.error_sigma);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(prm.pack));
}

LweParams get_header(ByteReader& r, std::uint8_t kind) {
  if (r.get_raw(4) != "DJK1") throw Error(ErrorCode::kKeyFileCorrupt, "bad key file magic");
  if (r.get<std::uint16_t>() != kKeyVersion) throw Error(ErrorCode::kKeyFileCorrupt, "unsupported key file version");
  if (r.get<std::uint8_t>() != kind) throw Error(ErrorCode::kKeyFileCorrupt, "wrong key kind");
  LweParams prm;
  prm.dim = static_cast<int>(r.get<std::uint32_t>());
  prm.q = r.get<std::uint32_t>();
  prm.p = r.get<std::uint32_t>();
  prm.error_sigma = r.get_f64();
  prm.pack = static_cast<int>(r.get<std::uint32_t>());
  try {
    prm.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kKeyFileCorrupt, e.what());
  }
  return prm;
}

std::int64_t get_residue(ByteReader& r, std::int64_t q) {
  const std::int64_t x = r.get<std::uint32_t>();
  if (x >= q) throw Error(ErrorCode::kKeyFileCorrupt, "key entry outside [0,q)");
  return x;
}

std::vector<unsigned char> read_key_bytes(const std::filesystem::path& path) {
  try {
    return read_file_bytes(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kKeyFileCorrupt, e.what());
  }
}

}  // namespace

void save_public_key(const std::filesystem::path& path, const PublicKey& pk) {
  ByteWriter w;
  put_header(w, pk.params, 0);
  for (Eigen::Index i = 0; i < pk.a.rows(); ++i)
    for (Eigen::Index j = 0; j < pk.a.cols(); ++j) w.put<std::uint32_t>(static_cast<std::uint32_t>(pk.a(i, j)));
  for (auto x : pk.b) w.put<std::uint32_t>(static_cast<std::uint32_t>(x));
  write_file_bytes(path, w.bytes());
}

void save_secret_key(const std::filesystem::path& path, const SecretKey& sk) {
  ByteWriter w;
  put_header(w, sk.params, 1);
  for (auto x : sk.s) w.put<std::uint32_t>(static_cast<std::uint32_t>(x));
  write_file_bytes(path, w.bytes());
}

PublicKey load_public_key(const std::filesystem::path& path) {
  const auto bytes = read_key_bytes(path);
  ByteReader r(bytes, ErrorCode::kKeyFileCorrupt);
  PublicKey pk;
  pk.params = get_header(r, 0);
  pk.a.resize(pk.params.pack, pk.params.dim);
  for (Eigen::Index i = 0; i < pk.a.rows(); ++i)
    for (Eigen::Index j = 0; j < pk.a.cols(); ++j) pk.a(i, j) = get_residue(r, pk.params.q);
  pk.b.resize(pk.params.pack);
  for (auto& x : pk.b) x = get_residue(r, pk.params.q);
  if (!r.done()) throw Error(ErrorCode::kKeyFileCorrupt, "trailing bytes in key file");
  return pk;
}

SecretKey load_secret_key(const std::filesystem::path& path) {
  const auto bytes = read_key_bytes(path);
  ByteReader r(bytes, ErrorCode::kKeyFileCorrupt);
  SecretKey sk;
  sk.params = get_header(r, 1);
  sk.s.resize(sk.params.dim);
  for (auto& x : sk.s) x = get_residue(r, sk.params.q);
  if (!r.done()) throw Error(ErrorCode::kKeyFileCorrupt, "trailing bytes in key file");
  return sk;
}

}  // namespace djscc
