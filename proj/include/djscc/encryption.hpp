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

#ifndef DJSCC_ENCRYPTION_HPP_
#define DJSCC_ENCRYPTION_HPP_

// Regev-style LWE public-key encryption of quantized channel symbols.
// Demonstration parameters only; no security level is claimed.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>

#include "djscc/channel.hpp"

namespace djscc {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

struct LweParams {
  int dim = 512;           // secret dimension
  std::int64_t q = 12289;  // prime ciphertext modulus
  std::int64_t p = 64;     // plaintext modulus
  double error_sigma = 3.2;
  int pack = 64;           // rows m of the public matrix

  // Std-dev of the decryption error e.r for a uniform binary r.
  double accumulated_error_std() const;
  // Throws BadParams unless q is prime, 2 <= p < q, q/p exceeds four
  // accumulated-error standard deviations and max(dim, pack) * q^2 < 2^53.
  void validate() const;
  std::int64_t delta() const;  // round(q/p)
};

struct PublicKey {
  LweParams params;
  IntMatrix a;  // (pack, dim) over Z_q
  IntVector b;  // pack entries, A s + e mod q
};

struct SecretKey {
  LweParams params;
  IntVector s;  // dim entries over Z_q
};

struct KeyPair {
  PublicKey pk;
  SecretKey sk;
};

// One column of u per plaintext symbol: u_j = A^T r_j, v_j = b.r_j + delta m_j.
struct SymbolCiphertext {
  IntMatrix u;  // (dim, symbols)
  IntVector v;  // symbols

  Eigen::Index symbols() const { return v.size(); }
};

inline std::int64_t mod_q(std::int64_t x, std::int64_t q) {
  const std::int64_t r = x % q;
  return r < 0 ? r + q : r;
}

// Exact discrete Gaussian over Z by rejection from a uniform proposal on
// [-ceil(12 sigma), ceil(12 sigma)]. sigma == 0 returns 0.
std::int64_t sample_discrete_gaussian(double sigma, std::mt19937_64& rng);

KeyPair keygen(const LweParams& params, std::uint64_t seed);

struct EncryptOptions {
  bool zero_selection = false;  // test hook: r_j = 0
};

SymbolCiphertext encrypt(const PublicKey& pk, const IntVector& message, std::uint64_t seed,
                         const EncryptOptions& options = {});
IntVector decrypt(const SecretKey& sk, const SymbolCiphertext& ct);

// Mid-rise uniform quantizer on [-clip, clip] with p cells over the 2k real
// components (re/im interleaved); dequantize returns cell centers.
IntVector quantize_symbols(const ComplexVector<double>& z, std::int64_t p, double clip);
ComplexVector<double> dequantize_symbols(const IntVector& m, std::int64_t p, double clip);

// q-ary amplitude constellation: two integers per complex symbol, unit
// average power for uniformly distributed integers.
ComplexVector<double> map_to_constellation(const IntVector& integers, std::int64_t q);
IntVector demap_from_constellation(const ComplexVector<double>& symbols, std::int64_t q, Eigen::Index count);

struct SecureStats {
  Eigen::Index plaintext_symbols = 0;
  Eigen::Index symbol_errors = 0;          // decrypted m' != m
  Eigen::Index channel_integer_errors = 0; // demapped ciphertext integers that changed
  Eigen::Index channel_uses = 0;           // complex symbols sent
  double quantization_mse = 0.0;           // per real component
  double failure_mse = 0.0;                // (deq(m') - deq(m))^2 per component
  double total_mse = 0.0;                  // (z_hat - z)^2 per component
};

struct SecureResult {
  ChannelSymbolBlock<double> block;  // decrypted, dequantized z_hat
  SecureStats stats;
};

// quantize -> encrypt -> constellation -> AWGN -> demap -> decrypt -> dequantize.
SecureResult secure_transmit(const ChannelSymbolBlock<double>& z, const KeyPair& keys, double snr_db,
                             std::uint64_t seed, double clip = 3.0, std::uint64_t block_index = 0);

// Key files: "DJK1", u16 version, u8 kind (0 public, 1 secret), params
// (u32 dim, u32 q, u32 p, f64 sigma, u32 pack), then u32 arrays
// (public: A row-major then b; secret: s).
void save_public_key(const std::filesystem::path& path, const PublicKey& pk);
void save_secret_key(const std::filesystem::path& path, const SecretKey& sk);
PublicKey load_public_key(const std::filesystem::path& path);
SecretKey load_secret_key(const std::filesystem::path& path);

bool is_prime(std::int64_t n);

}  // namespace djscc

#endif  // DJSCC_ENCRYPTION_HPP_
