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

#ifndef DJSCC_CHANNEL_HPP_
#define DJSCC_CHANNEL_HPP_

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "djscc/common.hpp"

namespace djscc {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
struct ChannelSymbolBlock {
  ComplexVector<Scalar> symbols;
  Scalar power_budget = Scalar(1);

  Eigen::Index size() const { return symbols.size(); }
};

enum class ChannelModel { kAwgn, kRayleigh };

ChannelModel parse_channel_model(std::string_view name);
std::string to_string(ChannelModel model);

// CSI known at both ends. fading_gain is set iff model is Rayleigh.
struct ChannelState {
  double snr_db = 10.0;
  ChannelModel model = ChannelModel::kAwgn;
  std::optional<std::complex<double>> fading_gain;

  static ChannelState awgn(double snr_db) { return {snr_db, ChannelModel::kAwgn, std::nullopt}; }
  static ChannelState rayleigh(double snr_db, std::complex<double> h) {
    return {snr_db, ChannelModel::kRayleigh, h};
  }
};

template <typename Derived>
auto average_power(const Eigen::MatrixBase<Derived>& symbols) {
  return symbols.squaredNorm() / static_cast<typename Derived::RealScalar>(symbols.size());
}

template <typename Scalar>
Scalar average_power(const ChannelSymbolBlock<Scalar>& block) {
  return average_power(block.symbols);
}

// Scales raw so that (1/k) sum |z_i|^2 == power_budget.
template <typename Scalar>
ChannelSymbolBlock<Scalar> normalize_power(const ComplexVector<Scalar>& raw, Scalar power_budget = Scalar(1)) {
  if (!(power_budget > Scalar(0))) throw Error(ErrorCode::kNonPositivePower, "power budget must be > 0");
  if (raw.size() == 0) throw Error(ErrorCode::kZeroVector, "empty symbol vector");
  const Scalar energy = raw.squaredNorm();
  if (!(energy > Scalar(0))) throw Error(ErrorCode::kZeroVector, "cannot normalize an all-zero vector");
  const Scalar scale = std::sqrt(static_cast<Scalar>(raw.size()) * power_budget / energy);
  return {raw * scale, power_budget};
}

// Total complex noise variance: sigma^2 = P / 10^(snr/10); sigma^2/2 per real part.
inline double snr_db_to_noise_variance(double snr_db, double signal_power = 1.0) {
  if (!(signal_power > 0.0)) throw Error(ErrorCode::kNonPositivePower, "signal power must be > 0");
  if (is_noise_free(snr_db)) return 0.0;
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

// CN(0,1) draws for block `block_index` of stream `seed`. The same draws are
// reused across SNRs, so curves over an SNR grid share noise realisations.
template <typename Scalar>
ComplexVector<Scalar> standard_complex_noise(Eigen::Index k, std::uint64_t seed, std::uint64_t block_index = 0) {
  auto rng = make_stream(seed, Stream::kAwgn, block_index);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexVector<Scalar> n(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    n[i] = {static_cast<Scalar>(re), static_cast<Scalar>(im)};
  }
  return n;
}

template <typename Scalar>
ChannelSymbolBlock<Scalar> awgn_transmit(const ChannelSymbolBlock<Scalar>& block, double snr_db, std::uint64_t seed,
                                         std::uint64_t block_index = 0) {
  const double variance = snr_db_to_noise_variance(snr_db, static_cast<double>(block.power_budget));
  if (variance == 0.0) return block;
  const auto sigma = static_cast<Scalar>(std::sqrt(variance));
  ChannelSymbolBlock<Scalar> out = block;
  out.symbols += sigma * standard_complex_noise<Scalar>(block.size(), seed, block_index);
  return out;
}

inline std::complex<double> draw_fading_gain(std::uint64_t seed, std::uint64_t block_index = 0) {
  auto rng = make_stream(seed, Stream::kFading, block_index);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

template <typename Scalar>
struct FadedBlock {
  ChannelSymbolBlock<Scalar> received;
  std::complex<double> fading_gain;
};

// Slow fading: one h ~ CN(0,1) per block; z_hat = h z + n.
template <typename Scalar>
FadedBlock<Scalar> rayleigh_transmit(const ChannelSymbolBlock<Scalar>& block, double snr_db, std::uint64_t seed,
                                     std::uint64_t block_index = 0,
                                     std::optional<std::complex<double>> forced_gain = std::nullopt) {
  const std::complex<double> h = forced_gain ? *forced_gain : draw_fading_gain(seed, block_index);
  ChannelSymbolBlock<Scalar> faded = block;
  faded.symbols *= std::complex<Scalar>(static_cast<Scalar>(h.real()), static_cast<Scalar>(h.imag()));
  return {awgn_transmit(faded, snr_db, seed, block_index), h};
}

template <typename Scalar>
ChannelSymbolBlock<Scalar> equalize(const ChannelSymbolBlock<Scalar>& received, std::complex<double> h) {
  if (std::abs(h) <= 1e-12) throw Error(ErrorCode::kNearZeroFading, "|h| below 1e-12");
  ChannelSymbolBlock<Scalar> out = received;
  const std::complex<double> inv = 1.0 / h;
  out.symbols *= std::complex<Scalar>(static_cast<Scalar>(inv.real()), static_cast<Scalar>(inv.imag()));
  return out;
}

}  // namespace djscc

#endif  // DJSCC_CHANNEL_HPP_
