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

#ifndef DJSCC_COMMON_HPP_
#define DJSCC_COMMON_HPP_

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace djscc {

enum class ErrorCode {
  kMissingPath,
  kCorruptImage,
  kShapeMismatch,
  kEmptyDataset,
  kBadFractions,
  kUnknownKind,
  kZeroVector,
  kNonPositivePower,
  kNearZeroFading,
  kNonFiniteActivation,
  kLayerOutOfRange,
  kOddLength,
  kEmptyValidationSet,
  kEmptyTable,
  kBadRange,
  kDivergedLoss,
  kDiskWriteFailure,
  kImageTooSmall,
  kBadParams,
  kMessageOutOfRange,
  kBudgetTooSmall,
  kCheckpointVersionMismatch,
  kKeyFileCorrupt,
  kBadConfig,
};

const char* error_code_name(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Build version ("git describe" at configure time, or the project version).
const char* version_string();

// SNR value that disables channel noise.
inline constexpr double kNoiseFreeSnrDb = std::numeric_limits<double>::infinity();

inline bool is_noise_free(double snr_db) { return snr_db == kNoiseFreeSnrDb; }

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named PRNG stream: mt19937_64 seeded from (seed, stream tag, index).
// Stream tags are part of the reproducibility contract; do not renumber.
enum class Stream : std::uint64_t {
  kShuffle = 1,
  kFixture = 2,
  kAwgn = 3,
  kFading = 4,
  kInit = 5,
  kTrainSnr = 6,
  kTrainLayers = 7,
  kTrainOrder = 8,
  kLweKey = 9,
  kLweEncrypt = 10,
  kGradcheck = 11,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream tag, std::uint64_t index = 0) {
  return std::mt19937_64(mix_seed(mix_seed(seed ^ (static_cast<std::uint64_t>(tag) << 56)) + index));
}

}  // namespace djscc

#endif  // DJSCC_COMMON_HPP_
