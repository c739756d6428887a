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

#include "djscc/common.hpp"

namespace djscc {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingPath: return "MissingPath";
    case ErrorCode::kCorruptImage: return "CorruptImage";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kBadFractions: return "BadFractions";
    case ErrorCode::kUnknownKind: return "UnknownKind";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNonPositivePower: return "NonPositivePower";
    case ErrorCode::kNearZeroFading: return "NearZeroFading";
    case ErrorCode::kNonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::kLayerOutOfRange: return "LayerOutOfRange";
    case ErrorCode::kOddLength: return "OddLength";
    case ErrorCode::kEmptyValidationSet: return "EmptyValidationSet";
    case ErrorCode::kEmptyTable: return "EmptyTable";
    case ErrorCode::kBadRange: return "BadRange";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kDiskWriteFailure: return "DiskWriteFailure";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kBadParams: return "BadParams";
    case ErrorCode::kMessageOutOfRange: return "MessageOutOfRange";
    case ErrorCode::kBudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::kCheckpointVersionMismatch: return "CheckpointVersionMismatch";
    case ErrorCode::kKeyFileCorrupt: return "KeyFileCorrupt";
    case ErrorCode::kBadConfig: return "BadConfig";
  }
  return "Unknown";
}

#ifndef DJSCC_VERSION
#define DJSCC_VERSION "0.1.0"
#endif

const char* version_string() { return DJSCC_VERSION; }

}  // namespace djscc
