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

#include "djscc/channel.hpp"

namespace djscc {

ChannelModel parse_channel_model(std::string_view name) {
  if (name == "awgn") return ChannelModel::kAwgn;
  if (name == "rayleigh") return ChannelModel::kRayleigh;
  throw Error(ErrorCode::kBadConfig, "unknown channel model '" + std::string(name) + "'");
}

std::string to_string(ChannelModel model) { return model == ChannelModel::kAwgn ? "awgn" : "rayleigh"; }

}  // namespace djscc
