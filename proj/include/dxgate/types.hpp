// Copyright 2026 The dxgate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DXGATE_TYPES_HPP
#define DXGATE_TYPES_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace dxgate {

// Embedding matrices are stored row-major so a token row is contiguous.
using MatrixXfRM =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using TokenId = std::uint32_t;

// Sentinel for words absent from the vocabulary (passthrough policy).
inline constexpr TokenId kOovToken = std::numeric_limits<TokenId>::max();

enum class SearchBackend { kExact, kApproximate };

inline std::string to_string(SearchBackend b) {
  return b == SearchBackend::kExact ? "exact" : "ann";
}

inline SearchBackend backend_from_string(const std::string& s) {
  if (s == "exact") return SearchBackend::kExact;
  if (s == "ann" || s == "approximate") return SearchBackend::kApproximate;
  throw std::invalid_argument("unknown search backend: " + s);
}

}  // namespace dxgate

#endif  // DXGATE_TYPES_HPP
