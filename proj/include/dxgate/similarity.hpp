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

#ifndef DXGATE_SIMILARITY_HPP
#define DXGATE_SIMILARITY_HPP

#include <span>

#include <Eigen/Core>

#include "dxgate/types.hpp"

namespace dxgate {

// u.v / (|u||v|), clamped to [-1, 1] against rounding.
// Throws std::invalid_argument on dimension mismatch or a zero vector.
double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u,
                         const Eigen::Ref<const Eigen::VectorXd>& v);

// Percentage of positions where both sequences carry the same token.
// Throws on length mismatch or empty input.
double percent_unchanged(std::span<const TokenId> original,
                         std::span<const TokenId> sanitized);

}  // namespace dxgate

#endif  // DXGATE_SIMILARITY_HPP
