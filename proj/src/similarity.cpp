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

#include "dxgate/similarity.hpp"

#include <algorithm>
#include <stdexcept>

namespace dxgate {

double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& u,
                         const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw std::invalid_argument(
        "cosine_similarity: undefined for a zero vector");
  }
  const double sim = u.dot(v) / (nu * nv);
  return std::clamp(sim, -1.0, 1.0);
}

double percent_unchanged(std::span<const TokenId> original,
                         std::span<const TokenId> sanitized) {
  if (original.size() != sanitized.size()) {
    throw std::invalid_argument("percent_unchanged: length mismatch");
  }
  if (original.empty()) {
    throw std::invalid_argument("percent_unchanged: empty input");
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original[i] == sanitized[i]) ++same;
  }
  return 100.0 * static_cast<double>(same) /
         static_cast<double>(original.size());
}

}  // namespace dxgate
