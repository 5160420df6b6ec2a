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

#include "dxgate/features.hpp"

#include <stdexcept>

#include "dxgate/similarity.hpp"

namespace dxgate {

FeatureVector compute_features(const std::string& prompt,
                               const std::string& sanitized_prompt,
                               const std::string& slm_result,
                               const std::string& slm_result_sanitized,
                               double epsilon, MemoizingProvider& provider) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("compute_features: epsilon must be > 0");
  }
  if (prompt.empty() || sanitized_prompt.empty() || slm_result.empty() ||
      slm_result_sanitized.empty()) {
    throw std::invalid_argument("compute_features: texts must be non-empty");
  }
  const Eigen::VectorXd p = provider.embed_one(prompt);
  FeatureVector f;
  f.epsilon = epsilon;
  f.sim_sanitized = cosine_similarity(p, provider.embed_one(sanitized_prompt));
  f.sim_slm = cosine_similarity(p, provider.embed_one(slm_result));
  f.sim_slm_sanitized =
      cosine_similarity(p, provider.embed_one(slm_result_sanitized));
  return f;
}

}  // namespace dxgate
