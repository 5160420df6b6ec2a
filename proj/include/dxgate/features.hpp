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

#ifndef DXGATE_FEATURES_HPP
#define DXGATE_FEATURES_HPP

#include <optional>
#include <string>

#include "dxgate/embedding_provider.hpp"

namespace dxgate {

// Similarity features for one prompt:
//   epsilon            - prescribed noise level (A)
//   sim_sanitized      - sim(prompt, sanitized prompt) (B)
//   sim_slm            - sim(prompt, SLM result on prompt) (C)
//   sim_slm_sanitized  - sim(prompt, SLM result on sanitized prompt) (D)
//   target             - sim(prompt, LLM result on sanitized prompt) (E),
//                        either realized or predicted per target_predicted.
struct FeatureVector {
  double epsilon = 0.0;
  double sim_sanitized = 0.0;
  double sim_slm = 0.0;
  double sim_slm_sanitized = 0.0;
  std::optional<double> target;
  bool target_predicted = false;
};

// Fills features A-D. Each distinct text is embedded at most once via
// the memoizing provider. Throws std::invalid_argument on an empty text
// and propagates ProviderError from the backend.
FeatureVector compute_features(const std::string& prompt,
                               const std::string& sanitized_prompt,
                               const std::string& slm_result,
                               const std::string& slm_result_sanitized,
                               double epsilon, MemoizingProvider& provider);

}  // namespace dxgate

#endif  // DXGATE_FEATURES_HPP
