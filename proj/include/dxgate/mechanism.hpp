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

#ifndef DXGATE_MECHANISM_HPP
#define DXGATE_MECHANISM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dxgate/ann_index.hpp"
#include "dxgate/embedding_model.hpp"
#include "dxgate/rng.hpp"
#include "dxgate/tokenizer.hpp"
#include "dxgate/types.hpp"

namespace dxgate {

// nearest_token: the resolved nearest neighbor of the noisy embedding is
// the replacement. rank_sampled: a rank is drawn with probability
// proportional to exp(-epsilon * rank) and the replacement is that-ranked
// exact neighbor of the resolved token.
enum class Variant { kNearestToken, kRankSampled };

enum class OovPolicy { kError, kPassthroughFlagged };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct SanitizationConfig {
  double epsilon = 100.0;
  Variant variant = Variant::kRankSampled;
  SearchBackend nn_backend = SearchBackend::kExact;
  OovPolicy oov_policy = OovPolicy::kError;
  std::uint64_t rng_seed = 0;
  // Rank mass ignored when bounding the neighbor fetch; must be in (0,1).
  double tail_mass_delta = 1e-12;
  AnnParams ann;

  void validate() const;
};

struct SanitizedText {
  std::vector<TokenId> original_ids;
  std::vector<TokenId> sanitized_ids;
  std::vector<bool> changed_mask;
  std::vector<bool> oov_flags;
  // Sampled rank per position; 0 for nearest_token, -1 at OOV positions.
  std::vector<std::int64_t> ranks;
  double epsilon = 0.0;

  std::size_t size() const { return original_ids.size(); }
};

// Draws a rank in [0, vocab_size) with P(i) proportional to
// exp(-epsilon * i), via the closed-form inverse CDF in log space.
std::int64_t sample_rank(double epsilon, std::int64_t vocab_size, Rng& rng);

// Neighbor count that covers all ranks except a tail of mass at most
// `tail_mass_delta`; clamped to vocab_size.
std::int64_t rank_fetch_bound(double epsilon, double tail_mass_delta,
                              std::int64_t vocab_size);

struct TokenSample {
  TokenId token;
  std::int64_t rank;
};

// Applies the mechanism token by token. Holds only references; cheap to
// construct per epsilon while sharing one model and one ANN index.
// Stateless across calls and safe for concurrent use.
class Sanitizer {
 public:
  // `ann` may be null unless the config selects the approximate backend.
  Sanitizer(const EmbeddingModel& model, SanitizationConfig config,
            const AnnIndex* ann = nullptr);

  TokenSample sanitize_token(TokenId id, Rng& rng) const;

  // One independent noise draw per position; position i uses the RNG
  // substream keyed by (config.rng_seed, i), so results do not depend on
  // evaluation order or thread count.
  SanitizedText sanitize_ids(std::span<const TokenId> ids) const;

  // Word-level entry point. Unknown words follow the OOV policy:
  // kError throws naming the first offending position, kPassthroughFlagged
  // keeps the original word and flags it.
  SanitizedText sanitize_tokens_with_oov(std::span<const TokenId> ids,
                                         std::span<const std::string> words)
      const;

  const EmbeddingModel& model() const { return *model_; }
  const SanitizationConfig& config() const { return config_; }

 private:
  TokenId resolve_nearest(const Eigen::Ref<const Eigen::VectorXd>& query)
      const;

  const EmbeddingModel* model_;
  const AnnIndex* ann_;
  SanitizationConfig config_;
};

// Free-function conveniences over the class above.
TokenSample sanitize_token(const EmbeddingModel& model, TokenId id,
                           const SanitizationConfig& config, Rng& rng,
                           const AnnIndex* ann = nullptr);
SanitizedText sanitize_text(const EmbeddingModel& model,
                            std::span<const TokenId> ids,
                            const SanitizationConfig& config,
                            const AnnIndex* ann = nullptr);

// Tokenize -> sanitize -> detokenize for word-level models.
struct SanitizedDocument {
  SanitizedText tokens;
  std::vector<std::string> sanitized_words;
  std::string text;
};
SanitizedDocument sanitize_document(const Sanitizer& sanitizer,
                                    const std::string& text,
                                    const TokenizerOptions& options = {});

}  // namespace dxgate

#endif  // DXGATE_MECHANISM_HPP
