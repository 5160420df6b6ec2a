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

#include "dxgate/mechanism.hpp"

#include <cmath>
#include <stdexcept>

#include "dxgate/noise.hpp"
#include "dxgate/parallel.hpp"

namespace dxgate {

std::string to_string(Variant v) {
  return v == Variant::kNearestToken ? "nearest_token" : "rank_sampled";
}

Variant variant_from_string(const std::string& s) {
  if (s == "nearest_token") return Variant::kNearestToken;
  if (s == "rank_sampled") return Variant::kRankSampled;
  throw std::invalid_argument("unknown mechanism variant: " + s);
}

void SanitizationConfig::validate() const {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be > 0");
  }
  if (!(tail_mass_delta > 0.0 && tail_mass_delta < 1.0)) {
    throw std::invalid_argument("tail_mass_delta must be in (0, 1)");
  }
}

std::int64_t sample_rank(double epsilon, std::int64_t vocab_size, Rng& rng) {
  if (vocab_size < 1) {
    throw std::invalid_argument("sample_rank: vocab_size must be >= 1");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("sample_rank: epsilon must be > 0");
  }
  if (vocab_size == 1) return 0;
  // Truncated geometric law with ratio q = exp(-epsilon):
  //   CDF(i) = (1 - q^(i+1)) / (1 - q^N).
  // Inverting for uniform u gives i + 1 >= log1p(-u * (1 - q^N)) / (-eps),
  // evaluated in log space so it stays exact for epsilon in [1e-12, 1e9].
  const double u = rng.next_unit();
  const double total_mass =
      -std::expm1(-epsilon * static_cast<double>(vocab_size));
  const double log_tail = std::log1p(-u * total_mass);
  double rank = std::ceil(log_tail / -epsilon - 1.0);
  if (!(rank > 0.0)) return 0;
  const auto r = static_cast<std::int64_t>(rank);
  return r >= vocab_size ? vocab_size - 1 : r;
}

std::int64_t rank_fetch_bound(double epsilon, double tail_mass_delta,
                              std::int64_t vocab_size) {
  const double k = std::ceil(std::log(tail_mass_delta) / -epsilon) + 1.0;
  if (!(k > 0.0)) return 1;
  if (k >= static_cast<double>(vocab_size)) return vocab_size;
  return static_cast<std::int64_t>(k);
}

Sanitizer::Sanitizer(const EmbeddingModel& model, SanitizationConfig config,
                     const AnnIndex* ann)
    : model_(&model), ann_(ann), config_(std::move(config)) {
  config_.validate();
  if (config_.nn_backend == SearchBackend::kApproximate && ann_ == nullptr) {
    throw std::invalid_argument(
        "Sanitizer: approximate backend requires an AnnIndex");
  }
}

TokenId Sanitizer::resolve_nearest(
    const Eigen::Ref<const Eigen::VectorXd>& query) const {
  if (config_.nn_backend == SearchBackend::kApproximate) {
    return ann_->nearest(query, 1).entries.front().token;
  }
  return exact_nearest(*model_, query, 1).entries.front().token;
}

TokenSample Sanitizer::sanitize_token(TokenId id, Rng& rng) const {
  if (static_cast<Eigen::Index>(id) >= model_->size()) {
    throw std::out_of_range("sanitize_token: token id out of range");
  }
  const Eigen::VectorXd noisy =
      model_->embed(id) + sample_noise(model_->dim(), config_.epsilon, rng);
  const TokenId resolved = resolve_nearest(noisy);
  if (config_.variant == Variant::kNearestToken) {
    return {resolved, 0};
  }
  const std::int64_t rank = sample_rank(config_.epsilon, model_->size(), rng);
  if (rank == 0) {
    return {resolved, 0};
  }
  // The sampled rank fixes how deep the exact ranking must go; with the
  // default tail mass this stays within rank_fetch_bound() and far from
  // the full-vocabulary fallback.
  const NeighborList ranking = exact_nearest(
      *model_, model_->embed(resolved), static_cast<int>(rank + 1));
  return {ranking.entries[static_cast<std::size_t>(rank)].token, rank};
}

SanitizedText Sanitizer::sanitize_ids(std::span<const TokenId> ids) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (static_cast<Eigen::Index>(ids[i]) >= model_->size()) {
      throw std::invalid_argument("sanitize_ids: invalid token id at position " +
                                  std::to_string(i));
    }
  }
  return sanitize_tokens_with_oov(ids, {});
}

SanitizedText Sanitizer::sanitize_tokens_with_oov(
    std::span<const TokenId> ids, std::span<const std::string> words) const {
  SanitizedText out;
  out.epsilon = config_.epsilon;
  const std::size_t n = ids.size();
  out.original_ids.assign(ids.begin(), ids.end());
  out.sanitized_ids.resize(n);
  out.changed_mask.resize(n);
  out.oov_flags.resize(n);
  out.ranks.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const bool oov = ids[i] == kOovToken ||
                     static_cast<Eigen::Index>(ids[i]) >= model_->size();
    if (oov && config_.oov_policy == OovPolicy::kError) {
      const std::string what =
          i < words.size() ? " ('" + words[i] + "')" : "";
      throw std::runtime_error("out-of-vocabulary token at position " +
                               std::to_string(i) + what);
    }
    out.oov_flags[i] = oov;
  }

  // vector<bool> packs bits, so the parallel region only writes the
  // plain-element vectors; masks are filled in serially afterwards.
  parallel_chunks(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (out.oov_flags[i]) {
        out.sanitized_ids[i] = ids[i];
        out.ranks[i] = -1;
        continue;
      }
      Rng rng = Rng::keyed(config_.rng_seed, static_cast<std::uint64_t>(i));
      const TokenSample sample = sanitize_token(ids[i], rng);
      out.sanitized_ids[i] = sample.token;
      out.ranks[i] = sample.rank;
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    out.changed_mask[i] = out.sanitized_ids[i] != ids[i];
  }
  return out;
}

TokenSample sanitize_token(const EmbeddingModel& model, TokenId id,
                           const SanitizationConfig& config, Rng& rng,
                           const AnnIndex* ann) {
  return Sanitizer(model, config, ann).sanitize_token(id, rng);
}

SanitizedText sanitize_text(const EmbeddingModel& model,
                            std::span<const TokenId> ids,
                            const SanitizationConfig& config,
                            const AnnIndex* ann) {
  return Sanitizer(model, config, ann).sanitize_ids(ids);
}

SanitizedDocument sanitize_document(const Sanitizer& sanitizer,
                                    const std::string& text,
                                    const TokenizerOptions& options) {
  const Tokenization tok = tokenize_words(text, options);
  std::vector<TokenId> ids(tok.words.size(), kOovToken);
  for (std::size_t i = 0; i < tok.words.size(); ++i) {
    if (const auto id = sanitizer.model().lookup(tok.words[i])) {
      ids[i] = *id;
    }
  }
  SanitizedDocument doc;
  doc.tokens = sanitizer.sanitize_tokens_with_oov(ids, tok.words);
  doc.sanitized_words.resize(tok.words.size());
  for (std::size_t i = 0; i < tok.words.size(); ++i) {
    doc.sanitized_words[i] = doc.tokens.oov_flags[i]
                                 ? tok.words[i]
                                 : sanitizer.model().token(
                                       doc.tokens.sanitized_ids[i]);
  }
  doc.text = detokenize(doc.sanitized_words, tok.gaps);
  return doc;
}

}  // namespace dxgate
