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

#ifndef DXGATE_REPLICATION_HPP
#define DXGATE_REPLICATION_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dxgate/embedding_model.hpp"
#include "dxgate/mechanism.hpp"
#include "dxgate/types.hpp"

namespace dxgate {

// Tally of repeated sanitizations of one word at one epsilon.
struct ReplicationReport {
  std::string word;
  double epsilon = 0.0;
  int trials = 0;
  SearchBackend backend = SearchBackend::kExact;
  Variant variant = Variant::kNearestToken;
  // (token, count) descending by count, count ties by token string.
  std::vector<std::pair<std::string, int>> top_outputs;
  int self_return_count = 0;
};

struct SweepCurve {
  std::vector<double> epsilons;
  std::vector<double> values;
  std::string metric;
  int sample_size = 0;
  int trials = 0;
};

struct CorpusDocument {
  std::string id;
  std::string text;
};

struct CorpusSweep {
  SweepCurve similarity;     // mean prompt<->sanitized similarity per eps
  SweepCurve unchanged_pct;  // mean % unchanged tokens per eps
  bool partial = false;
  std::string error;
};

// Sanitizes `word` `trials` times; per-trial RNG substreams keyed by
// (seed, word id, trial) make the tally reproducible and order-free.
ReplicationReport word_frequency_experiment(const EmbeddingModel& model,
                                            const std::string& word,
                                            double epsilon, int trials,
                                            SearchBackend backend,
                                            Variant variant,
                                            std::uint64_t seed,
                                            const AnnIndex* ann = nullptr);

// Reproducible vocabulary sample; rows with zero embedding norm are
// excluded (padding rows distort distance rankings).
std::vector<TokenId> sample_vocabulary(const EmbeddingModel& model, int count,
                                       std::uint64_t seed);

// Mean self-return count over the sampled words, one value per epsilon.
SweepCurve self_return_curve(const EmbeddingModel& model,
                             std::span<const TokenId> word_sample,
                             std::span<const double> epsilons, int trials,
                             SearchBackend backend, Variant variant,
                             std::uint64_t seed,
                             const AnnIndex* ann = nullptr);

// JSONL corpus, one {"id": ..., "text": ...} record per line. Documents
// longer than max_tokens (word tokens) are dropped; the survivors are
// sampled reproducibly. sample_size <= 0 keeps everything.
std::vector<CorpusDocument> load_corpus(const std::filesystem::path& path,
                                        int max_tokens, int sample_size,
                                        std::uint64_t seed,
                                        std::string* warning = nullptr);

// Per-epsilon mean similarity(prompt, sanitized prompt) and mean
// % unchanged tokens over the corpus. `similarity_fn` scores a
// (prompt, sanitized) pair; a failure aborts the sweep with whatever
// grid points completed, flagged partial.
CorpusSweep corpus_sweep(
    const EmbeddingModel& model, std::span<const CorpusDocument> corpus,
    std::span<const double> epsilons, const SanitizationConfig& config,
    const std::function<double(const std::string&, const std::string&)>&
        similarity_fn,
    const AnnIndex* ann = nullptr);

std::string report_csv_header();
std::string report_csv_row(const ReplicationReport& report);
std::string curve_csv(const SweepCurve& curve, SearchBackend backend,
                      Variant variant);

}  // namespace dxgate

#endif  // DXGATE_REPLICATION_HPP
