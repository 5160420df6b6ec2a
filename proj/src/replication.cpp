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

#include "dxgate/replication.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "dxgate/parallel.hpp"
#include "dxgate/similarity.hpp"

namespace dxgate {

namespace {

// Substream namespaces so word, trial and shuffle streams never collide.
constexpr std::uint64_t kWordStream = 0x77;
constexpr std::uint64_t kShuffleStream = 0x5a;

}  // namespace

ReplicationReport word_frequency_experiment(
    const EmbeddingModel& model, const std::string& word, double epsilon,
    int trials, SearchBackend backend, Variant variant, std::uint64_t seed,
    const AnnIndex* ann) {
  const auto id = model.lookup(word);
  if (!id) {
    throw std::invalid_argument("word not in vocabulary: " + word);
  }
  if (trials < 1) {
    throw std::invalid_argument("trials must be >= 1");
  }
  SanitizationConfig config;
  config.epsilon = epsilon;
  config.variant = variant;
  config.nn_backend = backend;
  const Sanitizer sanitizer(model, config, ann);

  const int workers = effective_thread_count();
  std::vector<std::unordered_map<TokenId, int>> tallies(
      std::max(1, std::min(workers, trials)));
  const std::uint64_t word_seed =
      Rng::mix_key(Rng::mix_key(seed, kWordStream), *id);
  parallel_chunks(static_cast<std::size_t>(trials),
                  [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                    auto& tally = tallies[chunk];
                    for (std::size_t t = begin; t < end; ++t) {
                      Rng rng = Rng::keyed(word_seed, t);
                      const TokenSample s = sanitizer.sanitize_token(*id, rng);
                      ++tally[s.token];
                    }
                  });

  std::unordered_map<TokenId, int> counts;
  for (const auto& tally : tallies) {
    for (const auto& [token, count] : tally) counts[token] += count;
  }

  ReplicationReport report;
  report.word = word;
  report.epsilon = epsilon;
  report.trials = trials;
  report.backend = backend;
  report.variant = variant;
  report.top_outputs.reserve(counts.size());
  for (const auto& [token, count] : counts) {
    report.top_outputs.emplace_back(model.token(token), count);
  }
  std::sort(report.top_outputs.begin(), report.top_outputs.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  if (const auto it = counts.find(*id); it != counts.end()) {
    report.self_return_count = it->second;
  }
  return report;
}

std::vector<TokenId> sample_vocabulary(const EmbeddingModel& model, int count,
                                       std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  std::vector<TokenId> eligible;
  eligible.reserve(static_cast<std::size_t>(model.size()));
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    const TokenId id = static_cast<TokenId>(i);
    Eigen::Map<const Eigen::VectorXf> row(model.row_data(id), model.dim());
    if (row.squaredNorm() > 0.0f) eligible.push_back(id);
  }
  if (eligible.empty()) {
    throw std::runtime_error("vocabulary has no non-zero embedding rows");
  }
  Rng rng = Rng::keyed(seed, kShuffleStream);
  // Partial Fisher-Yates: only the sampled prefix needs shuffling.
  const std::size_t take =
      std::min<std::size_t>(static_cast<std::size_t>(count), eligible.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.next_below(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(take);
  return eligible;
}

SweepCurve self_return_curve(const EmbeddingModel& model,
                             std::span<const TokenId> word_sample,
                             std::span<const double> epsilons, int trials,
                             SearchBackend backend, Variant variant,
                             std::uint64_t seed, const AnnIndex* ann) {
  if (word_sample.empty()) {
    throw std::invalid_argument("self_return_curve: empty word sample");
  }
  SweepCurve curve;
  curve.metric = "mean_self_return";
  curve.sample_size = static_cast<int>(word_sample.size());
  curve.trials = trials;
  for (const double epsilon : epsilons) {
    SanitizationConfig config;
    config.epsilon = epsilon;
    config.variant = variant;
    config.nn_backend = backend;
    const Sanitizer sanitizer(model, config, ann);

    std::vector<double> self_counts(word_sample.size(), 0.0);
    parallel_chunks(
        word_sample.size(),
        [&](std::size_t, std::size_t begin, std::size_t end) {
          for (std::size_t w = begin; w < end; ++w) {
            const TokenId id = word_sample[w];
            const std::uint64_t word_seed =
                Rng::mix_key(Rng::mix_key(seed, kWordStream), id);
            int self = 0;
            for (int t = 0; t < trials; ++t) {
              Rng rng = Rng::keyed(word_seed, static_cast<std::uint64_t>(t));
              if (sanitizer.sanitize_token(id, rng).token == id) ++self;
            }
            self_counts[w] = self;
          }
        });
    curve.epsilons.push_back(epsilon);
    curve.values.push_back(
        std::accumulate(self_counts.begin(), self_counts.end(), 0.0) /
        static_cast<double>(self_counts.size()));
  }
  return curve;
}

std::vector<CorpusDocument> load_corpus(const std::filesystem::path& path,
                                        int max_tokens, int sample_size,
                                        std::uint64_t seed,
                                        std::string* warning) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open corpus: " + path.string());
  }
  std::vector<CorpusDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": malformed JSONL record: " + e.what());
    }
    if (!record.contains("id") || !record.contains("text") ||
        !record["text"].is_string()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": record must carry string `id` and `text`");
    }
    CorpusDocument doc;
    doc.id = record["id"].is_string() ? record["id"].get<std::string>()
                                      : record["id"].dump();
    doc.text = record["text"].get<std::string>();
    if (max_tokens > 0 &&
        tokenize_words(doc.text).words.size() >
            static_cast<std::size_t>(max_tokens)) {
      continue;
    }
    docs.push_back(std::move(doc));
  }
  if (sample_size > 0) {
    if (docs.size() <= static_cast<std::size_t>(sample_size)) {
      if (warning && docs.size() < static_cast<std::size_t>(sample_size)) {
        *warning = "sample_size " + std::to_string(sample_size) +
                   " exceeds filtered corpus size " +
                   std::to_string(docs.size()) + "; keeping all documents";
      }
    } else {
      Rng rng = Rng::keyed(seed, kShuffleStream);
      for (std::size_t i = 0; i < static_cast<std::size_t>(sample_size); ++i) {
        const std::size_t j = i + rng.next_below(docs.size() - i);
        std::swap(docs[i], docs[j]);
      }
      docs.resize(static_cast<std::size_t>(sample_size));
    }
  }
  return docs;
}

CorpusSweep corpus_sweep(
    const EmbeddingModel& model, std::span<const CorpusDocument> corpus,
    std::span<const double> epsilons, const SanitizationConfig& config,
    const std::function<double(const std::string&, const std::string&)>&
        similarity_fn,
    const AnnIndex* ann) {
  if (corpus.empty()) {
    throw std::invalid_argument("corpus_sweep: empty corpus");
  }
  CorpusSweep sweep;
  sweep.similarity.metric = "mean_similarity";
  sweep.unchanged_pct.metric = "mean_unchanged_pct";
  sweep.similarity.sample_size = static_cast<int>(corpus.size());
  sweep.unchanged_pct.sample_size = static_cast<int>(corpus.size());
  sweep.similarity.trials = 1;
  sweep.unchanged_pct.trials = 1;

  for (const double epsilon : epsilons) {
    SanitizationConfig point = config;
    point.epsilon = epsilon;
    // Every document gets its own seed so a shared grid stays unbiased.
    double sim_sum = 0.0;
    double unchanged_sum = 0.0;
    try {
      std::vector<SanitizedDocument> sanitized(corpus.size());
      parallel_chunks(corpus.size(), [&](std::size_t, std::size_t begin,
                                         std::size_t end) {
        for (std::size_t d = begin; d < end; ++d) {
          SanitizationConfig doc_config = point;
          doc_config.rng_seed = Rng::mix_key(point.rng_seed, d);
          const Sanitizer sanitizer(model, doc_config, ann);
          sanitized[d] = sanitize_document(sanitizer, corpus[d].text);
        }
      });
      for (std::size_t d = 0; d < corpus.size(); ++d) {
        const auto& doc = sanitized[d];
        if (doc.tokens.size() == 0) {
          throw std::runtime_error("document '" + corpus[d].id +
                                   "' has no tokens");
        }
        sim_sum += similarity_fn(corpus[d].text, doc.text);
        unchanged_sum += percent_unchanged(doc.tokens.original_ids,
                                           doc.tokens.sanitized_ids);
      }
    } catch (const std::exception& e) {
      sweep.partial = true;
      sweep.error = e.what();
      break;
    }
    sweep.similarity.epsilons.push_back(epsilon);
    sweep.similarity.values.push_back(sim_sum /
                                      static_cast<double>(corpus.size()));
    sweep.unchanged_pct.epsilons.push_back(epsilon);
    sweep.unchanged_pct.values.push_back(
        unchanged_sum / static_cast<double>(corpus.size()));
  }
  return sweep;
}

std::string report_csv_header() {
  return "word,epsilon,backend,variant,trials,self_return,"
         "top1_token,top1_count,top2_token,top2_count,top3_token,top3_count";
}

std::string report_csv_row(const ReplicationReport& r) {
  std::ostringstream os;
  os << r.word << ',' << r.epsilon << ',' << to_string(r.backend) << ','
     << to_string(r.variant) << ',' << r.trials << ',' << r.self_return_count;
  for (std::size_t i = 0; i < 3; ++i) {
    if (i < r.top_outputs.size()) {
      os << ',' << r.top_outputs[i].first << ',' << r.top_outputs[i].second;
    } else {
      os << ",,";
    }
  }
  return os.str();
}

std::string curve_csv(const SweepCurve& curve, SearchBackend backend,
                      Variant variant) {
  std::ostringstream os;
  os << "epsilon," << curve.metric << ",sample_size,trials,backend,variant\n";
  for (std::size_t i = 0; i < curve.epsilons.size(); ++i) {
    os << curve.epsilons[i] << ',' << curve.values[i] << ','
       << curve.sample_size << ',' << curve.trials << ','
       << to_string(backend) << ',' << to_string(variant) << '\n';
  }
  return os.str();
}

}  // namespace dxgate
