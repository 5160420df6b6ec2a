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
//
// Acceptance suite. Each criterion prints one PASS/FAIL/SKIP line; the
// process exits non-zero if any criterion fails. The GloVe-scale
// criteria need glove.6B.300d (set DXGATE_GLOVE or place the file at
// data/glove.6B.300d.txt); without it they are skipped with notice.
// DXGATE_FULL_ACCEPTANCE=1 runs the vocabulary curve at full scale.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dxgate/ann_index.hpp"
#include "dxgate/embedding_model.hpp"
#include "dxgate/embedding_provider.hpp"
#include "dxgate/features.hpp"
#include "dxgate/gateway.hpp"
#include "dxgate/gbdt.hpp"
#include "dxgate/mechanism.hpp"
#include "dxgate/noise.hpp"
#include "dxgate/parallel.hpp"
#include "dxgate/replication.hpp"
#include "dxgate/similarity.hpp"

using namespace dxgate;

namespace {

struct Outcome {
  enum class Status { kPass, kFail, kSkip } status;
  std::string detail;

  static Outcome pass(std::string d) { return {Status::kPass, std::move(d)}; }
  static Outcome fail(std::string d) { return {Status::kFail, std::move(d)}; }
  static Outcome skip(std::string d) { return {Status::kSkip, std::move(d)}; }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("dxgate_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

EmbeddingModel gaussian_model(int rows, int dim, double scale,
                              std::uint64_t seed) {
  Rng rng(seed);
  MatrixXfRM matrix(rows, dim);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < dim; ++j) {
      matrix(i, j) = static_cast<float>(scale * rng.next_normal());
    }
  }
  std::vector<std::string> vocab;
  for (int i = 0; i < rows; ++i) vocab.push_back("w" + std::to_string(i));
  return EmbeddingModel("synthetic", std::move(vocab), std::move(matrix));
}

std::optional<std::filesystem::path> find_glove() {
  if (const char* env = std::getenv("DXGATE_GLOVE")) {
    if (std::filesystem::exists(env)) return std::filesystem::path(env);
    return std::nullopt;
  }
  for (const char* candidate :
       {"data/glove.6B.300d.txt", "glove.6B.300d.txt",
        "../data/glove.6B.300d.txt"}) {
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

constexpr const char* kGloveNotice =
    "glove.6B.300d.txt not found (set DXGATE_GLOVE or place it under "
    "data/); full-scale replication skipped";

// ---------------------------------------------------------------------------
// C1: noise law

Outcome criterion_noise_law() {
  const int n = 300;
  const double eps = 30.0;
  const int draws = 100000;

  std::vector<double> magnitudes(draws);
  const int workers = effective_thread_count();
  std::vector<Eigen::VectorXd> dir_sums(
      static_cast<std::size_t>(std::max(1, workers)),
      Eigen::VectorXd::Zero(n));
  parallel_chunks(draws, [&](std::size_t chunk, std::size_t begin,
                             std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = Rng::keyed(20260810, i);
      const Eigen::VectorXd eta = sample_noise(n, eps, rng);
      const double m = eta.norm();
      magnitudes[i] = m;
      dir_sums[chunk] += eta / m;
    }
  });
  const double mean =
      std::accumulate(magnitudes.begin(), magnitudes.end(), 0.0) / draws;
  double var = 0.0;
  for (const double m : magnitudes) var += (m - mean) * (m - mean);
  var /= draws - 1;
  Eigen::VectorXd dir_mean = Eigen::VectorXd::Zero(n);
  for (const auto& s : dir_sums) dir_mean += s;
  dir_mean /= draws;
  const double dir_norm = dir_mean.norm();

  const double mean_lo = 10.0 * 0.99, mean_hi = 10.0 * 1.01;
  const double var_ref = static_cast<double>(n) / (eps * eps);
  const double var_lo = var_ref * 0.95, var_hi = var_ref * 1.05;
  const std::string detail = "mean|eta|=" + fmt(mean) + " (band " +
                             fmt(mean_lo) + ".." + fmt(mean_hi) +
                             "), var=" + fmt(var) + " (band " + fmt(var_lo) +
                             ".." + fmt(var_hi) +
                             "), dir-mean norm=" + fmt(dir_norm) + " (<=0.01)";
  if (mean >= mean_lo && mean <= mean_hi && var >= var_lo && var <= var_hi &&
      dir_norm <= 0.01) {
    return Outcome::pass(detail);
  }
  return Outcome::fail(detail);
}

// ---------------------------------------------------------------------------
// C2: rank-sampler law

Outcome criterion_rank_law() {
  const double eps = std::log(2.0);
  const int draws = 100000;
  Rng rng(2);
  std::array<double, 4> counts{};
  for (int i = 0; i < draws; ++i) {
    counts[static_cast<std::size_t>(sample_rank(eps, 4, rng))] += 1.0;
  }
  const double z = 1.0 + 0.5 + 0.25 + 0.125;
  double tv = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    tv += std::abs(counts[i] / draws -
                   std::pow(0.5, static_cast<double>(i)) / z);
  }
  tv /= 2.0;
  const std::string detail =
      "TV(empirical, closed-form) = " + fmt(tv) + " (<= 0.01)";
  return tv <= 0.01 ? Outcome::pass(detail) : Outcome::fail(detail);
}

// ---------------------------------------------------------------------------
// C3: rank-base invariance

Outcome criterion_rank_base_invariance() {
  const std::int64_t vocab = 6;
  const int draws = 100000;
  double worst_tv = 0.0;
  for (const std::uint64_t seed : {11u, 12u, 13u}) {
    for (const double eps : {0.4, 0.8, 1.6}) {
      // Base-1 reference: weights exp(-eps*(i+1)), explicit inverse CDF.
      std::vector<double> cdf;
      double z = 0.0;
      for (std::int64_t i = 0; i < vocab; ++i) {
        z += std::exp(-eps * static_cast<double>(i + 1));
      }
      double acc = 0.0;
      for (std::int64_t i = 0; i < vocab; ++i) {
        acc += std::exp(-eps * static_cast<double>(i + 1)) / z;
        cdf.push_back(acc);
      }
      Rng rng0(seed), rng1(seed);
      std::vector<double> p0(static_cast<std::size_t>(vocab), 0.0);
      std::vector<double> p1(static_cast<std::size_t>(vocab), 0.0);
      for (int i = 0; i < draws; ++i) {
        p0[static_cast<std::size_t>(sample_rank(eps, vocab, rng0))] += 1.0;
        const double u = rng1.next_unit();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        p1[static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            it - cdf.begin(), vocab - 1))] += 1.0;
      }
      double tv = 0.0;
      for (std::int64_t i = 0; i < vocab; ++i) {
        tv += std::abs(p0[static_cast<std::size_t>(i)] -
                       p1[static_cast<std::size_t>(i)]) /
              draws;
      }
      worst_tv = std::max(worst_tv, tv / 2.0);
    }
  }
  const std::string detail = "worst TV over seed/eps grid = " +
                             fmt(worst_tv) + " (<= 0.01)";
  return worst_tv <= 0.01 ? Outcome::pass(detail) : Outcome::fail(detail);
}

// ---------------------------------------------------------------------------
// C4: privacy-ratio Monte Carlo

Outcome criterion_privacy_ratio() {
  // Fixed 8-token 3-d model with pairwise distances of order one.
  const std::vector<std::vector<float>> coords = {
      {0.0f, 0.0f, 0.0f},  {1.0f, 0.2f, -0.3f}, {-0.7f, 0.8f, 0.1f},
      {0.4f, -1.1f, 0.6f}, {1.5f, 1.2f, 0.9f},  {-1.2f, -0.5f, -1.0f},
      {0.2f, 0.9f, 1.4f},  {-0.4f, -1.3f, -0.8f}};
  MatrixXfRM matrix(8, 3);
  std::vector<std::string> vocab;
  for (int i = 0; i < 8; ++i) {
    vocab.push_back("t" + std::to_string(i));
    for (int j = 0; j < 3; ++j) matrix(i, j) = coords[i][j];
  }
  const EmbeddingModel model("m8", vocab, matrix);

  const double eps = 1.0;
  const int trials = 1000000;
  SanitizationConfig config;
  config.epsilon = eps;
  config.variant = Variant::kRankSampled;
  const Sanitizer sanitizer(model, config);

  // counts[input][output]
  std::vector<std::array<std::int64_t, 8>> counts(
      8, std::array<std::int64_t, 8>{});
  for (int input = 0; input < 8; ++input) {
    const int workers = effective_thread_count();
    std::vector<std::array<std::int64_t, 8>> partial(
        static_cast<std::size_t>(std::max(1, std::min(workers, trials))),
        std::array<std::int64_t, 8>{});
    parallel_chunks(trials, [&](std::size_t chunk, std::size_t begin,
                                std::size_t end) {
      auto& mine = partial[chunk];
      for (std::size_t t = begin; t < end; ++t) {
        Rng rng = Rng::keyed(4242, static_cast<std::uint64_t>(input), t);
        ++mine[sanitizer.sanitize_token(static_cast<TokenId>(input), rng)
                   .token];
      }
    });
    for (const auto& p : partial) {
      for (int y = 0; y < 8; ++y) counts[input][y] += p[y];
    }
  }

  int cells = 0;
  double worst_margin = -1e9;
  std::string worst_desc = "none";
  for (int x1 = 0; x1 < 8; ++x1) {
    for (int x2 = 0; x2 < 8; ++x2) {
      if (x1 == x2) continue;
      const double d = std::sqrt(
          squared_distance(model.row_data(static_cast<TokenId>(x1)),
                           model.embed(static_cast<TokenId>(x2))));
      for (int y = 0; y < 8; ++y) {
        const auto h1 = counts[x1][y];
        const auto h2 = counts[x2][y];
        if (h1 < 500 || h2 < 500) continue;
        ++cells;
        const double p1 = static_cast<double>(h1) / trials;
        const double p2 = static_cast<double>(h2) / trials;
        const double log_ratio = std::log(p1 / p2);
        const double se = std::sqrt((1.0 - p1) / static_cast<double>(h1) +
                                    (1.0 - p2) / static_cast<double>(h2));
        const double margin = log_ratio - (eps * d + 3.0 * se);
        if (margin > worst_margin) {
          worst_margin = margin;
          worst_desc = "x1=t" + std::to_string(x1) + " x2=t" +
                       std::to_string(x2) + " y=t" + std::to_string(y);
        }
      }
    }
  }
  const std::string detail =
      std::to_string(cells) + " well-supported cells; worst log-ratio "
      "excess over eps*d + 3se = " + fmt(worst_margin) + " at " + worst_desc +
      " (must be <= 0)";
  return worst_margin <= 0.0 && cells > 0 ? Outcome::pass(detail)
                                          : Outcome::fail(detail);
}

// ---------------------------------------------------------------------------
// C5-C7: published-scale replication on GloVe

struct GloveCells {
  // self_return[word][eps index]
  std::vector<std::vector<int>> enn, ann;
};

Outcome criterion_enn_replication(const EmbeddingModel* glove,
                                  GloveCells* cells) {
  if (!glove) return Outcome::skip(kGloveNotice);
  const std::vector<std::string> words = {"encryption", "hockey",
                                          "spacecraft"};
  const std::vector<double> grid = {19, 25, 35, 43};
  int worst = 1000;
  std::string worst_cell;
  cells->enn.assign(words.size(), std::vector<int>(grid.size(), 0));
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (std::size_t e = 0; e < grid.size(); ++e) {
      const auto report = word_frequency_experiment(
          *glove, words[w], grid[e], 1000, SearchBackend::kExact,
          Variant::kNearestToken, 606);
      cells->enn[w][e] = report.self_return_count;
      if (report.self_return_count < worst) {
        worst = report.self_return_count;
        worst_cell = words[w] + "@eps=" + fmt(grid[e]);
      }
      std::cerr << "  ENN " << words[w] << " eps=" << grid[e] << " -> "
                << report.self_return_count << "/1000\n";
    }
  }
  const std::string detail = "min self-return " + std::to_string(worst) +
                             "/1000 at " + worst_cell + " (>= 980 required)";
  return worst >= 980 ? Outcome::pass(detail) : Outcome::fail(detail);
}

Outcome criterion_ann_replication(const EmbeddingModel* glove,
                                  GloveCells* cells) {
  if (!glove) return Outcome::skip(kGloveNotice);
  const std::vector<std::string> words = {"encryption", "hockey",
                                          "spacecraft"};
  const std::vector<double> grid = {19, 25, 35, 43};
  const AnnIndex index(*glove, AnnParams{});
  cells->ann.assign(words.size(), std::vector<int>(grid.size(), 0));
  int worst_cap = 0;        // max over all cells
  int worst_at_19 = 0;      // max at eps=19
  std::string worst_cell;
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (std::size_t e = 0; e < grid.size(); ++e) {
      const auto report = word_frequency_experiment(
          *glove, words[w], grid[e], 1000, SearchBackend::kApproximate,
          Variant::kNearestToken, 606, &index);
      cells->ann[w][e] = report.self_return_count;
      if (report.self_return_count > worst_cap) {
        worst_cap = report.self_return_count;
        worst_cell = words[w] + "@eps=" + fmt(grid[e]);
      }
      if (grid[e] == 19.0) {
        worst_at_19 = std::max(worst_at_19, report.self_return_count);
      }
      std::cerr << "  ANN " << words[w] << " eps=" << grid[e] << " -> "
                << report.self_return_count << "/1000\n";
    }
  }
  bool enn_dominates = true;
  for (std::size_t e = 0; e < grid.size(); ++e) {
    double enn_mean = 0, ann_mean = 0;
    for (std::size_t w = 0; w < words.size(); ++w) {
      enn_mean += cells->enn[w][e];
      ann_mean += cells->ann[w][e];
    }
    if (enn_mean <= ann_mean) enn_dominates = false;
  }
  const std::string detail = "max self-return " + std::to_string(worst_cap) +
                             "/1000 at " + worst_cell +
                             " (<= 700 required); max at eps=19 " +
                             std::to_string(worst_at_19) +
                             " (<= 600); ENN mean > ANN mean at every eps: " +
                             (enn_dominates ? "yes" : "no");
  return worst_cap <= 700 && worst_at_19 <= 600 && enn_dominates
             ? Outcome::pass(detail)
             : Outcome::fail(detail);
}

Outcome criterion_vocabulary_curve(const EmbeddingModel* glove) {
  if (!glove) return Outcome::skip(kGloveNotice);
  const bool full = std::getenv("DXGATE_FULL_ACCEPTANCE") != nullptr;
  const int sample_size = full ? 500 : 50;
  const int trials = full ? 200 : 50;
  const std::vector<double> grid = {25, 35, 50};
  const auto sample = sample_vocabulary(*glove, sample_size, 707);

  const auto enn = self_return_curve(*glove, sample, grid, trials,
                                     SearchBackend::kExact,
                                     Variant::kNearestToken, 707);
  std::string detail = "ENN means/trials:";
  bool enn_ok = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    detail += " " + fmt(enn.values[i] / trials);
    if (enn.values[i] < 0.99 * trials) enn_ok = false;
  }
  detail += " (each >= 0.99)";
  if (!full) {
    detail += "; ANN bands: full run only (set DXGATE_FULL_ACCEPTANCE=1)";
    return enn_ok ? Outcome::pass(detail) : Outcome::fail(detail);
  }

  const AnnIndex index(*glove, AnnParams{});
  const auto ann = self_return_curve(*glove, sample, grid, trials,
                                     SearchBackend::kApproximate,
                                     Variant::kNearestToken, 707, &index);
  const std::vector<double> centers = {0.11, 0.22, 0.40};
  bool ann_ok = true;
  detail += "; ANN means:";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double frac = ann.values[i] / trials;
    detail += " " + fmt(frac) + " (band " + fmt(centers[i] - 0.15) + ".." +
              fmt(centers[i] + 0.15) + ")";
    if (frac < centers[i] - 0.15 || frac > centers[i] + 0.15) ann_ok = false;
  }
  return enn_ok && ann_ok ? Outcome::pass(detail) : Outcome::fail(detail);
}

// ---------------------------------------------------------------------------
// C8: high-noise corpus regime

Outcome criterion_high_noise_corpus() {
  const auto model = gaussian_model(2000, 16, 2.0, 808);
  Rng rng(809);
  std::vector<CorpusDocument> corpus;
  for (int d = 0; d < 50; ++d) {
    std::string text;
    for (int w = 0; w < 60; ++w) {
      if (w > 0) text += ' ';
      text += "w" + std::to_string(rng.next_below(2000));
    }
    corpus.push_back({"doc" + std::to_string(d), text});
  }
  SanitizationConfig config;
  config.variant = Variant::kRankSampled;
  config.rng_seed = 810;
  auto provider = std::make_shared<MockEmbeddingProvider>(128, 3, true);
  MemoizingProvider memo(provider);
  const std::vector<double> grid = {0.01};
  const auto sweep = corpus_sweep(
      model, corpus, grid, config,
      [&](const std::string& a, const std::string& b) {
        return cosine_similarity(memo.embed_one(a), memo.embed_one(b));
      });
  if (sweep.partial) return Outcome::fail("sweep aborted: " + sweep.error);
  const double unchanged = sweep.unchanged_pct.values[0];
  const std::string detail = "mean unchanged at grid-min eps = " +
                             fmt(unchanged) + "% (<= 1%)";
  return unchanged <= 1.0 ? Outcome::pass(detail) : Outcome::fail(detail);
}

// ---------------------------------------------------------------------------
// C9: regressor correctness

Outcome criterion_regressor() {
  Rng rng(909);
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 2000; ++i) {
    FeatureRow row;
    row.id = std::to_string(i);
    row.epsilon = 1.0 + 999.0 * rng.next_unit();
    row.sim_b = 2.0 * rng.next_unit() - 1.0;
    row.sim_c = 2.0 * rng.next_unit() - 1.0;
    row.sim_d = rng.next_unit();
    row.target = std::clamp(0.1 + 0.8 * row.sim_d + 0.02 * rng.next_normal(),
                            -1.0, 1.0);
    rows.push_back(row);
  }
  const auto result = train(to_dataset(rows, FeatureSet::kAll), GbdtParams{},
                            910);
  if (!result.report.r2_defined || result.report.r2 < 0.95) {
    return Outcome::fail("synthetic-generator test R2 = " +
                         fmt(result.report.r2) + " (< 0.95)");
  }

  // Metric oracle: hand values from the definitions.
  const double preds_a[] = {0.5, 0.8};
  const double targets_a[] = {0.45, 0.60};
  const auto report_a = evaluate(preds_a, targets_a);
  const double preds_b[] = {0.3, 0.9};
  const double targets_b[] = {0.45, 0.85};
  const auto report_b = evaluate(preds_b, targets_b);
  if (report_a.wasted_pct != 50.0 || report_a.failed_pct != 50.0 ||
      report_b.wasted_pct != 0.0 || report_b.failed_pct != 50.0) {
    return Outcome::fail("metric hand-values mismatch: wasted/failed = " +
                         fmt(report_a.wasted_pct) + "/" +
                         fmt(report_a.failed_pct) + " and " +
                         fmt(report_b.wasted_pct) + "/" +
                         fmt(report_b.failed_pct));
  }

  const auto dir = scratch_dir();
  const auto path = dir / "acceptance_model.gbdt";
  result.model.save(path);
  const auto loaded = GbdtModel::load(path);
  for (int i = 0; i < 100; ++i) {
    const double values[] = {1.0 + 999.0 * rng.next_unit(),
                             2.0 * rng.next_unit() - 1.0,
                             2.0 * rng.next_unit() - 1.0, rng.next_unit()};
    if (result.model.predict_values(values) !=
        loaded.predict_values(values)) {
      return Outcome::fail("prediction changed across model round-trip");
    }
  }
  return Outcome::pass("test R2 = " + fmt(result.report.r2) +
                       " (>= 0.95); metric hand-values exact; round-trip "
                       "predictions bit-exact");
}

// ---------------------------------------------------------------------------
// C10: middleware-benefit surrogate

Outcome criterion_middleware_benefit() {
  // Mock pipeline: prompts from a synthetic vocabulary, sanitized at a
  // per-prompt epsilon drawn from the transition band; the mock SLM
  // echoes its input and the mock "LLM target" is the similarity between
  // the prompt and its sanitized version plus small noise, i.e. a direct
  // function of realized degradation (feature D), not of epsilon alone.
  const auto model = gaussian_model(1500, 16, 2.0, 1010);
  auto provider = std::make_shared<MockEmbeddingProvider>(128, 5, true);
  MemoizingProvider memo(provider);
  Rng rng(1011);

  const std::vector<double> eps_grid = {0.4, 0.7, 1.0, 1.4, 2.0, 3.0, 5.0};
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 400; ++i) {
    // Mixed prompt lengths: realized degradation spreads widely at any
    // fixed epsilon, which is exactly what the epsilon-only baseline
    // cannot see.
    const int words = 6 + static_cast<int>(rng.next_below(14));
    std::string prompt;
    for (int w = 0; w < words; ++w) {
      if (w > 0) prompt += ' ';
      prompt += "w" + std::to_string(rng.next_below(1500));
    }
    const double eps = eps_grid[i % eps_grid.size()];
    SanitizationConfig config;
    config.epsilon = eps;
    config.variant = Variant::kRankSampled;
    config.rng_seed = Rng::mix_key(1012, static_cast<std::uint64_t>(i));
    const Sanitizer sanitizer(model, config);
    const auto doc = sanitize_document(sanitizer, prompt);

    // SLM echoes: r_slm = prompt, r_slm_eps = sanitized prompt.
    const auto features =
        compute_features(prompt, doc.text, prompt, doc.text, eps, memo);
    FeatureRow row;
    row.id = std::to_string(i);
    row.epsilon = features.epsilon;
    row.sim_b = features.sim_sanitized;
    row.sim_c = features.sim_slm;
    row.sim_d = features.sim_slm_sanitized;
    row.target = std::clamp(
        features.sim_slm_sanitized + 0.02 * rng.next_normal(), -1.0, 1.0);
    rows.push_back(std::move(row));
  }

  const auto abcd = train(to_dataset(rows, FeatureSet::kAll), GbdtParams{},
                          1013);
  const auto a_only = train(to_dataset(rows, FeatureSet::kEpsilonOnly),
                            GbdtParams{}, 1013);
  const double gap = abcd.report.r2 - a_only.report.r2;
  const std::string detail =
      "R2(ABCD)=" + fmt(abcd.report.r2) + ", R2(A)=" + fmt(a_only.report.r2) +
      ", gap=" + fmt(gap) + " (>= 0.1); wasted%: " +
      fmt(abcd.report.wasted_pct) + " vs " + fmt(a_only.report.wasted_pct) +
      " (must strictly decrease)";
  const bool ok = gap >= 0.1 &&
                  abcd.report.wasted_pct < a_only.report.wasted_pct;
  return ok ? Outcome::pass(detail) : Outcome::fail(detail);
}

// ---------------------------------------------------------------------------
// C11: gateway contracts

class CountingChat : public ChatBackend {
 public:
  explicit CountingChat(std::string suffix = "") : suffix_(std::move(suffix)) {}
  std::string complete(const std::string&, const std::string& text,
                       int) override {
    ++calls_;
    return text + suffix_;
  }
  int calls() const { return calls_.load(); }

 private:
  std::string suffix_;
  std::atomic<int> calls_{0};
};

GbdtModel constant_regressor(double value) {
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 10; ++i) {
    FeatureRow r;
    r.id = std::to_string(i);
    r.epsilon = 1.0 + i;
    r.sim_b = r.sim_c = r.sim_d = 0.1;
    r.target = value;
    rows.push_back(r);
  }
  GbdtParams params;
  params.iterations = 0;
  return train(to_dataset(rows, FeatureSet::kAll), params, 1).model;
}

Outcome criterion_gateway_contracts() {
  const auto dir = scratch_dir();
  const auto model = gaussian_model(256, 8, 4.0, 1101);
  auto provider = std::make_shared<MockEmbeddingProvider>(64, 7, true);

  GatewayConfig config;
  config.sanitization.epsilon = 50.0;
  config.sanitization.rng_seed = 1102;
  config.sanitization.oov_policy = OovPolicy::kPassthroughFlagged;
  config.cache_path = (dir / "acceptance_cache.jsonl").string();
  config.training_log_path = (dir / "acceptance_log.jsonl").string();
  std::filesystem::remove(config.cache_path);
  std::filesystem::remove(config.training_log_path);

  TaskRequest request;
  request.prompt = "w10 w20 w30 w40 w50 w60";
  request.epsilon = 30.0;
  request.quality_threshold = 0.6;

  // Abort path: zero LLM calls.
  {
    auto slm = std::make_shared<CountingChat>();
    auto llm = std::make_shared<CountingChat>();
    Gateway gateway(model, config, slm, llm, provider,
                    constant_regressor(0.3));
    const auto decision = gateway.handle_request(request);
    if (decision.forward || llm->calls() != 0) {
      return Outcome::fail("abort path issued " +
                           std::to_string(llm->calls()) + " LLM calls");
    }
  }

  // One stored sanitization, byte-identical across a restart; realized
  // target computed with the feature-D formula; export->train->predict.
  // Fresh cache and log so the abort-path traffic above does not
  // pre-populate the key under test.
  config.cache_path = (dir / "acceptance_cache2.jsonl").string();
  config.training_log_path = (dir / "acceptance_log2.jsonl").string();
  std::filesystem::remove(config.cache_path);
  std::filesystem::remove(config.training_log_path);
  std::string first_sanitized;
  {
    auto slm = std::make_shared<CountingChat>();
    auto llm = std::make_shared<CountingChat>(" [large-model]");
    Gateway gateway(model, config, slm, llm, provider,
                    constant_regressor(0.9));
    const auto first = gateway.handle_request(request);
    const auto second = gateway.handle_request(request);
    if (!first.forward || !second.cache_hit ||
        second.sanitized_prompt != first.sanitized_prompt ||
        gateway.sanitizations_performed() != 1) {
      return Outcome::fail("cache did not dedupe repeated (prompt, eps)");
    }
    first_sanitized = first.sanitized_prompt;
    const double expected = cosine_similarity(
        gateway.provider().embed_one(request.prompt),
        gateway.provider().embed_one(*first.llm_result));
    if (!first.realized_target || *first.realized_target != expected) {
      return Outcome::fail(
          "realized target differs from the feature-D formula");
    }
  }
  {
    auto slm = std::make_shared<CountingChat>();
    auto llm = std::make_shared<CountingChat>(" [large-model]");
    Gateway gateway(model, config, slm, llm, provider,
                    constant_regressor(0.9));
    const auto replay = gateway.handle_request(request);
    if (!replay.cache_hit || replay.sanitized_prompt != first_sanitized ||
        gateway.sanitizations_performed() != 0) {
      return Outcome::fail("sanitization not byte-identical across restart");
    }

    // More traffic so the export->train loop has enough rows.
    Rng rng(1103);
    for (int i = 0; i < 14; ++i) {
      TaskRequest extra;
      extra.prompt = "w" + std::to_string(rng.next_below(256)) + " w" +
                     std::to_string(rng.next_below(256)) + " w" +
                     std::to_string(rng.next_below(256)) + " tail" +
                     std::to_string(i);
      extra.epsilon = 20.0 + i;
      extra.quality_threshold = 0.5;
      gateway.handle_request(extra);
    }
    const auto exported = gateway.training_log().export_rows();
    if (exported.size() < 10) {
      return Outcome::fail("training export produced only " +
                           std::to_string(exported.size()) + " rows");
    }
    GbdtParams params;
    params.iterations = 10;
    params.min_samples_leaf = 2;
    const auto trained =
        train(to_dataset(exported, FeatureSet::kAll), params, 1104);
    const FeatureVector probe{exported[0].epsilon, exported[0].sim_b,
                              exported[0].sim_c, exported[0].sim_d,
                              std::nullopt, false};
    const double p = trained.model.predict(probe);
    if (!(p >= -1.0 && p <= 1.0)) {
      return Outcome::fail("export->train->predict loop broke");
    }
  }
  return Outcome::pass(
      "abort path issues zero LLM calls; one stored sanitization per "
      "(prompt, eps) incl. across restart; realized target matches the "
      "feature-D formula; export->train->predict loop green");
}

// ---------------------------------------------------------------------------
// C12: CLI determinism sweep

struct CliRunner {
  std::filesystem::path bin;
  std::filesystem::path dir;

  bool run(const std::string& args) const {
    const std::string cmd = bin.string() + " " + args + " >>" +
                            (dir / "stdout.log").string() + " 2>>" +
                            (dir / "stderr.log").string();
    return std::system(cmd.c_str()) == 0;
  }
};

bool same_bytes(const std::filesystem::path& a,
                const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::string ca((std::istreambuf_iterator<char>(fa)),
                 std::istreambuf_iterator<char>());
  std::string cb((std::istreambuf_iterator<char>(fb)),
                 std::istreambuf_iterator<char>());
  return !ca.empty() && ca == cb;
}

Outcome criterion_cli_determinism() {
  const char* bin = std::getenv("DXGATE_BIN");
  if (!bin || !std::filesystem::exists(bin)) {
    return Outcome::skip("DXGATE_BIN not set; run via ctest or point it at "
                         "the dxgate binary");
  }
  const auto dir = scratch_dir() / "cli";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const CliRunner cli{bin, dir};

  // Inputs: a small embedding file, a corpus and prompt records.
  {
    Rng rng(1201);
    std::ofstream glove(dir / "vectors.txt");
    glove.precision(6);
    for (int i = 0; i < 400; ++i) {
      glove << "w" << i;
      for (int j = 0; j < 12; ++j) glove << ' ' << 2.0 * rng.next_normal();
      glove << '\n';
    }
    std::ofstream corpus(dir / "corpus.jsonl");
    for (int d = 0; d < 10; ++d) {
      std::string text;
      for (int w = 0; w < 25; ++w) {
        if (w > 0) text += ' ';
        text += "w" + std::to_string(rng.next_below(400));
      }
      corpus << nlohmann::json({{"id", "doc" + std::to_string(d)},
                                {"text", text}})
                    .dump()
             << '\n';
    }
    std::ofstream pairs(dir / "pairs.jsonl");
    for (int i = 0; i < 30; ++i) {
      std::string prompt;
      for (int w = 0; w < 12; ++w) {
        if (w > 0) prompt += ' ';
        prompt += "w" + std::to_string(rng.next_below(400));
      }
      pairs << nlohmann::json({{"id", "p" + std::to_string(i)},
                               {"prompt", prompt},
                               {"epsilon", 0.5 + 0.2 * (i % 10)},
                               {"slm_result", prompt + " summary"},
                               {"slm_result_sanitized", prompt},
                               {"llm_result", prompt + " large summary"}})
                   .dump()
            << '\n';
    }
    std::ofstream text(dir / "input.txt");
    text << "w1 w2 w3 unknownword w4 w5 w6 w7 w8 w9\n";
  }

  const std::string model = (dir / "vectors.txt").string();
  const auto out = [&](const std::string& leaf) {
    return (dir / leaf).string();
  };
  const std::vector<std::pair<std::string, std::string>> sweeps = {
      {"convert --in " + model + " --out {}", "model{}.bin"},
      {"nn --model " + model + " --token w7 -k 5 --backend ann --ann-seed 4 "
       "--out {}",
       "nn{}.json"},
      {"sanitize --model " + model + " --epsilon 2 --seed 42 --in " +
           out("input.txt") + " --out {}",
       "san{}.json"},
      {"replicate words --model " + model +
           " --words w3,w5 --epsilons 1,4 --trials 100 --seed 7 --out {}",
       "words{}.csv"},
      {"replicate curve --model " + model +
           " --epsilons 1,4 --sample-size 20 --trials 25 --seed 9 --out {}",
       "curve{}.csv"},
      {"sweep --model " + model + " --corpus " + out("corpus.jsonl") +
           " --epsilons 0.5,2 --seed 11 --out {}",
       "sweep{}.csv"},
      {"features --model " + model + " --epsilon 2 --in " +
           out("pairs.jsonl") + " --seed 13 --out {}",
       "features{}.csv"},
  };

  for (const auto& [args_template, leaf_template] : sweeps) {
    for (const char* tag : {"A", "B"}) {
      std::string args = args_template;
      std::string leaf = leaf_template;
      leaf.replace(leaf.find("{}"), 2, tag);
      args.replace(args.find("{}"), 2, out(leaf).c_str());
      if (!cli.run(args)) {
        return Outcome::fail("subcommand failed: " + args);
      }
    }
    std::string leaf_a = leaf_template, leaf_b = leaf_template;
    leaf_a.replace(leaf_a.find("{}"), 2, "A");
    leaf_b.replace(leaf_b.find("{}"), 2, "B");
    if (!same_bytes(dir / leaf_a, dir / leaf_b)) {
      return Outcome::fail("outputs differ between identical runs: " +
                           leaf_a + " vs " + leaf_b);
    }
  }

  // train twice: model bytes and report must both match.
  const std::string features_csv = out("featuresA.csv");
  for (const char* tag : {"A", "B"}) {
    const std::string args = "train --features " + features_csv +
                             " --feature-set ABCD --seed 5 --out " +
                             out(std::string("gbdt") + tag + ".bin") +
                             " --report " +
                             out(std::string("report") + tag + ".json");
    if (!cli.run(args)) return Outcome::fail("train subcommand failed");
  }
  if (!same_bytes(dir / "gbdtA.bin", dir / "gbdtB.bin") ||
      !same_bytes(dir / "reportA.json", dir / "reportB.json")) {
    return Outcome::fail("train outputs differ between identical runs");
  }
  return Outcome::pass(
      "convert, nn, sanitize, replicate words/curve, sweep, features and "
      "train all byte-identical across repeated seeded runs");
}

}  // namespace

int main() {
  const auto glove_path = find_glove();
  std::optional<EmbeddingModel> glove;
  if (glove_path) {
    std::cerr << "loading " << *glove_path << " ...\n";
    glove.emplace(load_glove_text(*glove_path));
  }
  GloveCells cells;

  using Fn = std::function<Outcome()>;
  const std::vector<std::pair<std::string, Fn>> criteria = {
      {"C1 noise-law moments", criterion_noise_law},
      {"C2 rank-sampler law", criterion_rank_law},
      {"C3 rank-base invariance", criterion_rank_base_invariance},
      {"C4 privacy-ratio Monte Carlo", criterion_privacy_ratio},
      {"C5 ENN replication (GloVe scale)",
       [&] { return criterion_enn_replication(glove ? &*glove : nullptr,
                                              &cells); }},
      {"C6 ANN replication trend (GloVe scale)",
       [&] { return criterion_ann_replication(glove ? &*glove : nullptr,
                                              &cells); }},
      {"C7 vocabulary self-return curve",
       [&] { return criterion_vocabulary_curve(glove ? &*glove : nullptr); }},
      {"C8 high-noise corpus regime", criterion_high_noise_corpus},
      {"C9 regressor correctness", criterion_regressor},
      {"C10 middleware-benefit surrogate", criterion_middleware_benefit},
      {"C11 gateway contracts", criterion_gateway_contracts},
      {"C12 CLI determinism sweep", criterion_cli_determinism},
  };

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome outcome = Outcome::fail("unhandled exception");
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome = Outcome::fail(std::string("exception: ") + e.what());
    }
    const char* tag = outcome.status == Outcome::Status::kPass   ? "PASS"
                      : outcome.status == Outcome::Status::kSkip ? "SKIP"
                                                                 : "FAIL";
    if (outcome.status == Outcome::Status::kFail) ++failures;
    std::cout << "[" << tag << "] " << name << ": " << outcome.detail
              << std::endl;
  }
  std::filesystem::remove_all(scratch_dir());
  return failures == 0 ? 0 : 1;
}
