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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dxgate/ann_index.hpp"
#include "dxgate/embedding_model.hpp"
#include "dxgate/embedding_provider.hpp"
#include "dxgate/features.hpp"
#include "dxgate/gateway.hpp"
#include "dxgate/gbdt.hpp"
#include "dxgate/mechanism.hpp"
#include "dxgate/nn_search.hpp"
#include "dxgate/parallel.hpp"
#include "dxgate/replication.hpp"
#include "dxgate/similarity.hpp"

namespace {

using namespace dxgate;
using nlohmann::json;

// Primary artifacts go to stdout ("-") or a file; diagnostics to stderr.
void write_output(const std::string& out, const std::string& body) {
  if (out == "-") {
    std::cout << body;
    std::cout.flush();
    return;
  }
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write output file: " + out);
  file << body;
}

std::string read_input(const std::string& in) {
  if (in == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream file(in, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open input file: " + in);
  std::ostringstream buf;
  buf << file.rdbuf();
  return buf.str();
}

// Binary container or GloVe text, decided by the magic bytes.
EmbeddingModel load_model_any(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open model: " + path);
  char magic[4] = {};
  probe.read(magic, 4);
  probe.close();
  if (std::string_view(magic, 4) == "DXEM") return load_binary(path);
  return load_glove_text(path);
}

struct AnnFlags {
  int trees = AnnParams{}.tree_count;
  int leaf = AnnParams{}.leaf_size;
  int budget = AnnParams{}.search_budget;
  std::uint64_t seed = 0;

  AnnParams params() const {
    AnnParams p;
    p.tree_count = trees;
    p.leaf_size = leaf;
    p.search_budget = budget;
    p.build_seed = seed;
    return p;
  }
  void attach(CLI::App* cmd) {
    cmd->add_option("--ann-trees", trees, "ANN tree count");
    cmd->add_option("--ann-leaf", leaf, "ANN leaf size");
    cmd->add_option("--ann-budget", budget, "ANN candidate budget");
    cmd->add_option("--ann-seed", seed, "ANN build seed");
  }
};

struct ProviderFlags {
  std::string kind = "mock";
  int dim = 256;
  std::uint64_t seed = 7;
  bool hash_only = false;
  std::string base_url;
  std::string path;
  std::string model;
  std::string auth_env;
  std::string file;

  void attach(CLI::App* cmd) {
    cmd->add_option("--provider", kind, "Embedding provider: mock|http|file")
        ->check(CLI::IsMember({"mock", "http", "file"}));
    cmd->add_option("--provider-dim", dim, "Mock provider dimension");
    cmd->add_option("--provider-seed", seed, "Mock provider seed");
    cmd->add_flag("--provider-hash-only", hash_only,
                  "Mock provider: pure hash vectors instead of semantic");
    cmd->add_option("--provider-url", base_url, "HTTP provider base URL");
    cmd->add_option("--provider-path", path, "HTTP provider request path");
    cmd->add_option("--provider-model", model, "HTTP provider model name");
    cmd->add_option("--provider-auth-env", auth_env,
                    "Env var holding the provider bearer token");
    cmd->add_option("--provider-file", file,
                    "JSON lookup file for the file provider");
  }

  std::shared_ptr<TextEmbeddingProvider> make() const {
    if (kind == "mock") {
      return std::make_shared<MockEmbeddingProvider>(dim, seed, !hash_only);
    }
    if (kind == "http") {
      if (base_url.empty()) {
        throw std::runtime_error("--provider-url is required for http");
      }
      return std::make_shared<HttpEmbeddingProvider>(base_url, path, model,
                                                     auth_env);
    }
    if (file.empty()) {
      throw std::runtime_error("--provider-file is required for file");
    }
    return std::make_shared<FileEmbeddingProvider>(file);
  }
};

std::string sweep_csv(const CorpusSweep& sweep) {
  std::ostringstream os;
  os << "epsilon,mean_similarity,mean_unchanged_pct,documents,partial\n";
  for (std::size_t i = 0; i < sweep.similarity.epsilons.size(); ++i) {
    os << sweep.similarity.epsilons[i] << ',' << sweep.similarity.values[i]
       << ',' << sweep.unchanged_pct.values[i] << ','
       << sweep.similarity.sample_size << ','
       << (sweep.partial ? "true" : "false") << '\n';
  }
  return os.str();
}

json sweep_json(const CorpusSweep& sweep) {
  json j;
  j["documents"] = sweep.similarity.sample_size;
  j["partial"] = sweep.partial;
  if (sweep.partial) j["error"] = sweep.error;
  j["points"] = json::array();
  for (std::size_t i = 0; i < sweep.similarity.epsilons.size(); ++i) {
    j["points"].push_back(
        {{"epsilon", sweep.similarity.epsilons[i]},
         {"mean_similarity", sweep.similarity.values[i]},
         {"mean_unchanged_pct", sweep.unchanged_pct.values[i]}});
  }
  return j;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    grid.push_back(std::stod(item));
    if (!(grid.back() > 0.0)) {
      throw CLI::ValidationError("--epsilons", "epsilon values must be > 0");
    }
  }
  if (grid.empty()) {
    throw CLI::ValidationError("--epsilons", "empty epsilon grid");
  }
  return grid;
}

std::vector<std::string> parse_words(const std::string& csv) {
  std::vector<std::string> words;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) words.push_back(item);
  }
  if (words.empty()) {
    throw CLI::ValidationError("--words", "empty word list");
  }
  return words;
}

int run_cli(int argc, char** argv) {
  CLI::App app{
      "dx-privacy text sanitization, replication experiments and "
      "utility-gating middleware"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "Worker thread cap (0 = all hardware threads)");

  // ---- convert ----------------------------------------------------------
  auto* convert = app.add_subcommand(
      "convert", "Convert a GloVe text file to the binary container");
  std::string convert_in, convert_out, convert_name;
  convert->add_option("--in", convert_in, "GloVe text file")->required();
  convert->add_option("--out", convert_out, "Output .bin path")->required();
  convert->add_option("--name", convert_name, "Model name override");

  // ---- nn ---------------------------------------------------------------
  auto* nn = app.add_subcommand("nn", "Query nearest neighbors of a token");
  std::string nn_model, nn_token, nn_backend = "exact", nn_out = "-";
  int nn_k = 10;
  AnnFlags nn_ann;
  nn->add_option("--model", nn_model, "Embedding model path")->required();
  nn->add_option("--token", nn_token, "Query token")->required();
  nn->add_option("-k,--k", nn_k, "Neighbor count")->check(CLI::PositiveNumber);
  nn->add_option("--backend", nn_backend, "Search backend")
      ->check(CLI::IsMember({"exact", "ann"}));
  nn->add_option("--out", nn_out, "Output path or - for stdout");
  nn_ann.attach(nn);

  // ---- sanitize ---------------------------------------------------------
  auto* sanitize =
      app.add_subcommand("sanitize", "Apply the mechanism to text or ids");
  std::string san_model, san_variant = "rank_sampled", san_backend = "exact",
              san_in = "-", san_out = "-", san_oov = "passthrough";
  double san_epsilon = 0.0;
  std::uint64_t san_seed = 0;
  bool san_token_ids = false, san_keep_case = false;
  AnnFlags san_ann;
  sanitize->add_option("--model", san_model, "Embedding model path")
      ->required();
  sanitize->add_option("--epsilon", san_epsilon, "Privacy parameter")
      ->required()
      ->check(CLI::PositiveNumber);
  sanitize->add_option("--variant", san_variant, "Mechanism variant")
      ->check(CLI::IsMember({"nearest_token", "rank_sampled"}));
  sanitize->add_option("--backend", san_backend, "Search backend")
      ->check(CLI::IsMember({"exact", "ann"}));
  sanitize->add_option("--seed", san_seed, "RNG seed")->required();
  sanitize->add_option("--in", san_in, "Input file or - for stdin");
  sanitize->add_option("--out", san_out, "Output path or - for stdout");
  sanitize->add_option("--oov", san_oov, "Out-of-vocabulary policy")
      ->check(CLI::IsMember({"error", "passthrough"}));
  sanitize->add_flag("--token-ids", san_token_ids,
                     "Input is whitespace-separated token ids");
  sanitize->add_flag("--keep-case", san_keep_case,
                     "Do not lowercase words before lookup");
  san_ann.attach(sanitize);

  // ---- replicate --------------------------------------------------------
  auto* replicate = app.add_subcommand(
      "replicate", "Self-return experiments (words | curve)");
  replicate->require_subcommand(1);

  auto* rep_words = replicate->add_subcommand(
      "words", "Per-word output-frequency experiment");
  std::string rw_model, rw_words, rw_epsilons, rw_backend = "exact",
              rw_variant = "nearest_token", rw_out = "-", rw_format = "csv";
  int rw_trials = 1000;
  std::uint64_t rw_seed = 0;
  AnnFlags rw_ann;
  rep_words->add_option("--model", rw_model, "Embedding model")->required();
  rep_words->add_option("--words", rw_words, "Comma-separated words")
      ->required();
  rep_words->add_option("--epsilons", rw_epsilons, "Comma-separated grid")
      ->required();
  rep_words->add_option("--trials", rw_trials, "Sanitizations per cell")
      ->check(CLI::PositiveNumber);
  rep_words->add_option("--backend", rw_backend, "Search backend")
      ->check(CLI::IsMember({"exact", "ann"}));
  rep_words->add_option("--variant", rw_variant, "Mechanism variant")
      ->check(CLI::IsMember({"nearest_token", "rank_sampled"}));
  rep_words->add_option("--seed", rw_seed, "RNG seed")->required();
  rep_words->add_option("--out", rw_out, "Output path or -");
  rep_words->add_option("--format", rw_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  rw_ann.attach(rep_words);

  auto* rep_curve = replicate->add_subcommand(
      "curve", "Vocabulary-wide mean self-return curve");
  std::string rc_model, rc_epsilons, rc_backend = "exact",
              rc_variant = "nearest_token", rc_out = "-";
  int rc_sample = 500, rc_trials = 200;
  std::uint64_t rc_seed = 0;
  AnnFlags rc_ann;
  rep_curve->add_option("--model", rc_model, "Embedding model")->required();
  rep_curve->add_option("--epsilons", rc_epsilons, "Comma-separated grid")
      ->required();
  rep_curve->add_option("--sample-size", rc_sample, "Vocabulary sample size")
      ->check(CLI::PositiveNumber);
  rep_curve->add_option("--trials", rc_trials, "Sanitizations per word")
      ->check(CLI::PositiveNumber);
  rep_curve->add_option("--backend", rc_backend, "Search backend")
      ->check(CLI::IsMember({"exact", "ann"}));
  rep_curve->add_option("--variant", rc_variant, "Mechanism variant")
      ->check(CLI::IsMember({"nearest_token", "rank_sampled"}));
  rep_curve->add_option("--seed", rc_seed, "RNG seed")->required();
  rep_curve->add_option("--out", rc_out, "Output path or -");
  rc_ann.attach(rep_curve);

  // ---- sweep ------------------------------------------------------------
  auto* sweep = app.add_subcommand(
      "sweep", "Corpus sweep: similarity and unchanged% per epsilon");
  std::string sw_model, sw_corpus, sw_epsilons, sw_variant = "rank_sampled",
              sw_backend = "exact", sw_out = "-", sw_format = "csv";
  int sw_max_tokens = 1024, sw_sample = 0;
  std::uint64_t sw_seed = 0;
  ProviderFlags sw_provider;
  AnnFlags sw_ann;
  sweep->add_option("--model", sw_model, "Embedding model")->required();
  sweep->add_option("--corpus", sw_corpus, "JSONL corpus path")->required();
  sweep->add_option("--epsilons", sw_epsilons, "Comma-separated grid")
      ->required();
  sweep->add_option("--variant", sw_variant, "Mechanism variant")
      ->check(CLI::IsMember({"nearest_token", "rank_sampled"}));
  sweep->add_option("--backend", sw_backend, "Search backend")
      ->check(CLI::IsMember({"exact", "ann"}));
  sweep->add_option("--max-tokens", sw_max_tokens,
                    "Drop documents longer than this many tokens");
  sweep->add_option("--sample", sw_sample,
                    "Document sample size (0 keeps all)");
  sweep->add_option("--seed", sw_seed, "RNG seed")->required();
  sweep->add_option("--out", sw_out, "Output path or -");
  sweep->add_option("--format", sw_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sw_provider.attach(sweep);
  sw_ann.attach(sweep);

  // ---- features ---------------------------------------------------------
  auto* features = app.add_subcommand(
      "features", "Compute similarity features from prompt records");
  std::string ft_model, ft_in, ft_out = "-";
  double ft_epsilon = 0.0;
  std::uint64_t ft_seed = 0;
  ProviderFlags ft_provider;
  features
      ->add_option("--model", ft_model,
                   "Embedding model (used for records without a "
                   "pre-sanitized prompt)")
      ->required();
  features
      ->add_option("--epsilon", ft_epsilon,
                   "Default epsilon for records that omit one")
      ->required()
      ->check(CLI::PositiveNumber);
  features->add_option("--in", ft_in, "JSONL prompt records")->required();
  features->add_option("--out", ft_out, "Output path or -");
  features->add_option("--seed", ft_seed, "Sanitization seed");
  ft_provider.attach(features);

  // ---- train ------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Fit the utility regressor");
  std::string tr_features, tr_set = "ABCD", tr_out = "model.gbdt",
              tr_report = "-";
  std::uint64_t tr_seed = 0;
  GbdtParams tr_params;
  train_cmd->add_option("--features", tr_features, "Feature CSV")->required();
  train_cmd->add_option("--feature-set", tr_set, "A or ABCD")
      ->check(CLI::IsMember({"A", "ABCD"}));
  train_cmd->add_option("--seed", tr_seed, "Split seed")->required();
  train_cmd->add_option("--out", tr_out, "Model output path");
  train_cmd->add_option("--report", tr_report, "Report path or -");
  train_cmd->add_option("--iterations", tr_params.iterations,
                        "Boosting iterations");
  train_cmd->add_option("--learning-rate", tr_params.learning_rate,
                        "Shrinkage per tree");
  train_cmd->add_option("--max-depth", tr_params.max_depth, "Tree depth cap");
  train_cmd->add_option("--max-bins", tr_params.max_bins,
                        "Histogram bins per feature");
  train_cmd->add_option("--min-leaf", tr_params.min_samples_leaf,
                        "Minimum samples per leaf");

  // ---- evaluate ---------------------------------------------------------
  auto* evaluate_cmd = app.add_subcommand(
      "evaluate", "Score a trained regressor on labeled features");
  std::string ev_model, ev_features, ev_report = "-";
  evaluate_cmd->add_option("--model", ev_model, "Trained .gbdt model")
      ->required();
  evaluate_cmd->add_option("--features", ev_features, "Feature CSV")
      ->required();
  evaluate_cmd->add_option("--report", ev_report, "Report path or -");

  // ---- serve ------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Run the gateway service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "Gateway JSON config")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  }
  set_thread_count(threads);

  if (convert->parsed()) {
    const auto model = load_glove_text(convert_in, convert_name);
    save_binary(model, convert_out);
    json j;
    j["tokens"] = model.size();
    j["dim"] = model.dim();
    j["name"] = model.name();
    j["out"] = convert_out;
    std::cout << j.dump() << '\n';
    return 0;
  }

  if (nn->parsed()) {
    const auto model = load_model_any(nn_model);
    const auto id = model.lookup(nn_token);
    if (!id) throw std::runtime_error("token not in vocabulary: " + nn_token);
    NeighborList list;
    if (nn_backend == "ann") {
      const AnnIndex index(model, nn_ann.params());
      list = index.nearest(model.embed(*id), nn_k);
    } else {
      list = exact_nearest(model, model.embed(*id), nn_k);
    }
    json j;
    j["token"] = nn_token;
    j["backend"] = nn_backend;
    j["neighbors"] = json::array();
    for (const auto& n : list.entries) {
      j["neighbors"].push_back({{"token", model.token(n.token)},
                                {"id", n.token},
                                {"distance", n.distance}});
    }
    write_output(nn_out, j.dump(2) + "\n");
    return 0;
  }

  if (sanitize->parsed()) {
    const auto model = load_model_any(san_model);
    SanitizationConfig config;
    config.epsilon = san_epsilon;
    config.variant = variant_from_string(san_variant);
    config.nn_backend = backend_from_string(san_backend);
    config.oov_policy = san_oov == "error" ? OovPolicy::kError
                                           : OovPolicy::kPassthroughFlagged;
    config.rng_seed = san_seed;
    config.ann = san_ann.params();
    std::optional<AnnIndex> index;
    if (config.nn_backend == SearchBackend::kApproximate) {
      index.emplace(model, config.ann);
    }
    const Sanitizer sanitizer(model, config, index ? &*index : nullptr);

    const std::string input = read_input(san_in);
    json j;
    j["epsilon"] = san_epsilon;
    j["variant"] = san_variant;
    j["backend"] = san_backend;
    j["seed"] = san_seed;
    if (san_token_ids) {
      std::vector<TokenId> ids;
      std::stringstream ss(input);
      std::string tok;
      while (ss >> tok) {
        ids.push_back(static_cast<TokenId>(std::stoul(tok)));
      }
      const auto result = sanitizer.sanitize_ids(ids);
      j["original_ids"] = result.original_ids;
      j["sanitized_ids"] = result.sanitized_ids;
      j["changed_pct"] =
          ids.empty() ? 0.0
                      : 100.0 - percent_unchanged(result.original_ids,
                                                  result.sanitized_ids);
    } else {
      TokenizerOptions options;
      options.lowercase = !san_keep_case;
      const auto doc = sanitize_document(sanitizer, input, options);
      int oov = 0, changed = 0;
      for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        oov += doc.tokens.oov_flags[i] ? 1 : 0;
        changed += doc.tokens.changed_mask[i] ? 1 : 0;
      }
      j["text"] = doc.text;
      j["tokens"] = doc.tokens.size();
      j["changed_pct"] =
          doc.tokens.size() == 0
              ? 0.0
              : 100.0 * changed / static_cast<double>(doc.tokens.size());
      j["oov_count"] = oov;
      j["oov_flags"] = json::array();
      for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        j["oov_flags"].push_back(static_cast<bool>(doc.tokens.oov_flags[i]));
      }
    }
    write_output(san_out, j.dump(2) + "\n");
    return 0;
  }

  if (rep_words->parsed()) {
    const auto model = load_model_any(rw_model);
    const auto backend = backend_from_string(rw_backend);
    const auto variant = variant_from_string(rw_variant);
    std::optional<AnnIndex> index;
    if (backend == SearchBackend::kApproximate) {
      index.emplace(model, rw_ann.params());
    }
    std::vector<ReplicationReport> reports;
    for (const auto& word : parse_words(rw_words)) {
      for (const double eps : parse_grid(rw_epsilons)) {
        reports.push_back(word_frequency_experiment(
            model, word, eps, rw_trials, backend, variant, rw_seed,
            index ? &*index : nullptr));
        std::cerr << "replicate: " << word << " eps=" << eps
                  << " self=" << reports.back().self_return_count << "/"
                  << rw_trials << '\n';
      }
    }
    if (rw_format == "json") {
      json arr = json::array();
      for (const auto& r : reports) {
        json top = json::array();
        for (const auto& [token, count] : r.top_outputs) {
          top.push_back({{"token", token}, {"count", count}});
        }
        arr.push_back({{"word", r.word},
                       {"epsilon", r.epsilon},
                       {"backend", to_string(r.backend)},
                       {"variant", to_string(r.variant)},
                       {"trials", r.trials},
                       {"self_return", r.self_return_count},
                       {"top_outputs", top}});
      }
      write_output(rw_out, arr.dump(2) + "\n");
    } else {
      std::ostringstream os;
      os << report_csv_header() << '\n';
      for (const auto& r : reports) os << report_csv_row(r) << '\n';
      write_output(rw_out, os.str());
    }
    return 0;
  }

  if (rep_curve->parsed()) {
    const auto model = load_model_any(rc_model);
    const auto backend = backend_from_string(rc_backend);
    const auto variant = variant_from_string(rc_variant);
    std::optional<AnnIndex> index;
    if (backend == SearchBackend::kApproximate) {
      index.emplace(model, rc_ann.params());
    }
    const auto sample = sample_vocabulary(model, rc_sample, rc_seed);
    const auto grid = parse_grid(rc_epsilons);
    const auto curve =
        self_return_curve(model, sample, grid, rc_trials, backend, variant,
                          rc_seed, index ? &*index : nullptr);
    write_output(rc_out, curve_csv(curve, backend, variant));
    return 0;
  }

  if (sweep->parsed()) {
    const auto model = load_model_any(sw_model);
    const auto backend = backend_from_string(sw_backend);
    std::optional<AnnIndex> index;
    if (backend == SearchBackend::kApproximate) {
      index.emplace(model, sw_ann.params());
    }
    std::string warning;
    const auto corpus =
        load_corpus(sw_corpus, sw_max_tokens, sw_sample, sw_seed, &warning);
    if (!warning.empty()) std::cerr << "warning: " << warning << '\n';

    SanitizationConfig config;
    config.variant = variant_from_string(sw_variant);
    config.nn_backend = backend;
    config.oov_policy = OovPolicy::kPassthroughFlagged;
    config.rng_seed = sw_seed;
    config.ann = sw_ann.params();

    MemoizingProvider memo(sw_provider.make());
    const auto similarity = [&](const std::string& a, const std::string& b) {
      return cosine_similarity(memo.embed_one(a), memo.embed_one(b));
    };
    const auto result = corpus_sweep(model, corpus, parse_grid(sw_epsilons),
                                     config, similarity,
                                     index ? &*index : nullptr);
    write_output(sw_out, sw_format == "json"
                             ? sweep_json(result).dump(2) + "\n"
                             : sweep_csv(result));
    if (result.partial) {
      std::cerr << "sweep aborted early: " << result.error << '\n';
      return 2;
    }
    return 0;
  }

  if (features->parsed()) {
    MemoizingProvider memo(ft_provider.make());
    const std::string input = read_input(ft_in);
    std::istringstream lines(input);
    std::string line;
    std::size_t line_no = 0;
    std::vector<FeatureRow> rows;
    std::optional<EmbeddingModel> model;
    SanitizationConfig config;
    config.epsilon = ft_epsilon;
    config.rng_seed = ft_seed;
    config.oov_policy = OovPolicy::kPassthroughFlagged;
    while (std::getline(lines, line)) {
      ++line_no;
      if (line.empty()) continue;
      json record;
      try {
        record = json::parse(line);
      } catch (const json::exception& e) {
        throw std::runtime_error(ft_in + ":" + std::to_string(line_no) +
                                 ": malformed JSONL record: " + e.what());
      }
      const std::string prompt = record.at("prompt").get<std::string>();
      const double eps = record.value("epsilon", ft_epsilon);
      std::string sanitized = record.value("sanitized", std::string());
      if (sanitized.empty()) {
        if (!model) model.emplace(load_model_any(ft_model));
        SanitizationConfig record_config = config;
        record_config.epsilon = eps;
        record_config.rng_seed = Rng::mix_key(ft_seed, line_no);
        const Sanitizer record_sanitizer(*model, record_config);
        sanitized = sanitize_document(record_sanitizer, prompt).text;
      }
      FeatureRow row;
      row.id = record.value("id", std::to_string(line_no));
      const auto f = compute_features(
          prompt, sanitized, record.at("slm_result").get<std::string>(),
          record.at("slm_result_sanitized").get<std::string>(), eps, memo);
      row.epsilon = f.epsilon;
      row.sim_b = f.sim_sanitized;
      row.sim_c = f.sim_slm;
      row.sim_d = f.sim_slm_sanitized;
      if (record.contains("llm_result")) {
        row.target = cosine_similarity(
            memo.embed_one(prompt),
            memo.embed_one(record["llm_result"].get<std::string>()));
      }
      rows.push_back(std::move(row));
    }
    write_output(ft_out, feature_csv(rows));
    return 0;
  }

  if (train_cmd->parsed()) {
    const auto rows = load_feature_csv(tr_features);
    const auto dataset = to_dataset(rows, feature_set_from_string(tr_set));
    const auto result = dxgate::train(dataset, tr_params, tr_seed);
    result.model.save(tr_out);
    json j = json::parse(report_json(result.report));
    j["feature_set"] = tr_set;
    j["train_rows"] = result.train_rows;
    j["test_rows"] = result.test_rows;
    j["seed"] = tr_seed;
    write_output(tr_report, j.dump(2) + "\n");
    return 0;
  }

  if (evaluate_cmd->parsed()) {
    const auto model = GbdtModel::load(ev_model);
    const auto rows = load_feature_csv(ev_features);
    const auto dataset = to_dataset(rows, model.feature_set());
    if (dataset.rows.empty()) {
      throw std::runtime_error("no rows with a realized target in " +
                               ev_features);
    }
    std::vector<double> predictions, targets;
    for (const auto& row : dataset.rows) {
      const FeatureVector f{row.epsilon, row.sim_b, row.sim_c, row.sim_d,
                            std::nullopt, false};
      predictions.push_back(model.predict(f));
      targets.push_back(*row.target);
    }
    const auto report = evaluate(predictions, targets);
    json j = json::parse(report_json(report));
    j["rows"] = dataset.rows.size();
    j["feature_set"] = to_string(model.feature_set());
    write_output(ev_report, j.dump(2) + "\n");
    return 0;
  }

  if (serve->parsed()) {
    const auto config = load_gateway_config(serve_config);
    const auto model = load_model_any(config.embedding_model_path);
    auto slm = std::make_shared<HttpChatBackend>(config.slm);
    auto llm = std::make_shared<HttpChatBackend>(config.llm);
    auto regressor = GbdtModel::load(config.regressor_model_path);
    Gateway gateway(model, config, slm, llm, make_provider(config),
                    std::move(regressor));
    GatewayServer server(gateway);
    return server.run(config.host, config.port);
  }

  return 0;
}

}  // namespace

// Exit codes: 0 success, 1 usage error, 2 runtime error.
int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
