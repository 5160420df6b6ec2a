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

#ifndef DXGATE_GATEWAY_HPP
#define DXGATE_GATEWAY_HPP

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dxgate/chat.hpp"
#include "dxgate/embedding_provider.hpp"
#include "dxgate/features.hpp"
#include "dxgate/gbdt.hpp"
#include "dxgate/mechanism.hpp"

namespace dxgate {

struct TaskRequest {
  std::string prompt;
  TaskKind task = TaskKind::kSummarize;
  std::string target_language;     // translate only
  std::string custom_instruction;  // custom only
  double epsilon = 0.0;            // > 0 required
  double quality_threshold = 0.6;
  bool correct_prompts = false;
  std::string client_id;

  void validate() const;
};

struct GateDecision {
  bool forward = false;
  double predicted_target = 0.0;
  FeatureVector features;
  std::string sanitized_prompt;
  std::string slm_result;
  std::string slm_result_sanitized;
  std::optional<std::string> llm_result;
  std::optional<double> realized_target;
  bool cache_hit = false;
  bool correction_applied = false;
  bool correction_failed = false;
};

// Raised when the forward decision was made but the LLM call failed;
// carries the local result so the caller still gets a usable payload.
class LlmFailure : public std::runtime_error {
 public:
  LlmFailure(const std::string& what, GateDecision decision)
      : std::runtime_error(what), decision(std::move(decision)) {}
  GateDecision decision;
};

// Persistent map digest(prompt, epsilon, model, variant) -> sanitized
// text, so any (prompt, epsilon) pair is ever sanitized once. Records
// are appended as JSONL and flushed on write; reopening the same file
// restores the map. insert-or-get is atomic: two concurrent firsts for
// one key store exactly one sanitization.
class SanitizationCache {
 public:
  explicit SanitizationCache(std::filesystem::path path);

  static std::string make_key(const std::string& prompt, double epsilon,
                              const std::string& model_name, Variant variant);

  std::optional<std::string> lookup(const std::string& key);

  // Returns the stored text and whether this call inserted it. `compute`
  // runs at most once per key across all threads; other threads block
  // until the first insert lands.
  std::pair<std::string, bool> get_or_insert(
      const std::string& key, const std::function<std::string()>& compute);

  std::size_t size() const;

 private:
  void append_record(const std::string& key, const std::string& value);

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::condition_variable pending_cv_;
  std::unordered_map<std::string, std::string> entries_;
  std::unordered_map<std::string, bool> in_flight_;
};

// Append-only JSONL log of gate decisions; rows with a realized target
// become regressor training data.
class TrainingLog {
 public:
  explicit TrainingLog(std::filesystem::path path);

  void append(const GateDecision& decision, const TaskRequest& request);
  std::vector<FeatureRow> export_rows() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

struct GatewayConfig {
  std::string embedding_model_path;
  SanitizationConfig sanitization;
  bool lowercase_tokens = true;
  ChatEndpointConfig slm;
  ChatEndpointConfig llm;
  std::string regressor_model_path;
  double quality_threshold = 0.6;
  std::string cache_path = "sanitization_cache.jsonl";
  std::string training_log_path = "training_log.jsonl";

  // Provider selection: "mock", "http" or "file".
  std::string provider_kind = "mock";
  int provider_dim = 256;
  std::uint64_t provider_seed = 7;
  bool provider_semantic = true;
  std::string provider_base_url;
  std::string provider_path;
  std::string provider_model;
  std::string provider_auth_env;
  std::string provider_file;

  std::string host = "127.0.0.1";
  int port = 8080;
};

GatewayConfig load_gateway_config(const std::filesystem::path& path);
std::shared_ptr<TextEmbeddingProvider> make_provider(
    const GatewayConfig& config);

// The middleware: sanitize, run the local model on both prompts, score
// features, predict the online model's utility and forward only above
// the threshold. Shared state (cache, log, memo) is thread-safe; one
// instance serves concurrent requests.
class Gateway {
 public:
  Gateway(const EmbeddingModel& model, GatewayConfig config,
          std::shared_ptr<ChatBackend> slm, std::shared_ptr<ChatBackend> llm,
          std::shared_ptr<TextEmbeddingProvider> provider, GbdtModel regressor);

  // Full flow. On an LLM transport failure after a forward decision the
  // decision is logged and LlmFailure carries it to the caller.
  GateDecision handle_request(const TaskRequest& request);

  // Steps 1-4 only: never touches the LLM endpoint and does not log.
  GateDecision assess(const TaskRequest& request);

  TrainingLog& training_log() { return *log_; }
  SanitizationCache& cache() { return *cache_; }
  MemoizingProvider& provider() { return provider_; }
  const GbdtModel& regressor() const { return regressor_; }
  double default_threshold() const { return config_.quality_threshold; }

  std::size_t sanitizations_performed() const {
    return sanitizations_performed_.load();
  }

 private:
  struct Prepared {
    GateDecision decision;
    std::string task_prompt_sanitized;  // corrected when enabled
  };
  Prepared prepare(const TaskRequest& request);

  const EmbeddingModel* model_;
  GatewayConfig config_;
  std::shared_ptr<ChatBackend> slm_;
  std::shared_ptr<ChatBackend> llm_;
  MemoizingProvider provider_;
  GbdtModel regressor_;
  std::unique_ptr<SanitizationCache> cache_;
  std::unique_ptr<TrainingLog> log_;
  std::optional<AnnIndex> ann_;
  std::atomic<std::size_t> sanitizations_performed_{0};
};

// HTTP front end: /v1/assess (steps 1-4), /v1/complete (full flow) and
// /healthz. One instance per Gateway.
class GatewayServer {
 public:
  explicit GatewayServer(Gateway& gateway);
  ~GatewayServer();

  // Binds an ephemeral port and serves from a background thread;
  // returns the bound port. Used by tests.
  int start_async(const std::string& host);
  void stop();

  // Blocks until stopped; returns a process exit code.
  int run(const std::string& host, int port);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dxgate

#endif  // DXGATE_GATEWAY_HPP
