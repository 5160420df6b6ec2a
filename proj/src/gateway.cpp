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

#include "dxgate/gateway.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "dxgate/http.hpp"
#include "json.hpp"

#include "dxgate/digest.hpp"
#include "dxgate/similarity.hpp"

namespace dxgate {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

nlohmann::json decision_json(const GateDecision& d) {
  nlohmann::json j;
  j["decision"] = d.forward ? "forward" : "abort";
  j["predicted_e"] = d.predicted_target;
  j["features"] = {{"epsilon", d.features.epsilon},
                   {"sim_sanitized", d.features.sim_sanitized},
                   {"sim_slm", d.features.sim_slm},
                   {"sim_slm_sanitized", d.features.sim_slm_sanitized}};
  j["sanitized_prompt"] = d.sanitized_prompt;
  j["slm_result"] = d.slm_result;
  j["slm_result_sanitized"] = d.slm_result_sanitized;
  j["llm_result"] = d.llm_result ? nlohmann::json(*d.llm_result)
                                 : nlohmann::json(nullptr);
  j["realized_e"] = d.realized_target ? nlohmann::json(*d.realized_target)
                                      : nlohmann::json(nullptr);
  j["cache_hit"] = d.cache_hit;
  j["correction_applied"] = d.correction_applied;
  j["correction_failed"] = d.correction_failed;
  return j;
}

}  // namespace

void TaskRequest::validate() const {
  if (prompt.empty()) throw std::invalid_argument("prompt must be non-empty");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (quality_threshold < -1.0 || quality_threshold > 1.0) {
    throw std::invalid_argument("quality_threshold must be in [-1, 1]");
  }
  if (task == TaskKind::kCustom && custom_instruction.empty()) {
    throw std::invalid_argument("custom task requires an instruction");
  }
}

// --------------------------------------------------------------------------
// SanitizationCache

SanitizationCache::SanitizationCache(std::filesystem::path path)
    : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // first run: file appears on first insert
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      entries_[record.at("key").get<std::string>()] =
          record.at("sanitized").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path_.string() + ":" +
                               std::to_string(line_no) +
                               ": corrupt cache record: " + e.what());
    }
  }
}

std::string SanitizationCache::make_key(const std::string& prompt,
                                        double epsilon,
                                        const std::string& model_name,
                                        Variant variant) {
  std::ostringstream os;
  os.precision(17);
  os << epsilon << '|' << model_name << '|' << to_string(variant) << '|'
     << prompt;
  return sha256_hex(os.str());
}

std::optional<std::string> SanitizationCache::lookup(const std::string& key) {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::pair<std::string, bool> SanitizationCache::get_or_insert(
    const std::string& key, const std::function<std::string()>& compute) {
  {
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
      if (const auto it = entries_.find(key); it != entries_.end()) {
        return {it->second, false};
      }
      if (in_flight_.count(key) == 0) {
        in_flight_[key] = true;
        break;
      }
      pending_cv_.wait(lock);
    }
  }
  std::string value;
  try {
    value = compute();
  } catch (...) {
    std::lock_guard<std::mutex> lock(mutex_);
    in_flight_.erase(key);
    pending_cv_.notify_all();
    throw;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[key] = value;
  in_flight_.erase(key);
  append_record(key, value);
  pending_cv_.notify_all();
  return {value, true};
}

std::size_t SanitizationCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

void SanitizationCache::append_record(const std::string& key,
                                      const std::string& value) {
  nlohmann::json record;
  record["key"] = key;
  record["sanitized"] = value;
  record["ts_ms"] = now_ms();
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    throw std::runtime_error("cannot append to cache: " + path_.string());
  }
  out << record.dump() << '\n';
  out.flush();
}

// --------------------------------------------------------------------------
// TrainingLog

TrainingLog::TrainingLog(std::filesystem::path path)
    : path_(std::move(path)) {}

void TrainingLog::append(const GateDecision& decision,
                         const TaskRequest& request) {
  nlohmann::json record;
  record["ts_ms"] = now_ms();
  record["task"] = to_string(request.task);
  record["prompt_digest"] = sha256_hex(request.prompt);
  record["decision"] = decision.forward ? "forward" : "abort";
  record["epsilon"] = decision.features.epsilon;
  record["sim_b"] = decision.features.sim_sanitized;
  record["sim_c"] = decision.features.sim_slm;
  record["sim_d"] = decision.features.sim_slm_sanitized;
  if (decision.realized_target) {
    record["target_e"] = *decision.realized_target;
  }
  record["predicted_e"] = decision.predicted_target;
  record["cache_hit"] = decision.cache_hit;
  const std::string line = record.dump();

  // Single buffered write per record under the lock keeps concurrent
  // appends intact. Disk trouble must not fail the request path.
  std::lock_guard<std::mutex> lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    std::cerr << "warning: training log unavailable: " << path_ << '\n';
    return;
  }
  out << line << '\n';
  out.flush();
  if (!out) {
    std::cerr << "warning: training log append failed: " << path_ << '\n';
  }
}

std::vector<FeatureRow> TrainingLog::export_rows() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::ifstream in(path_);
  std::vector<FeatureRow> rows;
  if (!in) return rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path_.string() + ":" +
                               std::to_string(line_no) +
                               ": corrupt log record: " + e.what());
    }
    if (!record.contains("target_e")) continue;  // aborted: no realized E
    FeatureRow row;
    row.id = record.value("prompt_digest", std::to_string(line_no));
    row.epsilon = record.at("epsilon").get<double>();
    row.sim_b = record.at("sim_b").get<double>();
    row.sim_c = record.at("sim_c").get<double>();
    row.sim_d = record.at("sim_d").get<double>();
    row.target = record.at("target_e").get<double>();
    rows.push_back(std::move(row));
  }
  return rows;
}

// --------------------------------------------------------------------------
// Gateway

Gateway::Gateway(const EmbeddingModel& model, GatewayConfig config,
                 std::shared_ptr<ChatBackend> slm,
                 std::shared_ptr<ChatBackend> llm,
                 std::shared_ptr<TextEmbeddingProvider> provider,
                 GbdtModel regressor)
    : model_(&model),
      config_(std::move(config)),
      slm_(std::move(slm)),
      llm_(std::move(llm)),
      provider_(std::move(provider)),
      regressor_(std::move(regressor)) {
  config_.sanitization.validate();
  if (!slm_ || !llm_) {
    throw std::invalid_argument("Gateway: SLM and LLM backends are required");
  }
  cache_ = std::make_unique<SanitizationCache>(config_.cache_path);
  log_ = std::make_unique<TrainingLog>(config_.training_log_path);
  if (config_.sanitization.nn_backend == SearchBackend::kApproximate) {
    ann_.emplace(*model_, config_.sanitization.ann);
  }
}

Gateway::Prepared Gateway::prepare(const TaskRequest& request) {
  request.validate();

  GateDecision decision;

  // Sanitize before any network call; a cold miss must not leak the raw
  // prompt beyond the trusted local endpoint.
  const std::string key = SanitizationCache::make_key(
      request.prompt, request.epsilon, model_->name(),
      config_.sanitization.variant);
  const auto [sanitized, inserted] = cache_->get_or_insert(key, [&] {
    SanitizationConfig sc = config_.sanitization;
    sc.epsilon = request.epsilon;
    sc.rng_seed = Rng::mix_key(config_.sanitization.rng_seed,
                               digest64(request.prompt));
    const Sanitizer sanitizer(*model_, sc, ann_ ? &*ann_ : nullptr);
    ++sanitizations_performed_;
    TokenizerOptions options;
    options.lowercase = config_.lowercase_tokens;
    return sanitize_document(sanitizer, request.prompt, options).text;
  });
  decision.sanitized_prompt = sanitized;
  decision.cache_hit = !inserted;

  // Optional coherence/grammar pass over the sanitized prompt; the
  // corrected text is what both models then work on.
  std::string task_prompt = sanitized;
  if (request.correct_prompts) {
    try {
      task_prompt = slm_->complete(config_.slm.correction_template, sanitized,
                                   task_max_tokens(config_.slm,
                                                   TaskKind::kCustom,
                                                   sanitized));
      decision.correction_applied = true;
    } catch (const ChatError&) {
      task_prompt = sanitized;
      decision.correction_failed = true;
    }
  }

  const std::string slm_instruction =
      task_instruction(config_.slm, request.task, request.target_language,
                       request.custom_instruction);
  decision.slm_result = slm_->complete(
      slm_instruction, request.prompt,
      task_max_tokens(config_.slm, request.task, request.prompt));
  decision.slm_result_sanitized = slm_->complete(
      slm_instruction, task_prompt,
      task_max_tokens(config_.slm, request.task, task_prompt));

  decision.features = compute_features(
      request.prompt, task_prompt, decision.slm_result,
      decision.slm_result_sanitized, request.epsilon, provider_);
  decision.predicted_target = regressor_.predict(decision.features);
  decision.forward = decision.predicted_target >= request.quality_threshold;
  return Prepared{std::move(decision), std::move(task_prompt)};
}

GateDecision Gateway::assess(const TaskRequest& request) {
  return prepare(request).decision;
}

GateDecision Gateway::handle_request(const TaskRequest& request) {
  Prepared prepared = prepare(request);
  GateDecision& decision = prepared.decision;
  if (!decision.forward) {
    log_->append(decision, request);
    return decision;
  }

  std::string llm_result;
  try {
    llm_result = llm_->complete(
        task_instruction(config_.llm, request.task, request.target_language,
                         request.custom_instruction),
        prepared.task_prompt_sanitized,
        task_max_tokens(config_.llm, request.task,
                        prepared.task_prompt_sanitized));
  } catch (const ChatError& e) {
    // Forward decision stands in the log; the caller gets the local
    // result as fallback payload.
    log_->append(decision, request);
    throw LlmFailure(e.what(), decision);
  }
  decision.llm_result = llm_result;
  // Realized utility, same provider and formula as feature D.
  decision.realized_target = cosine_similarity(
      provider_.embed_one(request.prompt), provider_.embed_one(llm_result));
  log_->append(decision, request);
  return decision;
}

// --------------------------------------------------------------------------
// Config

GatewayConfig load_gateway_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open gateway config: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("gateway config is not valid JSON: " +
                             std::string(e.what()));
  }

  GatewayConfig config;
  config.embedding_model_path = j.at("embedding_model").get<std::string>();
  if (j.contains("sanitization")) {
    const auto& s = j["sanitization"];
    config.sanitization.epsilon = s.value("epsilon", 100.0);
    config.sanitization.variant =
        variant_from_string(s.value("variant", "rank_sampled"));
    config.sanitization.nn_backend =
        backend_from_string(s.value("backend", "exact"));
    config.sanitization.rng_seed = s.value("seed", 0ULL);
    config.sanitization.oov_policy =
        s.value("oov_passthrough", true) ? OovPolicy::kPassthroughFlagged
                                         : OovPolicy::kError;
    config.lowercase_tokens = s.value("lowercase", true);
    if (s.contains("ann")) {
      const auto& a = s["ann"];
      config.sanitization.ann.tree_count = a.value("tree_count", 10);
      config.sanitization.ann.leaf_size = a.value("leaf_size", 40);
      config.sanitization.ann.search_budget = a.value("search_budget", 800);
      config.sanitization.ann.build_seed = a.value("build_seed", 0ULL);
    }
  }

  const auto parse_endpoint = [&](const char* name, const char* role) {
    ChatEndpointConfig e;
    e.role = role;
    const auto& s = j.at(name);
    e.base_url = s.at("base_url").get<std::string>();
    e.path = s.value("path", std::string("/v1/chat/completions"));
    e.model = s.value("model", std::string());
    e.auth_env = s.value("auth_env", std::string());
    e.timeout_s = s.value("timeout_s", 120);
    e.summarize_max_tokens = s.value("summarize_max_tokens", 142);
    e.translate_length_factor = s.value("translate_length_factor", 1.3);
    if (s.contains("summarize_template")) {
      e.summarize_template = s["summarize_template"].get<std::string>();
    }
    if (s.contains("translate_template")) {
      e.translate_template = s["translate_template"].get<std::string>();
    }
    if (s.contains("correction_template")) {
      e.correction_template = s["correction_template"].get<std::string>();
    }
    return e;
  };
  config.slm = parse_endpoint("slm", "slm");
  config.llm = parse_endpoint("llm", "llm");
  if (config.slm.base_url == config.llm.base_url &&
      config.slm.model == config.llm.model) {
    throw std::runtime_error(
        "gateway config: slm and llm must be distinct endpoints");
  }

  config.regressor_model_path = j.at("regressor_model").get<std::string>();
  config.quality_threshold = j.value("quality_threshold", 0.6);
  config.cache_path = j.value("cache_path", config.cache_path);
  config.training_log_path =
      j.value("training_log", config.training_log_path);

  if (j.contains("provider")) {
    const auto& p = j["provider"];
    config.provider_kind = p.value("kind", std::string("mock"));
    config.provider_dim = p.value("dim", 256);
    config.provider_seed = p.value("seed", 7ULL);
    config.provider_semantic = p.value("semantic", true);
    config.provider_base_url = p.value("base_url", std::string());
    config.provider_path = p.value("path", std::string());
    config.provider_model = p.value("model", std::string());
    config.provider_auth_env = p.value("auth_env", std::string());
    config.provider_file = p.value("file", std::string());
  }
  config.host = j.value("host", config.host);
  config.port = j.value("port", config.port);
  return config;
}

std::shared_ptr<TextEmbeddingProvider> make_provider(
    const GatewayConfig& config) {
  if (config.provider_kind == "mock") {
    return std::make_shared<MockEmbeddingProvider>(config.provider_dim,
                                                   config.provider_seed,
                                                   config.provider_semantic);
  }
  if (config.provider_kind == "http") {
    return std::make_shared<HttpEmbeddingProvider>(
        config.provider_base_url, config.provider_path, config.provider_model,
        config.provider_auth_env);
  }
  if (config.provider_kind == "file") {
    return std::make_shared<FileEmbeddingProvider>(config.provider_file);
  }
  throw std::invalid_argument("unknown provider kind: " +
                              config.provider_kind);
}

// --------------------------------------------------------------------------
// HTTP server

namespace {

TaskRequest request_from_json(const nlohmann::json& j, double default_tau) {
  TaskRequest request;
  request.prompt = j.at("prompt").get<std::string>();
  request.task = task_from_string(j.value("task", std::string("summarize")));
  request.target_language = j.value("target_language", std::string());
  request.custom_instruction = j.value("instruction", std::string());
  request.epsilon = j.at("epsilon").get<double>();
  request.quality_threshold = j.value("quality_threshold", default_tau);
  request.correct_prompts = j.value("correct_prompts", false);
  request.client_id = j.value("client", std::string());
  request.validate();
  return request;
}

}  // namespace

struct GatewayServer::Impl {
  explicit Impl(Gateway& g) : gateway(g) {
    server.Get("/healthz",
               [](const httplib::Request&, httplib::Response& res) {
                 res.set_content(nlohmann::json({{"status", "ok"}}).dump(),
                                 "application/json");
               });
    server.Post("/v1/assess",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle(false, req, res);
                });
    server.Post("/v1/complete",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle(true, req, res);
                });
  }

  void handle(bool full, const httplib::Request& req,
              httplib::Response& res) {
    TaskRequest request;
    try {
      const auto body = nlohmann::json::parse(req.body);
      request = request_from_json(body, gateway.default_threshold());
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json({{"error", e.what()}}).dump(),
                      "application/json");
      return;
    }
    try {
      const GateDecision decision =
          full ? gateway.handle_request(request) : gateway.assess(request);
      res.set_content(decision_json(decision).dump(), "application/json");
    } catch (const LlmFailure& e) {
      nlohmann::json payload = decision_json(e.decision);
      payload["error"] = e.what();
      payload["fallback_slm_result"] = e.decision.slm_result;
      res.status = 502;
      res.set_content(payload.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 502;
      res.set_content(nlohmann::json({{"error", e.what()}}).dump(),
                      "application/json");
    }
  }

  Gateway& gateway;
  httplib::Server server;
  std::thread worker;
};

GatewayServer::GatewayServer(Gateway& gateway)
    : impl_(std::make_unique<Impl>(gateway)) {}

GatewayServer::~GatewayServer() { stop(); }

int GatewayServer::start_async(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port <= 0) return 0;
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void GatewayServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

int GatewayServer::run(const std::string& host, int port) {
  std::cerr << "gateway listening on " << host << ":" << port << '\n';
  if (!impl_->server.listen(host, port)) {
    std::cerr << "failed to bind " << host << ":" << port << '\n';
    return 2;
  }
  return 0;
}

}  // namespace dxgate
