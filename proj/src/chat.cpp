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

#include "dxgate/chat.hpp"

#include <cmath>
#include <cstdlib>

#include "dxgate/http.hpp"
#include "json.hpp"

#include "dxgate/tokenizer.hpp"

namespace dxgate {

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::kSummarize:
      return "summarize";
    case TaskKind::kTranslate:
      return "translate";
    case TaskKind::kCustom:
      return "custom";
  }
  return "custom";
}

TaskKind task_from_string(const std::string& s) {
  if (s == "summarize") return TaskKind::kSummarize;
  if (s == "translate") return TaskKind::kTranslate;
  if (s == "custom") return TaskKind::kCustom;
  throw std::invalid_argument("unknown task: " + s);
}

HttpChatBackend::HttpChatBackend(ChatEndpointConfig config)
    : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw std::invalid_argument("chat endpoint base_url is empty");
  }
}

std::string HttpChatBackend::complete(const std::string& instruction,
                                      const std::string& text,
                                      int max_tokens) {
  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array(
      {{{"role", "system"}, {"content", instruction}},
       {{"role", "user"}, {"content", text}}});
  if (max_tokens > 0) body["max_tokens"] = max_tokens;

  httplib::Client client(config_.base_url);
  client.set_read_timeout(config_.timeout_s, 0);
  client.set_connection_timeout(config_.timeout_s, 0);
  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    if (const char* token = std::getenv(config_.auth_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  auto res = client.Post(config_.path, headers, body.dump(),
                         "application/json");
  if (!res) {
    throw ChatError(config_.role + " endpoint unreachable: " +
                    config_.base_url);
  }
  if (res->status != 200) {
    throw ChatError(config_.role + " endpoint returned HTTP " +
                    std::to_string(res->status) + ": " + res->body);
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ChatError(config_.role +
                    " endpoint reply is not chat-completions shaped: " +
                    e.what());
  }
}

std::string task_instruction(const ChatEndpointConfig& config, TaskKind task,
                             const std::string& target_language,
                             const std::string& custom_instruction) {
  switch (task) {
    case TaskKind::kSummarize:
      return config.summarize_template;
    case TaskKind::kTranslate: {
      std::string instruction = config.translate_template;
      const std::string placeholder = "{language}";
      const auto at = instruction.find(placeholder);
      if (at != std::string::npos) {
        instruction.replace(at, placeholder.size(),
                            target_language.empty() ? "French"
                                                    : target_language);
      }
      return instruction;
    }
    case TaskKind::kCustom:
      if (custom_instruction.empty()) {
        throw std::invalid_argument(
            "custom task requires an instruction template");
      }
      return custom_instruction;
  }
  throw std::invalid_argument("unknown task kind");
}

int task_max_tokens(const ChatEndpointConfig& config, TaskKind task,
                    const std::string& text) {
  switch (task) {
    case TaskKind::kSummarize:
      return config.summarize_max_tokens;
    case TaskKind::kTranslate: {
      const auto words = tokenize_words(text).words.size();
      return static_cast<int>(std::ceil(
          config.translate_length_factor * static_cast<double>(words)));
    }
    case TaskKind::kCustom:
      return 0;  // no cap
  }
  return 0;
}

}  // namespace dxgate
