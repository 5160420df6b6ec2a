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

#ifndef DXGATE_CHAT_HPP
#define DXGATE_CHAT_HPP

#include <memory>
#include <stdexcept>
#include <string>

namespace dxgate {

enum class TaskKind { kSummarize, kTranslate, kCustom };

std::string to_string(TaskKind t);
TaskKind task_from_string(const std::string& s);

struct ChatEndpointConfig {
  std::string role;  // "slm" or "llm", informational
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string auth_env;  // env var holding the bearer token; "" = none
  int timeout_s = 120;

  // Output-length policy: summaries are capped at a fixed token budget,
  // translations at a fraction of the input length.
  int summarize_max_tokens = 142;
  double translate_length_factor = 1.3;

  std::string summarize_template =
      "Summarize the following text. Reply with the summary only.";
  std::string translate_template =
      "Translate the following text into {language}. "
      "Reply with the translation only.";
  std::string correction_template =
      "Correct the following text for coherence and grammar. "
      "Reply with the corrected text only.";
};

class ChatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One task execution against a chat endpoint. Implementations must be
// safe for concurrent calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Throws ChatError on transport or protocol failure.
  virtual std::string complete(const std::string& instruction,
                               const std::string& text, int max_tokens) = 0;
};

// JSON chat-completions client: POST {model, messages, max_tokens} and
// read choices[0].message.content.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(ChatEndpointConfig config);
  std::string complete(const std::string& instruction,
                       const std::string& text, int max_tokens) override;

 private:
  ChatEndpointConfig config_;
};

// Instruction text for a task, from the endpoint's templates.
std::string task_instruction(const ChatEndpointConfig& config, TaskKind task,
                             const std::string& target_language,
                             const std::string& custom_instruction);

// Output-token budget for a task on the given input text.
int task_max_tokens(const ChatEndpointConfig& config, TaskKind task,
                    const std::string& text);

}  // namespace dxgate

#endif  // DXGATE_CHAT_HPP
