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

#include "dxgate/embedding_provider.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "dxgate/http.hpp"
#include "json.hpp"

#include "dxgate/digest.hpp"
#include "dxgate/rng.hpp"
#include "dxgate/tokenizer.hpp"

namespace dxgate {

MockEmbeddingProvider::MockEmbeddingProvider(int dim, std::uint64_t seed,
                                             bool semantic)
    : dim_(dim), seed_(seed), semantic_(semantic) {
  if (dim_ < 2) {
    throw std::invalid_argument("MockEmbeddingProvider: dim must be >= 2");
  }
}

Eigen::VectorXd MockEmbeddingProvider::hash_vector(
    std::string_view key) const {
  Rng rng = Rng::keyed(seed_, digest64(key));
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = rng.next_normal();
  const double norm = v.norm();
  return norm > 0.0 ? Eigen::VectorXd(v / norm) : Eigen::VectorXd(v);
}

std::vector<Eigen::VectorXd> MockEmbeddingProvider::embed(
    std::span<const std::string> texts) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  for (const std::string& text : texts) {
    if (!semantic_) {
      out.push_back(hash_vector(text));
      continue;
    }
    const Tokenization tok = tokenize_words(text);
    if (tok.words.empty()) {
      out.push_back(hash_vector(text));
      continue;
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
    for (const std::string& word : tok.words) sum += hash_vector(word);
    const double norm = sum.norm();
    out.push_back(norm > 0.0 ? Eigen::VectorXd(sum / norm)
                             : hash_vector(text));
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url,
                                             std::string path,
                                             std::string model,
                                             std::string auth_env,
                                             int timeout_s)
    : base_url_(std::move(base_url)),
      path_(path.empty() ? "/v1/embeddings" : std::move(path)),
      model_(std::move(model)),
      auth_env_(std::move(auth_env)),
      timeout_s_(timeout_s) {}

std::vector<Eigen::VectorXd> HttpEmbeddingProvider::embed(
    std::span<const std::string> texts) {
  nlohmann::json body;
  body["model"] = model_;
  body["input"] = nlohmann::json::array();
  for (const std::string& t : texts) body["input"].push_back(t);

  httplib::Client client(base_url_);
  client.set_read_timeout(timeout_s_, 0);
  client.set_connection_timeout(timeout_s_, 0);
  httplib::Headers headers;
  if (!auth_env_.empty()) {
    if (const char* token = std::getenv(auth_env_.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  const auto first_text = texts.empty() ? std::string() : texts[0];
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderError("embedding endpoint unreachable: " + base_url_,
                        first_text);
  }
  if (res->status != 200) {
    throw ProviderError("embedding endpoint returned HTTP " +
                            std::to_string(res->status),
                        first_text);
  }
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("embedding response is not JSON: ") +
                            e.what(),
                        first_text);
  }
  if (!reply.contains("embeddings") || !reply["embeddings"].is_array() ||
      reply["embeddings"].size() != texts.size()) {
    throw ProviderError("embedding response missing `embeddings` array",
                        first_text);
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& row = reply["embeddings"][i];
    if (!row.is_array() || row.empty()) {
      throw ProviderError("embedding row " + std::to_string(i) +
                              " is not a non-empty array",
                          texts[i]);
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
    for (std::size_t j = 0; j < row.size(); ++j) {
      v[static_cast<Eigen::Index>(j)] = row[j].get<double>();
    }
    if (dim_ == 0) dim_ = static_cast<int>(v.size());
    if (v.size() != dim_) {
      throw ProviderError("embedding dimensionality changed mid-session",
                          texts[i]);
    }
    out.push_back(std::move(v));
  }
  return out;
}

FileEmbeddingProvider::FileEmbeddingProvider(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open embedding lookup file: " +
                             path.string());
  }
  nlohmann::json doc;
  in >> doc;
  dim_ = doc.at("dim").get<int>();
  for (const auto& [digest, row] : doc.at("vectors").items()) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
    for (std::size_t j = 0; j < row.size(); ++j) {
      v[static_cast<Eigen::Index>(j)] = row[j].get<double>();
    }
    if (v.size() != dim_) {
      throw std::runtime_error("vector for digest " + digest +
                               " does not match declared dim");
    }
    vectors_.emplace(digest, std::move(v));
  }
}

std::vector<Eigen::VectorXd> FileEmbeddingProvider::embed(
    std::span<const std::string> texts) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  for (const std::string& text : texts) {
    const auto it = vectors_.find(sha256_hex(text));
    if (it == vectors_.end()) {
      throw ProviderError("no stored embedding for text digest", text);
    }
    out.push_back(it->second);
  }
  return out;
}

MemoizingProvider::MemoizingProvider(
    std::shared_ptr<TextEmbeddingProvider> backend)
    : backend_(std::move(backend)) {
  if (!backend_) {
    throw std::invalid_argument("MemoizingProvider: null backend");
  }
}

Eigen::VectorXd MemoizingProvider::embed_one(const std::string& text) {
  const std::string key = sha256_hex(text);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (const auto it = cache_.find(key); it != cache_.end()) {
      return it->second;
    }
  }
  // Backend call happens outside the lock; concurrent duplicates are
  // harmless because values for a digest are identical by contract.
  const std::string texts[] = {text};
  auto vectors = backend_->embed(texts);
  std::lock_guard<std::mutex> lock(mutex_);
  ++backend_calls_;
  const auto [it, _] = cache_.insert_or_assign(key, std::move(vectors[0]));
  return it->second;
}

std::size_t MemoizingProvider::backend_calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return backend_calls_;
}

}  // namespace dxgate
