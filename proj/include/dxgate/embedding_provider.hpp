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

#ifndef DXGATE_EMBEDDING_PROVIDER_HPP
#define DXGATE_EMBEDDING_PROVIDER_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace dxgate {

// Raised when a backend cannot produce an embedding; carries the text
// that failed so callers can retry selectively.
class ProviderError : public std::runtime_error {
 public:
  ProviderError(const std::string& what, std::string failed_text)
      : std::runtime_error(what), failed_text_(std::move(failed_text)) {}
  const std::string& failed_text() const { return failed_text_; }

 private:
  std::string failed_text_;
};

// Maps whole texts to fixed-dimension vectors. Implementations must be
// deterministic within a session: same text, same vector.
class TextEmbeddingProvider {
 public:
  virtual ~TextEmbeddingProvider() = default;
  virtual std::vector<Eigen::VectorXd> embed(
      std::span<const std::string> texts) = 0;
  virtual int dim() const = 0;
};

// Offline deterministic provider. In hash mode each text maps to a
// seeded-hash unit vector (distinct texts are near-orthogonal). In
// semantic mode a text maps to the normalized sum of per-word hash
// vectors, so similarity tracks token overlap.
class MockEmbeddingProvider : public TextEmbeddingProvider {
 public:
  MockEmbeddingProvider(int dim, std::uint64_t seed, bool semantic);

  std::vector<Eigen::VectorXd> embed(
      std::span<const std::string> texts) override;
  int dim() const override { return dim_; }

 private:
  Eigen::VectorXd hash_vector(std::string_view key) const;
  int dim_;
  std::uint64_t seed_;
  bool semantic_;
};

// POST {model, input: [texts]} -> {embeddings: [[...]]}.
class HttpEmbeddingProvider : public TextEmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string base_url, std::string path,
                        std::string model, std::string auth_env,
                        int timeout_s = 60);

  std::vector<Eigen::VectorXd> embed(
      std::span<const std::string> texts) override;
  // Unknown until the first response arrives.
  int dim() const override { return dim_; }

 private:
  std::string base_url_;
  std::string path_;
  std::string model_;
  std::string auth_env_;
  int timeout_s_;
  int dim_ = 0;
};

// Lookup table keyed by text digest, loaded from a JSON file of the
// shape {"dim": n, "vectors": {"<sha256>": [floats...]}}.
class FileEmbeddingProvider : public TextEmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::filesystem::path& path);

  std::vector<Eigen::VectorXd> embed(
      std::span<const std::string> texts) override;
  int dim() const override { return dim_; }

 private:
  std::unordered_map<std::string, Eigen::VectorXd> vectors_;
  int dim_ = 0;
};

// Digest-keyed memo in front of any provider: each distinct text hits
// the backend at most once. Values never change, only call counts.
class MemoizingProvider {
 public:
  explicit MemoizingProvider(std::shared_ptr<TextEmbeddingProvider> backend);

  Eigen::VectorXd embed_one(const std::string& text);

  std::size_t backend_calls() const;
  TextEmbeddingProvider& backend() { return *backend_; }

 private:
  std::shared_ptr<TextEmbeddingProvider> backend_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Eigen::VectorXd> cache_;
  std::size_t backend_calls_ = 0;
};

}  // namespace dxgate

#endif  // DXGATE_EMBEDDING_PROVIDER_HPP
