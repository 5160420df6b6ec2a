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

#ifndef DXGATE_EMBEDDING_MODEL_HPP
#define DXGATE_EMBEDDING_MODEL_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "dxgate/types.hpp"

namespace dxgate {

// A vocabulary plus its |vocab| x dim embedding matrix. Rows are stored
// in 32-bit floats; queries and distance accumulation run in 64-bit.
// Immutable after construction and safe to share across threads.
class EmbeddingModel {
 public:
  EmbeddingModel(std::string name, std::vector<std::string> vocab,
                 MatrixXfRM matrix);

  const std::string& name() const { return name_; }
  Eigen::Index size() const { return matrix_.rows(); }
  int dim() const { return static_cast<int>(matrix_.cols()); }
  const MatrixXfRM& matrix() const { return matrix_; }
  const std::vector<std::string>& vocab() const { return vocab_; }

  std::optional<TokenId> lookup(std::string_view token) const;
  const std::string& token(TokenId id) const;

  // Row promoted to double, ready for noisy-query arithmetic.
  Eigen::VectorXd embed(TokenId id) const;
  const float* row_data(TokenId id) const {
    return matrix_.data() + static_cast<std::ptrdiff_t>(id) * dim();
  }

 private:
  std::string name_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
  MatrixXfRM matrix_;
};

// Parses the whitespace-separated text format (`word v1 v2 ... vn` per
// line). Throws std::runtime_error naming the offending line on
// dimension mismatch or a non-finite value.
EmbeddingModel load_glove_text(const std::filesystem::path& path,
                               std::string name = "");

// Little-endian binary container: magic, version, row count, dimension,
// model name, float32 row-major payload, then length-prefixed vocab
// entries. save/load round-trips bit-exactly.
void save_binary(const EmbeddingModel& model,
                 const std::filesystem::path& path);
EmbeddingModel load_binary(const std::filesystem::path& path);

}  // namespace dxgate

#endif  // DXGATE_EMBEDDING_MODEL_HPP
