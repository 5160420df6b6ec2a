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

#include "dxgate/embedding_model.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "binary embedding format assumes a little-endian host");

namespace dxgate {

namespace {

constexpr char kMagic[4] = {'D', 'X', 'E', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

[[noreturn]] void parse_fail(const std::filesystem::path& path,
                             std::size_t line_no, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                           ": " + what);
}

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* field) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) {
    throw std::runtime_error(std::string("truncated embedding file (") +
                             field + ")");
  }
  return value;
}

}  // namespace

EmbeddingModel::EmbeddingModel(std::string name,
                               std::vector<std::string> vocab,
                               MatrixXfRM matrix)
    : name_(std::move(name)),
      vocab_(std::move(vocab)),
      matrix_(std::move(matrix)) {
  if (static_cast<Eigen::Index>(vocab_.size()) != matrix_.rows()) {
    throw std::invalid_argument(
        "EmbeddingModel: vocab size must equal matrix row count");
  }
  if (matrix_.cols() <= 0) {
    throw std::invalid_argument("EmbeddingModel: dimension must be positive");
  }
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    const auto [it, inserted] =
        index_.emplace(vocab_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw std::invalid_argument("EmbeddingModel: duplicate token '" +
                                  vocab_[i] + "'");
    }
  }
  if (!matrix_.allFinite()) {
    throw std::invalid_argument("EmbeddingModel: non-finite entry in matrix");
  }
}

std::optional<TokenId> EmbeddingModel::lookup(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& EmbeddingModel::token(TokenId id) const {
  if (id >= vocab_.size()) {
    throw std::out_of_range("EmbeddingModel::token: id out of range");
  }
  return vocab_[id];
}

Eigen::VectorXd EmbeddingModel::embed(TokenId id) const {
  if (static_cast<Eigen::Index>(id) >= matrix_.rows()) {
    throw std::out_of_range("EmbeddingModel::embed: id out of range");
  }
  return matrix_.row(static_cast<Eigen::Index>(id)).cast<double>();
}

EmbeddingModel load_glove_text(const std::filesystem::path& path,
                               std::string name) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open embedding file: " + path.string());
  }
  if (name.empty()) name = path.stem().string();

  std::vector<std::string> vocab;
  std::vector<float> values;
  int dim = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t word_end = line.find(' ');
    if (word_end == std::string::npos || word_end == 0) {
      parse_fail(path, line_no, "expected `word value...`");
    }
    vocab.emplace_back(line.substr(0, word_end));

    int count = 0;
    const char* p = line.data() + word_end;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      float v = 0.0f;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        parse_fail(path, line_no, "malformed float");
      }
      if (!std::isfinite(v)) {
        parse_fail(path, line_no, "non-finite value");
      }
      values.push_back(v);
      ++count;
      p = next;
    }
    if (count == 0) parse_fail(path, line_no, "no values after word");
    if (dim < 0) {
      dim = count;
    } else if (count != dim) {
      parse_fail(path, line_no,
                 "dimension mismatch: expected " + std::to_string(dim) +
                     " values, got " + std::to_string(count));
    }
  }
  if (vocab.empty()) {
    throw std::runtime_error("empty embedding file: " + path.string());
  }

  MatrixXfRM matrix(static_cast<Eigen::Index>(vocab.size()), dim);
  std::memcpy(matrix.data(), values.data(), values.size() * sizeof(float));
  return EmbeddingModel(std::move(name), std::move(vocab), std::move(matrix));
}

void save_binary(const EmbeddingModel& model,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write embedding file: " + path.string());
  }
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kFormatVersion);
  write_pod(out, static_cast<std::uint64_t>(model.size()));
  write_pod(out, static_cast<std::uint32_t>(model.dim()));
  write_pod(out, static_cast<std::uint32_t>(model.name().size()));
  out.write(model.name().data(),
            static_cast<std::streamsize>(model.name().size()));
  out.write(reinterpret_cast<const char*>(model.matrix().data()),
            static_cast<std::streamsize>(sizeof(float) * model.size() *
                                         model.dim()));
  for (const std::string& token : model.vocab()) {
    write_pod(out, static_cast<std::uint32_t>(token.size()));
    out.write(token.data(), static_cast<std::streamsize>(token.size()));
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

EmbeddingModel load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open embedding file: " + path.string());
  }
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("bad magic in embedding file: " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported embedding format version " +
                             std::to_string(version));
  }
  const auto count = read_pod<std::uint64_t>(in, "row count");
  const auto dim = read_pod<std::uint32_t>(in, "dimension");
  if (count == 0 || dim == 0) {
    throw std::runtime_error("embedding file header has zero count or dim");
  }
  const auto name_len = read_pod<std::uint32_t>(in, "name length");
  std::string name(name_len, '\0');
  in.read(name.data(), name_len);
  if (!in) throw std::runtime_error("truncated embedding file (name)");

  MatrixXfRM matrix(static_cast<Eigen::Index>(count),
                    static_cast<Eigen::Index>(dim));
  in.read(reinterpret_cast<char*>(matrix.data()),
          static_cast<std::streamsize>(sizeof(float) * count * dim));
  if (!in || in.gcount() !=
                 static_cast<std::streamsize>(sizeof(float) * count * dim)) {
    throw std::runtime_error("truncated embedding file (payload)");
  }
  std::vector<std::string> vocab;
  vocab.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = read_pod<std::uint32_t>(in, "vocab entry");
    std::string token(len, '\0');
    in.read(token.data(), len);
    if (!in) throw std::runtime_error("truncated embedding file (vocab)");
    vocab.push_back(std::move(token));
  }
  return EmbeddingModel(std::move(name), std::move(vocab), std::move(matrix));
}

}  // namespace dxgate
