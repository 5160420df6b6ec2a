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

#include "dxgate/tokenizer.hpp"

#include <cctype>
#include <stdexcept>

namespace dxgate {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }
bool is_space_char(unsigned char c) { return std::isspace(c) != 0; }

// Number of bytes in the UTF-8 sequence starting at `c` (1 for invalid
// lead bytes, so malformed input still round-trips byte for byte).
std::size_t utf8_len(unsigned char c) {
  if ((c & 0x80) == 0x00) return 1;
  if ((c & 0xe0) == 0xc0) return 2;
  if ((c & 0xf0) == 0xe0) return 3;
  if ((c & 0xf8) == 0xf0) return 4;
  return 1;
}

}  // namespace

Tokenization tokenize_words(std::string_view text,
                            const TokenizerOptions& options) {
  Tokenization out;
  std::string gap;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space_char(c)) {
      gap.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    std::string word;
    if (is_word_char(c)) {
      while (i < n && is_word_char(static_cast<unsigned char>(text[i]))) {
        char ch = text[i];
        if (options.lowercase) {
          ch = static_cast<char>(
              std::tolower(static_cast<unsigned char>(ch)));
        }
        word.push_back(ch);
        ++i;
      }
    } else {
      const std::size_t len = std::min(utf8_len(c), n - i);
      word.assign(text.substr(i, len));
      i += len;
    }
    out.gaps.push_back(std::move(gap));
    gap.clear();
    out.words.push_back(std::move(word));
  }
  out.gaps.push_back(std::move(gap));
  return out;
}

std::string detokenize(std::span<const std::string> words,
                       std::span<const std::string> gaps) {
  if (gaps.size() != words.size() + 1) {
    throw std::invalid_argument(
        "detokenize: gaps must have exactly one more entry than words");
  }
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    text += gaps[i];
    text += words[i];
  }
  text += gaps.back();
  return text;
}

}  // namespace dxgate
