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

#ifndef DXGATE_TOKENIZER_HPP
#define DXGATE_TOKENIZER_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dxgate {

struct TokenizerOptions {
  // Word-level embedding vocabularies are typically lowercase.
  bool lowercase = true;
};

// Word split with a reconstruction map. `gaps` holds the separator text
// around each word: gaps[i] precedes words[i], gaps.back() is the tail,
// so gaps.size() == words.size() + 1 and detokenize() restores the
// original byte sequence exactly (when lowercasing is off).
struct Tokenization {
  std::vector<std::string> words;
  std::vector<std::string> gaps;
};

// Splits on whitespace; alphanumeric ASCII runs become word tokens and
// any other character (one UTF-8 code point) becomes its own token.
Tokenization tokenize_words(std::string_view text,
                            const TokenizerOptions& options = {});

std::string detokenize(std::span<const std::string> words,
                       std::span<const std::string> gaps);

}  // namespace dxgate

#endif  // DXGATE_TOKENIZER_HPP
