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

#ifndef DXGATE_DIGEST_HPP
#define DXGATE_DIGEST_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace dxgate {

// Hex-encoded SHA-256 of the exact UTF-8 bytes. Used as a cache key for
// text embeddings and stored sanitizations; stable across platforms.
std::string sha256_hex(std::string_view data);

// First 8 bytes of the SHA-256, as an integer seed component.
std::uint64_t digest64(std::string_view data);

}  // namespace dxgate

#endif  // DXGATE_DIGEST_HPP
