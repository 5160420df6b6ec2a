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

#ifndef DXGATE_PARALLEL_HPP
#define DXGATE_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <functional>

namespace dxgate {

// Global cap on worker threads. 0 means "use all hardware threads".
void set_thread_count(int count);
int effective_thread_count();

// Runs body(chunk_index, begin, end) over [0, n) split into contiguous
// chunks, one per worker. Falls back to a single inline call when n is
// small or only one thread is allowed. The caller is responsible for
// making results independent of the chunk decomposition.
void parallel_chunks(
    std::size_t n,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace dxgate

#endif  // DXGATE_PARALLEL_HPP
