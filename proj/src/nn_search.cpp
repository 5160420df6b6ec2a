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

#include "dxgate/nn_search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "dxgate/parallel.hpp"

namespace dxgate {

namespace {

struct Candidate {
  double dist2;
  TokenId token;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
  return a.token < b.token;
}

// Bounded worst-at-top heap of the k best candidates seen so far.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  void offer(const Candidate& c) {
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end(), candidate_less);
      return;
    }
    if (candidate_less(c, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), candidate_less);
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end(), candidate_less);
    }
  }

  // Largest retained distance, or +inf while the heap is not full.
  double worst() const {
    return heap_.size() < k_ ? std::numeric_limits<double>::infinity()
                             : heap_.front().dist2;
  }

  std::vector<Candidate>& entries() { return heap_; }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

}  // namespace

double squared_distance(const float* row,
                        const Eigen::Ref<const Eigen::VectorXd>& query) {
  const Eigen::Index n = query.size();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double d = static_cast<double>(row[j]) - query[j];
    acc += d * d;
  }
  return acc;
}

NeighborList exact_nearest(const EmbeddingModel& model,
                           const Eigen::Ref<const Eigen::VectorXd>& query,
                           int k) {
  if (query.size() != model.dim()) {
    throw std::invalid_argument("exact_nearest: query dimension mismatch");
  }
  if (k < 1 || static_cast<Eigen::Index>(k) > model.size()) {
    throw std::invalid_argument("exact_nearest: k must be in [1, |vocab|]");
  }
  const std::size_t rows = static_cast<std::size_t>(model.size());
  const int workers = effective_thread_count();
  std::vector<std::vector<Candidate>> partial(
      std::max<std::size_t>(1, std::min<std::size_t>(rows, workers)));

  parallel_chunks(rows, [&](std::size_t chunk, std::size_t begin,
                            std::size_t end) {
    TopK top(static_cast<std::size_t>(k));
    for (std::size_t i = begin; i < end; ++i) {
      const TokenId id = static_cast<TokenId>(i);
      const double d2 = squared_distance(model.row_data(id), query);
      if (d2 <= top.worst()) top.offer({d2, id});
    }
    partial[chunk] = std::move(top.entries());
  });

  std::vector<Candidate> merged;
  for (auto& p : partial) {
    merged.insert(merged.end(), p.begin(), p.end());
  }
  std::sort(merged.begin(), merged.end(), candidate_less);
  merged.resize(std::min<std::size_t>(merged.size(),
                                      static_cast<std::size_t>(k)));

  NeighborList out;
  out.query_kind = SearchBackend::kExact;
  out.entries.reserve(merged.size());
  for (const Candidate& c : merged) {
    out.entries.push_back({c.token, std::sqrt(c.dist2)});
  }
  return out;
}

double recall_against(const NeighborList& result,
                      const NeighborList& reference, int k) {
  if (k < 1) throw std::invalid_argument("recall_against: k must be >= 1");
  const std::size_t kk = std::min<std::size_t>(
      static_cast<std::size_t>(k), reference.entries.size());
  if (kk == 0) return 0.0;
  std::unordered_set<TokenId> found;
  for (const Neighbor& n : result.entries) found.insert(n.token);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < kk; ++i) {
    if (found.count(reference.entries[i].token) > 0) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(kk);
}

}  // namespace dxgate
