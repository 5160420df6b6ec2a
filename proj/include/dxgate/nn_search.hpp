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

#ifndef DXGATE_NN_SEARCH_HPP
#define DXGATE_NN_SEARCH_HPP

#include <vector>

#include <Eigen/Core>

#include "dxgate/embedding_model.hpp"
#include "dxgate/types.hpp"

namespace dxgate {

struct Neighbor {
  TokenId token;
  double distance;
};

// Ranked neighbors, ascending by distance, ties broken by ascending
// token id. Under exact search rank i is the i-th nearest neighbor.
struct NeighborList {
  std::vector<Neighbor> entries;
  SearchBackend query_kind = SearchBackend::kExact;
};

// Blocked brute-force scan, parallel over row chunks. Distances are
// accumulated in 64-bit; the (distance, token id) tie-break makes the
// result independent of the chunk decomposition and thread count.
NeighborList exact_nearest(const EmbeddingModel& model,
                           const Eigen::Ref<const Eigen::VectorXd>& query,
                           int k);

// Squared Euclidean distance between a float row and a double query.
double squared_distance(const float* row,
                        const Eigen::Ref<const Eigen::VectorXd>& query);

// Fraction of `reference`'s first k tokens present anywhere in `result`.
double recall_against(const NeighborList& result,
                      const NeighborList& reference, int k);

}  // namespace dxgate

#endif  // DXGATE_NN_SEARCH_HPP
