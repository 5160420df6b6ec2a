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

#ifndef DXGATE_ANN_INDEX_HPP
#define DXGATE_ANN_INDEX_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dxgate/embedding_model.hpp"
#include "dxgate/nn_search.hpp"
#include "dxgate/types.hpp"

namespace dxgate {

struct AnnParams {
  int tree_count = 10;
  int leaf_size = 40;
  // Cap on distinct candidate rows visited per query. The candidate set
  // grows monotonically with the budget, so recall does too.
  int search_budget = 800;
  std::uint64_t build_seed = 0;
};

// Forest of random hyperplane-split trees. Each split plane is the
// perpendicular bisector of two randomly chosen member points; queries
// walk the forest best-margin-first and collect leaf candidates until
// the search budget is exhausted, then rank candidates exactly.
// Immutable after construction; queries are read-only and concurrent.
class AnnIndex {
 public:
  AnnIndex(const EmbeddingModel& model, AnnParams params);

  NeighborList nearest(const Eigen::Ref<const Eigen::VectorXd>& query,
                       int k) const;

  const AnnParams& params() const { return params_; }
  const EmbeddingModel& model() const { return *model_; }

 private:
  struct Node {
    std::int32_t left = -1;
    std::int32_t right = -1;
    float offset = 0.0f;
    Eigen::VectorXf normal;
    std::vector<TokenId> items;  // leaf only
    bool is_leaf() const { return left < 0; }
  };

  std::int32_t build_subtree(std::vector<TokenId>& items, class Rng& rng,
                             int depth);

  const EmbeddingModel* model_;
  AnnParams params_;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> roots_;
};

inline NeighborList ann_nearest(const AnnIndex& index,
                                const Eigen::Ref<const Eigen::VectorXd>& query,
                                int k) {
  return index.nearest(query, k);
}

}  // namespace dxgate

#endif  // DXGATE_ANN_INDEX_HPP
