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

#include "dxgate/ann_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "dxgate/rng.hpp"

namespace dxgate {

namespace {

constexpr int kMaxDepth = 50;
constexpr int kSplitAttempts = 3;

double margin_of(const Eigen::VectorXf& normal, float offset,
                 const Eigen::Ref<const Eigen::VectorXd>& query) {
  return normal.cast<double>().dot(query) - static_cast<double>(offset);
}

}  // namespace

AnnIndex::AnnIndex(const EmbeddingModel& model, AnnParams params)
    : model_(&model), params_(params) {
  if (params_.tree_count < 1 || params_.leaf_size < 1) {
    throw std::invalid_argument(
        "AnnIndex: tree_count and leaf_size must be >= 1");
  }
  if (params_.search_budget < 1) {
    throw std::invalid_argument("AnnIndex: search_budget must be >= 1");
  }
  roots_.reserve(static_cast<std::size_t>(params_.tree_count));
  for (int t = 0; t < params_.tree_count; ++t) {
    Rng rng = Rng::keyed(params_.build_seed, static_cast<std::uint64_t>(t));
    std::vector<TokenId> items(static_cast<std::size_t>(model.size()));
    for (std::size_t i = 0; i < items.size(); ++i) {
      items[i] = static_cast<TokenId>(i);
    }
    roots_.push_back(build_subtree(items, rng, 0));
  }
}

std::int32_t AnnIndex::build_subtree(std::vector<TokenId>& items, Rng& rng,
                                     int depth) {
  if (items.size() <= static_cast<std::size_t>(params_.leaf_size) ||
      depth >= kMaxDepth) {
    Node leaf;
    leaf.items = std::move(items);
    nodes_.push_back(std::move(leaf));
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  const int dim = model_->dim();
  Eigen::VectorXf normal(dim);
  float offset = 0.0f;
  std::vector<TokenId> left, right;
  left.reserve(items.size() / 2);
  right.reserve(items.size() / 2);

  bool split_ok = false;
  for (int attempt = 0; attempt < kSplitAttempts && !split_ok; ++attempt) {
    const TokenId a = items[rng.next_below(items.size())];
    const TokenId b = items[rng.next_below(items.size())];
    Eigen::Map<const Eigen::VectorXf> ra(model_->row_data(a), dim);
    Eigen::Map<const Eigen::VectorXf> rb(model_->row_data(b), dim);
    normal = ra - rb;
    const float norm = normal.norm();
    if (!(norm > 0.0f)) continue;
    offset = normal.dot((ra + rb) * 0.5f);
    left.clear();
    right.clear();
    for (const TokenId id : items) {
      Eigen::Map<const Eigen::VectorXf> r(model_->row_data(id), dim);
      const float side = normal.dot(r) - offset;
      if (side < 0.0f) {
        left.push_back(id);
      } else if (side > 0.0f) {
        right.push_back(id);
      } else {
        // On the plane: alternate by id so duplicates spread out.
        (id % 2 == 0 ? left : right).push_back(id);
      }
    }
    split_ok = !left.empty() && !right.empty();
  }

  if (!split_ok) {
    // Degenerate cloud (e.g. many identical rows): split by order.
    left.assign(items.begin(), items.begin() + items.size() / 2);
    right.assign(items.begin() + items.size() / 2, items.end());
    normal.setZero();
    offset = 0.0f;
  }
  items.clear();
  items.shrink_to_fit();

  const std::int32_t left_id = build_subtree(left, rng, depth + 1);
  const std::int32_t right_id = build_subtree(right, rng, depth + 1);
  Node inner;
  inner.left = left_id;
  inner.right = right_id;
  inner.normal = std::move(normal);
  inner.offset = offset;
  nodes_.push_back(std::move(inner));
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

NeighborList AnnIndex::nearest(const Eigen::Ref<const Eigen::VectorXd>& query,
                               int k) const {
  if (query.size() != model_->dim()) {
    throw std::invalid_argument("ann_nearest: query dimension mismatch");
  }
  if (k < 1 || static_cast<Eigen::Index>(k) > model_->size()) {
    throw std::invalid_argument("ann_nearest: k must be in [1, |vocab|]");
  }
  const std::size_t budget = static_cast<std::size_t>(
      std::max(params_.search_budget, k));

  // Best-first traversal; priority is the smallest margin along the
  // path, ties broken by node id for determinism.
  using Entry = std::pair<double, std::int32_t>;
  std::priority_queue<Entry> frontier;
  for (const std::int32_t root : roots_) {
    frontier.emplace(std::numeric_limits<double>::infinity(), root);
  }

  std::vector<TokenId> candidates;
  candidates.reserve(budget + static_cast<std::size_t>(params_.leaf_size));
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(model_->size()), 0);
  while (!frontier.empty() && candidates.size() < budget) {
    const auto [priority, node_id] = frontier.top();
    frontier.pop();
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.is_leaf()) {
      for (const TokenId id : node.items) {
        if (!seen[id]) {
          seen[id] = 1;
          candidates.push_back(id);
        }
      }
      continue;
    }
    const double margin = margin_of(node.normal, node.offset, query);
    frontier.emplace(std::min(priority, margin), node.right);
    frontier.emplace(std::min(priority, -margin), node.left);
  }

  // Exact re-ranking of the visited candidates.
  std::vector<std::pair<double, TokenId>> scored;
  scored.reserve(candidates.size());
  for (const TokenId id : candidates) {
    scored.emplace_back(squared_distance(model_->row_data(id), query), id);
  }
  std::sort(scored.begin(), scored.end());
  if (scored.size() > static_cast<std::size_t>(k)) {
    scored.resize(static_cast<std::size_t>(k));
  }

  NeighborList out;
  out.query_kind = SearchBackend::kApproximate;
  out.entries.reserve(scored.size());
  for (const auto& [d2, id] : scored) {
    out.entries.push_back({id, std::sqrt(d2)});
  }
  return out;
}

}  // namespace dxgate
