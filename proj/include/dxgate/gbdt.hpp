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

#ifndef DXGATE_GBDT_HPP
#define DXGATE_GBDT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dxgate/features.hpp"

namespace dxgate {

enum class FeatureSet { kEpsilonOnly, kAll };

std::string to_string(FeatureSet f);
FeatureSet feature_set_from_string(const std::string& s);

// One training example: similarity features plus the realized target.
struct FeatureRow {
  std::string id;
  double epsilon = 0.0;
  double sim_b = 0.0;
  double sim_c = 0.0;
  double sim_d = 0.0;
  std::optional<double> target;
};

// CSV with header `id,epsilon,sim_b,sim_c,sim_d,target_e`; target_e may
// be empty on rows without a realized outcome.
std::vector<FeatureRow> load_feature_csv(const std::filesystem::path& path);
std::string feature_csv(std::span<const FeatureRow> rows);

struct Dataset {
  std::vector<FeatureRow> rows;  // every row has target set and finite
  FeatureSet feature_set = FeatureSet::kAll;
};

// Keeps only rows with a realized target; validates finiteness.
Dataset to_dataset(std::span<const FeatureRow> rows, FeatureSet feature_set);

struct GbdtParams {
  int max_bins = 255;
  int iterations = 100;
  double learning_rate = 0.1;
  int max_depth = 6;
  int min_samples_leaf = 20;
};

struct TrainResult;

struct EvalReport {
  bool r2_defined = true;  // false when the target variance is zero
  double r2 = 0.0;
  double rmse = 0.0;
  // Overly optimistic predictions (target < prediction - 0.1).
  double wasted_pct = 0.0;
  // Absolute error above 0.1 in either direction; includes the above.
  double failed_pct = 0.0;
};

// Gradient-boosted regression trees over quantile-binned features with
// squared-error loss. Immutable once trained; prediction is read-only.
class GbdtModel {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    std::int32_t bin = -1;      // go left when bin(x) <= bin
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;  // leaf contribution
  };
  struct Tree {
    std::vector<Node> nodes;  // root at index 0
  };

  // Prediction clamped to [-1, 1]. `values` must match the trained
  // feature count; a NaN entry is treated as a missing feature.
  double predict_values(std::span<const double> values) const;
  double predict(const FeatureVector& features) const;

  FeatureSet feature_set() const { return feature_set_; }
  int feature_count() const;
  double base_prediction() const { return base_; }
  const std::vector<Tree>& trees() const { return trees_; }

  // Versioned little-endian container; round-trips byte-exactly.
  void save(const std::filesystem::path& path) const;
  static GbdtModel load(const std::filesystem::path& path);

 private:
  friend struct Trainer;
  friend TrainResult train(const Dataset& dataset, const GbdtParams& params,
                           std::uint64_t split_seed);
  int bin_of(int feature, double value) const;

  FeatureSet feature_set_ = FeatureSet::kAll;
  double learning_rate_ = 0.1;
  double base_ = 0.0;
  std::vector<std::vector<double>> bin_cuts_;  // interior cut points
  std::vector<Tree> trees_;
};

struct TrainResult {
  GbdtModel model;
  EvalReport report;               // on the held-out 20% split
  std::vector<double> train_rmse;  // after each boosting iteration
  int train_rows = 0;
  int test_rows = 0;
};

// Seeded-shuffle 80/20 split, fit on train, report on test.
// Deterministic given (dataset order, params, split_seed).
TrainResult train(const Dataset& dataset, const GbdtParams& params,
                  std::uint64_t split_seed);

// R^2 = 1 - SS_res/SS_tot (undefined when SS_tot = 0), RMSE, and the
// two 0.1-band percentages defined on EvalReport.
EvalReport evaluate(std::span<const double> predictions,
                    std::span<const double> targets);

std::string report_json(const EvalReport& report);

}  // namespace dxgate

#endif  // DXGATE_GBDT_HPP
