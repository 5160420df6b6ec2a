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

#include "dxgate/gbdt.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "dxgate/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

namespace dxgate {

namespace {

constexpr char kMagic[4] = {'D', 'X', 'G', 'B'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* field) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) {
    throw std::runtime_error(std::string("truncated model file (") + field +
                             ")");
  }
  return value;
}

std::vector<double> row_values(const FeatureRow& row, FeatureSet set) {
  if (set == FeatureSet::kEpsilonOnly) return {row.epsilon};
  return {row.epsilon, row.sim_b, row.sim_c, row.sim_d};
}

double parse_double_field(const std::string& field, const char* name,
                          std::size_t line_no) {
  double v = 0.0;
  const auto [p, ec] =
      std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw std::runtime_error("feature csv line " + std::to_string(line_no) +
                             ": malformed " + std::string(name));
  }
  return v;
}

}  // namespace

std::string to_string(FeatureSet f) {
  return f == FeatureSet::kEpsilonOnly ? "A" : "ABCD";
}

FeatureSet feature_set_from_string(const std::string& s) {
  if (s == "A") return FeatureSet::kEpsilonOnly;
  if (s == "ABCD") return FeatureSet::kAll;
  throw std::invalid_argument("unknown feature set: " + s +
                              " (expected A or ABCD)");
}

std::vector<FeatureRow> load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open feature csv: " + path.string());
  }
  std::string line;
  const auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty feature csv: " + path.string());
  }
  strip_cr(line);
  if (line != "id,epsilon,sim_b,sim_c,sim_d,target_e") {
    throw std::runtime_error("unexpected feature csv header: " + line);
  }
  std::vector<FeatureRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 6) {
      throw std::runtime_error("feature csv line " + std::to_string(line_no) +
                               ": expected 6 fields, got " +
                               std::to_string(fields.size()));
    }
    FeatureRow row;
    row.id = fields[0];
    row.epsilon = parse_double_field(fields[1], "epsilon", line_no);
    row.sim_b = parse_double_field(fields[2], "sim_b", line_no);
    row.sim_c = parse_double_field(fields[3], "sim_c", line_no);
    row.sim_d = parse_double_field(fields[4], "sim_d", line_no);
    if (!fields[5].empty()) {
      row.target = parse_double_field(fields[5], "target_e", line_no);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string feature_csv(std::span<const FeatureRow> rows) {
  std::ostringstream os;
  os.precision(17);
  os << "id,epsilon,sim_b,sim_c,sim_d,target_e\n";
  for (const FeatureRow& r : rows) {
    os << r.id << ',' << r.epsilon << ',' << r.sim_b << ',' << r.sim_c << ','
       << r.sim_d << ',';
    if (r.target) os << *r.target;
    os << '\n';
  }
  return os.str();
}

Dataset to_dataset(std::span<const FeatureRow> rows, FeatureSet feature_set) {
  Dataset ds;
  ds.feature_set = feature_set;
  for (const FeatureRow& r : rows) {
    if (!r.target) continue;
    if (!std::isfinite(*r.target) || !std::isfinite(r.epsilon) ||
        !std::isfinite(r.sim_b) || !std::isfinite(r.sim_c) ||
        !std::isfinite(r.sim_d)) {
      throw std::invalid_argument("dataset row '" + r.id +
                                  "' carries a non-finite value");
    }
    ds.rows.push_back(r);
  }
  return ds;
}

int GbdtModel::feature_count() const {
  return feature_set_ == FeatureSet::kEpsilonOnly ? 1 : 4;
}

int GbdtModel::bin_of(int feature, double value) const {
  const auto& cuts = bin_cuts_[static_cast<std::size_t>(feature)];
  // Out-of-range values land in the first or last bin.
  return static_cast<int>(
      std::upper_bound(cuts.begin(), cuts.end(), value) - cuts.begin());
}

double GbdtModel::predict_values(std::span<const double> values) const {
  if (values.size() != static_cast<std::size_t>(feature_count())) {
    throw std::invalid_argument(
        "predict: expected " + std::to_string(feature_count()) +
        " features, got " + std::to_string(values.size()));
  }
  for (const double v : values) {
    if (std::isnan(v)) {
      throw std::invalid_argument("predict: missing (NaN) feature value");
    }
  }
  double score = base_;
  std::vector<int> bins(values.size());
  for (std::size_t f = 0; f < values.size(); ++f) {
    bins[f] = bin_of(static_cast<int>(f), values[f]);
  }
  for (const Tree& tree : trees_) {
    std::int32_t at = 0;
    while (tree.nodes[static_cast<std::size_t>(at)].feature >= 0) {
      const Node& node = tree.nodes[static_cast<std::size_t>(at)];
      at = bins[static_cast<std::size_t>(node.feature)] <= node.bin
               ? node.left
               : node.right;
    }
    score += learning_rate_ * tree.nodes[static_cast<std::size_t>(at)].value;
  }
  return std::clamp(score, -1.0, 1.0);
}

double GbdtModel::predict(const FeatureVector& features) const {
  if (feature_set_ == FeatureSet::kEpsilonOnly) {
    const double values[] = {features.epsilon};
    return predict_values(values);
  }
  const double values[] = {features.epsilon, features.sim_sanitized,
                           features.sim_slm, features.sim_slm_sanitized};
  return predict_values(values);
}

void GbdtModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write model file: " + path.string());
  }
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kFormatVersion);
  write_pod(out, static_cast<std::uint8_t>(feature_set_));
  write_pod(out, learning_rate_);
  write_pod(out, base_);
  write_pod(out, static_cast<std::uint32_t>(bin_cuts_.size()));
  for (const auto& cuts : bin_cuts_) {
    write_pod(out, static_cast<std::uint64_t>(cuts.size()));
    out.write(reinterpret_cast<const char*>(cuts.data()),
              static_cast<std::streamsize>(cuts.size() * sizeof(double)));
  }
  write_pod(out, static_cast<std::uint32_t>(trees_.size()));
  for (const Tree& tree : trees_) {
    write_pod(out, static_cast<std::uint32_t>(tree.nodes.size()));
    for (const Node& node : tree.nodes) {
      write_pod(out, node.feature);
      write_pod(out, node.bin);
      write_pod(out, node.left);
      write_pod(out, node.right);
      write_pod(out, node.value);
    }
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

GbdtModel GbdtModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open model file: " + path.string());
  }
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("bad magic in model file: " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported model version " +
                             std::to_string(version));
  }
  GbdtModel model;
  const auto set = read_pod<std::uint8_t>(in, "feature set");
  if (set > 1) throw std::runtime_error("corrupt model: bad feature set");
  model.feature_set_ = static_cast<FeatureSet>(set);
  model.learning_rate_ = read_pod<double>(in, "learning rate");
  model.base_ = read_pod<double>(in, "base prediction");
  const auto n_features = read_pod<std::uint32_t>(in, "feature count");
  if (n_features != static_cast<std::uint32_t>(model.feature_count())) {
    throw std::runtime_error("corrupt model: feature count mismatch");
  }
  model.bin_cuts_.resize(n_features);
  for (auto& cuts : model.bin_cuts_) {
    const auto n = read_pod<std::uint64_t>(in, "cut count");
    cuts.resize(n);
    in.read(reinterpret_cast<char*>(cuts.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("truncated model file (cuts)");
  }
  const auto n_trees = read_pod<std::uint32_t>(in, "tree count");
  model.trees_.resize(n_trees);
  for (Tree& tree : model.trees_) {
    const auto n_nodes = read_pod<std::uint32_t>(in, "node count");
    if (n_nodes == 0) throw std::runtime_error("corrupt model: empty tree");
    tree.nodes.resize(n_nodes);
    for (Node& node : tree.nodes) {
      node.feature = read_pod<std::int32_t>(in, "node feature");
      node.bin = read_pod<std::int32_t>(in, "node bin");
      node.left = read_pod<std::int32_t>(in, "node left");
      node.right = read_pod<std::int32_t>(in, "node right");
      node.value = read_pod<double>(in, "node value");
      const auto limit = static_cast<std::int32_t>(n_nodes);
      if (node.feature >= 0 &&
          (node.left < 0 || node.right < 0 || node.left >= limit ||
           node.right >= limit)) {
        throw std::runtime_error("corrupt model: bad child index");
      }
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Training

struct Trainer {
  explicit Trainer(const GbdtParams& p) : params(p) {}

  const GbdtParams& params;
  int n_features = 0;
  // binned[f][i] is the bin of train row i for feature f.
  std::vector<std::vector<std::uint16_t>> binned;
  std::vector<int> bins_per_feature;
  std::vector<double> residuals;
  std::vector<double> scores;
  GbdtModel::Tree* tree = nullptr;

  struct Split {
    double gain = 0.0;
    int feature = -1;
    int bin = -1;
  };

  Split best_split(std::span<const std::uint32_t> rows) const {
    Split best;
    const double total_count = static_cast<double>(rows.size());
    double total_sum = 0.0;
    for (const auto i : rows) total_sum += residuals[i];
    const double parent_score = total_sum * total_sum / total_count;

    for (int f = 0; f < n_features; ++f) {
      const int bins = bins_per_feature[static_cast<std::size_t>(f)];
      if (bins < 2) continue;
      std::vector<double> sum(static_cast<std::size_t>(bins), 0.0);
      std::vector<std::uint32_t> count(static_cast<std::size_t>(bins), 0);
      for (const auto i : rows) {
        const auto b = binned[static_cast<std::size_t>(f)][i];
        sum[b] += residuals[i];
        ++count[b];
      }
      double left_sum = 0.0;
      std::uint32_t left_count = 0;
      for (int b = 0; b + 1 < bins; ++b) {
        left_sum += sum[static_cast<std::size_t>(b)];
        left_count += count[static_cast<std::size_t>(b)];
        const auto right_count =
            static_cast<std::uint32_t>(rows.size()) - left_count;
        if (left_count < static_cast<std::uint32_t>(params.min_samples_leaf))
          continue;
        if (right_count < static_cast<std::uint32_t>(params.min_samples_leaf))
          break;
        const double right_sum = total_sum - left_sum;
        const double gain = left_sum * left_sum / left_count +
                            right_sum * right_sum / right_count -
                            parent_score;
        if (gain > best.gain + 1e-12) {
          best = {gain, f, b};
        }
      }
    }
    return best;
  }

  std::int32_t grow(std::vector<std::uint32_t>& rows, int depth) {
    const auto node_id = static_cast<std::int32_t>(tree->nodes.size());
    tree->nodes.emplace_back();

    Split split;
    if (depth < params.max_depth &&
        rows.size() >= 2 * static_cast<std::size_t>(params.min_samples_leaf)) {
      split = best_split(rows);
    }
    if (split.feature < 0) {
      double sum = 0.0;
      for (const auto i : rows) sum += residuals[i];
      const double value = sum / static_cast<double>(rows.size());
      tree->nodes[static_cast<std::size_t>(node_id)].value = value;
      for (const auto i : rows) scores[i] += params.learning_rate * value;
      return node_id;
    }

    std::vector<std::uint32_t> left, right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    const auto& fbins = binned[static_cast<std::size_t>(split.feature)];
    for (const auto i : rows) {
      (fbins[i] <= split.bin ? left : right).push_back(i);
    }
    rows.clear();
    rows.shrink_to_fit();

    const std::int32_t left_id = grow(left, depth + 1);
    const std::int32_t right_id = grow(right, depth + 1);
    GbdtModel::Node& node = tree->nodes[static_cast<std::size_t>(node_id)];
    node.feature = split.feature;
    node.bin = split.bin;
    node.left = left_id;
    node.right = right_id;
    return node_id;
  }
};

namespace {

// Interior cut points from the training values of one feature:
// midpoints between distinct values, reduced to quantile positions when
// there are more distinct values than bins.
std::vector<double> quantile_cuts(std::vector<double> values, int max_bins) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const std::size_t distinct = values.size();
  std::vector<double> cuts;
  if (distinct <= 1) return cuts;
  if (distinct <= static_cast<std::size_t>(max_bins)) {
    cuts.reserve(distinct - 1);
    for (std::size_t i = 0; i + 1 < distinct; ++i) {
      cuts.push_back(values[i] + (values[i + 1] - values[i]) / 2.0);
    }
    return cuts;
  }
  for (int b = 1; b < max_bins; ++b) {
    const std::size_t at =
        static_cast<std::size_t>(static_cast<double>(b) *
                                 static_cast<double>(distinct) /
                                 static_cast<double>(max_bins));
    const std::size_t i = std::min(at, distinct - 2);
    cuts.push_back(values[i] + (values[i + 1] - values[i]) / 2.0);
  }
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

double rmse_of(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace

TrainResult train(const Dataset& dataset, const GbdtParams& params,
                  std::uint64_t split_seed) {
  if (dataset.rows.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  if (dataset.rows.size() < 10) {
    throw std::invalid_argument("train: need at least 10 rows, got " +
                                std::to_string(dataset.rows.size()));
  }
  if (params.max_bins < 2 || params.max_bins > 65535 ||
      params.iterations < 0 || params.max_depth < 1 ||
      params.min_samples_leaf < 1 || !(params.learning_rate > 0.0) ||
      params.learning_rate > 1.0) {
    throw std::invalid_argument("train: invalid hyperparameters");
  }

  const std::size_t n = dataset.rows.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::keyed(split_seed, 0x5117);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + rng.next_below(n - i);
    std::swap(order[i], order[j]);
  }
  const std::size_t n_test = std::max<std::size_t>(1, n / 5);
  const std::size_t n_train = n - n_test;

  const int n_features =
      dataset.feature_set == FeatureSet::kEpsilonOnly ? 1 : 4;

  GbdtModel model;
  model.feature_set_ = dataset.feature_set;
  model.learning_rate_ = params.learning_rate;

  // Quantile bins from the training split only.
  model.bin_cuts_.resize(static_cast<std::size_t>(n_features));
  for (int f = 0; f < n_features; ++f) {
    std::vector<double> values;
    values.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
      values.push_back(
          row_values(dataset.rows[order[i]],
                     dataset.feature_set)[static_cast<std::size_t>(f)]);
    }
    model.bin_cuts_[static_cast<std::size_t>(f)] =
        quantile_cuts(std::move(values), params.max_bins);
  }

  Trainer trainer(params);
  trainer.n_features = n_features;
  trainer.bins_per_feature.resize(static_cast<std::size_t>(n_features));
  trainer.binned.resize(static_cast<std::size_t>(n_features));
  for (int f = 0; f < n_features; ++f) {
    trainer.bins_per_feature[static_cast<std::size_t>(f)] =
        static_cast<int>(model.bin_cuts_[static_cast<std::size_t>(f)].size()) +
        1;
    auto& column = trainer.binned[static_cast<std::size_t>(f)];
    column.resize(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
      const double v =
          row_values(dataset.rows[order[i]],
                     dataset.feature_set)[static_cast<std::size_t>(f)];
      column[i] = static_cast<std::uint16_t>(model.bin_of(f, v));
    }
  }

  std::vector<double> train_targets(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    train_targets[i] = *dataset.rows[order[i]].target;
  }
  model.base_ =
      std::accumulate(train_targets.begin(), train_targets.end(), 0.0) /
      static_cast<double>(n_train);

  TrainResult result;
  trainer.scores.assign(n_train, model.base_);
  trainer.residuals.assign(n_train, 0.0);
  for (int iter = 0; iter < params.iterations; ++iter) {
    for (std::size_t i = 0; i < n_train; ++i) {
      trainer.residuals[i] = train_targets[i] - trainer.scores[i];
    }
    model.trees_.emplace_back();
    trainer.tree = &model.trees_.back();
    std::vector<std::uint32_t> rows(n_train);
    std::iota(rows.begin(), rows.end(), 0);
    trainer.grow(rows, 0);
    result.train_rmse.push_back(rmse_of(trainer.scores, train_targets));
  }

  std::vector<double> predictions, targets;
  predictions.reserve(n_test);
  targets.reserve(n_test);
  for (std::size_t i = n_train; i < n; ++i) {
    const FeatureRow& row = dataset.rows[order[i]];
    const auto values = row_values(row, dataset.feature_set);
    predictions.push_back(model.predict_values(values));
    targets.push_back(*row.target);
  }
  result.report = evaluate(predictions, targets);
  result.train_rows = static_cast<int>(n_train);
  result.test_rows = static_cast<int>(n_test);
  result.model = std::move(model);
  return result;
}

EvalReport evaluate(std::span<const double> predictions,
                    std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("evaluate: length mismatch");
  }
  if (predictions.empty()) {
    throw std::invalid_argument("evaluate: empty input");
  }
  const double n = static_cast<double>(targets.size());
  const double mean =
      std::accumulate(targets.begin(), targets.end(), 0.0) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  bool constant_target = true;
  std::size_t wasted = 0, failed = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double err = targets[i] - predictions[i];
    ss_res += err * err;
    ss_tot += (targets[i] - mean) * (targets[i] - mean);
    constant_target = constant_target && targets[i] == targets[0];
    if (targets[i] < predictions[i] - 0.1) ++wasted;
    if (std::abs(err) > 0.1) ++failed;
  }
  EvalReport report;
  report.rmse = std::sqrt(ss_res / n);
  report.wasted_pct = 100.0 * static_cast<double>(wasted) / n;
  report.failed_pct = 100.0 * static_cast<double>(failed) / n;
  if (constant_target || ss_tot == 0.0) {
    report.r2_defined = false;
    report.r2 = 0.0;
  } else {
    report.r2 = 1.0 - ss_res / ss_tot;
  }
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j;
  if (report.r2_defined) {
    j["r2"] = report.r2;
  } else {
    j["r2"] = nullptr;
  }
  j["r2_defined"] = report.r2_defined;
  j["rmse"] = report.rmse;
  j["wasted_pct"] = report.wasted_pct;
  j["failed_pct"] = report.failed_pct;
  return j.dump();
}

}  // namespace dxgate
