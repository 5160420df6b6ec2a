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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "dxgate/ann_index.hpp"
#include "dxgate/embedding_model.hpp"
#include "dxgate/nn_search.hpp"
#include "dxgate/parallel.hpp"
#include "test_util.hpp"

using namespace dxgate;
using testutil::TempDir;

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

}  // namespace

TEST_CASE("glove text parsing") {
  TempDir tmp("glove");

  SUBCASE("three 2-d rows") {
    write_file(tmp.path("ok.txt"),
               "alpha 1.0 2.0\nbeta -0.5 0.25\ngamma 0 3\n");
    const auto model = load_glove_text(tmp.path("ok.txt"));
    CHECK(model.size() == 3);
    CHECK(model.dim() == 2);
    CHECK(model.lookup("beta").value() == 1);
    CHECK(model.token(2) == "gamma");
    CHECK(model.embed(1)[1] == doctest::Approx(0.25));
    CHECK(model.lookup("delta") == std::nullopt);
  }

  SUBCASE("dimension mismatch names the line") {
    write_file(tmp.path("bad.txt"), "alpha 1.0 2.0\nbeta -0.5\n");
    CHECK_THROWS_WITH_AS(load_glove_text(tmp.path("bad.txt")),
                         doctest::Contains(":2:"), std::runtime_error);
  }

  SUBCASE("non-finite value rejected") {
    write_file(tmp.path("nan.txt"), "alpha 1.0 nan\n");
    CHECK_THROWS_AS(load_glove_text(tmp.path("nan.txt")), std::runtime_error);
  }

  SUBCASE("empty file rejected") {
    write_file(tmp.path("empty.txt"), "");
    CHECK_THROWS_AS(load_glove_text(tmp.path("empty.txt")),
                    std::runtime_error);
  }
}

TEST_CASE("binary round-trip is bit-exact") {
  TempDir tmp("binary");
  const auto model = testutil::gaussian_model(3, 2, 1.0, 17, "demo");
  save_binary(model, tmp.path("m.bin"));
  const auto loaded = load_binary(tmp.path("m.bin"));
  CHECK(loaded.name() == model.name());
  CHECK(loaded.size() == model.size());
  CHECK(loaded.dim() == model.dim());
  CHECK(loaded.vocab() == model.vocab());
  CHECK(std::memcmp(loaded.matrix().data(), model.matrix().data(),
                    sizeof(float) * 3 * 2) == 0);

  SUBCASE("truncated payload reported") {
    auto bytes = std::filesystem::file_size(tmp.path("m.bin"));
    std::filesystem::resize_file(tmp.path("m.bin"), bytes - 4);
    CHECK_THROWS_WITH_AS(load_binary(tmp.path("m.bin")),
                         doctest::Contains("truncated"), std::runtime_error);
  }

  SUBCASE("bad magic reported") {
    write_file(tmp.path("junk.bin"), "NOTAMODEL AT ALL");
    CHECK_THROWS_WITH_AS(load_binary(tmp.path("junk.bin")),
                         doctest::Contains("magic"), std::runtime_error);
  }
}

TEST_CASE("exact nearest neighbor") {
  const auto model = testutil::tiny_model(
      {"a", "b", "c", "d"}, {{0, 0}, {1, 0}, {0, 1}, {5, 5}});

  SUBCASE("self query returns self at distance zero") {
    const auto nl = exact_nearest(model, model.embed(2), 1);
    REQUIRE(nl.entries.size() == 1);
    CHECK(nl.entries[0].token == 2);
    CHECK(nl.entries[0].distance == 0.0);
    CHECK(nl.query_kind == SearchBackend::kExact);
  }

  SUBCASE("hand-computed ordering") {
    Eigen::VectorXd q(2);
    q << 0.6, 0.0;
    const auto nl = exact_nearest(model, q, 2);
    REQUIRE(nl.entries.size() == 2);
    CHECK(nl.entries[0].token == 1);
    CHECK(nl.entries[0].distance == doctest::Approx(0.4));
    CHECK(nl.entries[1].token == 0);
    CHECK(nl.entries[1].distance == doctest::Approx(0.6));
  }

  SUBCASE("full ranking has non-decreasing distances") {
    Eigen::VectorXd q(2);
    q << 0.3, 0.9;
    const auto nl = exact_nearest(model, q, static_cast<int>(model.size()));
    REQUIRE(nl.entries.size() == 4);
    for (std::size_t i = 1; i < nl.entries.size(); ++i) {
      CHECK(nl.entries[i].distance >= nl.entries[i - 1].distance);
    }
  }

  SUBCASE("dimension mismatch throws") {
    Eigen::VectorXd q(3);
    q << 1, 2, 3;
    CHECK_THROWS_AS(exact_nearest(model, q, 1), std::invalid_argument);
  }

  SUBCASE("k out of range throws") {
    CHECK_THROWS_AS(exact_nearest(model, model.embed(0), 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(exact_nearest(model, model.embed(0), 5),
                    std::invalid_argument);
  }

  SUBCASE("equidistant neighbors break ties by token id") {
    // b=(1,0) and c=(0,1) are equidistant from the query.
    Eigen::VectorXd q(2);
    q << 0.5, 0.5;
    const auto nl = exact_nearest(model, q, 3);
    CHECK(nl.entries[0].token == 0);
    CHECK(nl.entries[1].token == 1);
    CHECK(nl.entries[2].token == 2);
    CHECK(nl.entries[1].distance == nl.entries[2].distance);
  }
}

TEST_CASE("parallel exact search equals single-threaded") {
  const auto model = testutil::gaussian_model(20000, 24, 1.0, 3);
  Rng rng(99);
  Eigen::VectorXd q(24);
  for (int j = 0; j < 24; ++j) q[j] = rng.next_normal() * 1.5;

  set_thread_count(1);
  const auto serial = exact_nearest(model, q, 50);
  set_thread_count(0);
  const auto parallel = exact_nearest(model, q, 50);
  REQUIRE(serial.entries.size() == parallel.entries.size());
  for (std::size_t i = 0; i < serial.entries.size(); ++i) {
    CHECK(serial.entries[i].token == parallel.entries[i].token);
    CHECK(serial.entries[i].distance == parallel.entries[i].distance);
  }
}

TEST_CASE("distance identity and symmetry on sampled pairs") {
  const auto model = testutil::gaussian_model(64, 8, 2.0, 11);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = static_cast<TokenId>(rng.next_below(64));
    const auto b = static_cast<TokenId>(rng.next_below(64));
    const double dab = squared_distance(model.row_data(a), model.embed(b));
    const double dba = squared_distance(model.row_data(b), model.embed(a));
    CHECK(dab == dba);
    CHECK(squared_distance(model.row_data(a), model.embed(a)) == 0.0);
  }
}

TEST_CASE("ann index") {
  SUBCASE("degenerate index equals exact search") {
    const auto model = testutil::gaussian_model(500, 12, 1.0, 21);
    AnnParams params;
    params.tree_count = 1;
    params.leaf_size = 500;
    params.search_budget = 500;
    const AnnIndex index(model, params);
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd q(12);
      for (int j = 0; j < 12; ++j) q[j] = 2.0 * rng.next_normal();
      const auto approx = index.nearest(q, 10);
      const auto exact = exact_nearest(model, q, 10);
      CHECK(approx.query_kind == SearchBackend::kApproximate);
      REQUIRE(approx.entries.size() == exact.entries.size());
      for (std::size_t i = 0; i < exact.entries.size(); ++i) {
        CHECK(approx.entries[i].token == exact.entries[i].token);
        CHECK(approx.entries[i].distance == exact.entries[i].distance);
      }
    }
  }

  SUBCASE("full budget single tree equals exact even with small leaves") {
    const auto model = testutil::gaussian_model(300, 6, 1.0, 22);
    AnnParams params;
    params.tree_count = 1;
    params.leaf_size = 8;
    params.search_budget = 300;
    const AnnIndex index(model, params);
    Eigen::VectorXd q = model.embed(123);
    q[0] += 0.05;
    const auto approx = index.nearest(q, 300);
    const auto exact = exact_nearest(model, q, 300);
    REQUIRE(approx.entries.size() == 300);
    for (std::size_t i = 0; i < 300; ++i) {
      CHECK(approx.entries[i].token == exact.entries[i].token);
    }
  }

  SUBCASE("recall at 10 beats 0.8 on a 10k gaussian model") {
    const auto model = testutil::gaussian_model(10000, 16, 1.0, 23);
    const AnnIndex index(model, AnnParams{});
    Rng rng(31);
    double recall_sum = 0.0;
    const int queries = 40;
    for (int trial = 0; trial < queries; ++trial) {
      const auto base = static_cast<TokenId>(rng.next_below(10000));
      Eigen::VectorXd q = model.embed(base);
      for (int j = 0; j < 16; ++j) q[j] += 0.05 * rng.next_normal();
      recall_sum += recall_against(index.nearest(q, 10),
                                   exact_nearest(model, q, 10), 10);
    }
    CHECK(recall_sum / queries >= 0.8);
  }

  SUBCASE("same build seed and query give identical results") {
    const auto model = testutil::gaussian_model(2000, 10, 1.0, 24);
    AnnParams params;
    params.build_seed = 9;
    const AnnIndex a(model, params);
    const AnnIndex b(model, params);
    Rng rng(41);
    Eigen::VectorXd q(10);
    for (int j = 0; j < 10; ++j) q[j] = rng.next_normal();
    const auto ra = a.nearest(q, 25);
    const auto rb = b.nearest(q, 25);
    REQUIRE(ra.entries.size() == rb.entries.size());
    for (std::size_t i = 0; i < ra.entries.size(); ++i) {
      CHECK(ra.entries[i].token == rb.entries[i].token);
      CHECK(ra.entries[i].distance == rb.entries[i].distance);
    }
  }

  SUBCASE("recall is monotone in search budget") {
    const auto model = testutil::gaussian_model(4000, 12, 1.0, 25);
    Rng rng(51);
    Eigen::VectorXd q(12);
    for (int j = 0; j < 12; ++j) q[j] = rng.next_normal();
    const auto exact = exact_nearest(model, q, 20);
    double prev = -1.0;
    for (const int budget : {40, 200, 1000, 4000}) {
      AnnParams params;
      params.search_budget = budget;
      params.build_seed = 4;
      const AnnIndex index(model, params);
      const double r = recall_against(index.nearest(q, 20), exact, 20);
      CHECK(r >= prev);
      prev = r;
    }
    CHECK(prev == 1.0);  // full budget must reach the exact answer
  }

  SUBCASE("invalid params rejected") {
    const auto model = testutil::gaussian_model(50, 4, 1.0, 26);
    AnnParams params;
    params.tree_count = 0;
    CHECK_THROWS_AS(AnnIndex(model, params), std::invalid_argument);
  }
}
