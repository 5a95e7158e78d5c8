// Copyright 2026 The slimdex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "slimdex/kmeans.hpp"

using namespace slimdex;

TEST(KMeans, TwoPointsTwoClusters) {
  std::vector<float> pts = {0, 0, 10, 10};
  auto r = kmeans_fit(pts, 2, 2, 123);
  EXPECT_EQ(r.objective(), 0.0);
  std::vector<std::vector<float>> cents = {{r.centroids[0], r.centroids[1]}, {r.centroids[2], r.centroids[3]}};
  std::sort(cents.begin(), cents.end());
  EXPECT_EQ(cents[0], (std::vector<float>{0, 0}));
  EXPECT_EQ(cents[1], (std::vector<float>{10, 10}));
  EXPECT_NE(r.assignments[0], r.assignments[1]);
}

TEST(KMeans, SingleClusterIsMean) {
  std::vector<float> pts = {1, 2, 3, 4, 5, 9, -1, 0};
  auto r = kmeans_fit(pts, 2, 1, 5);
  EXPECT_FLOAT_EQ(r.centroids[0], 2.0F);
  EXPECT_FLOAT_EQ(r.centroids[1], 3.75F);
}

TEST(KMeans, SixPointsMatchBruteForcePartition) {
  const std::vector<std::array<double, 2>> pts = {{0, 0}, {1, 0.5}, {0.5, 1.5}, {6, 5}, {7, 6.5}, {5.5, 7}};
  std::vector<float> flat;
  for (auto& p : pts) flat.insert(flat.end(), {static_cast<float>(p[0]), static_cast<float>(p[1])});
  const double best = oracle::best_two_partition(pts);
  auto r = kmeans_fit(flat, 2, 2, 0);
  EXPECT_NEAR(r.objective(), best, 1e-6);
  EXPECT_NEAR(kmeans_objective(flat, 2, r.centroids, r.assignments), best, 1e-5);
}

TEST(KMeans, Errors) {
  std::vector<float> pts = {0, 1, 2};
  EXPECT_THROW(kmeans_fit(pts, 1, 4, 0), InvalidArgument);
  EXPECT_THROW(kmeans_fit(pts, 1, 0, 0), InvalidArgument);
  EXPECT_THROW(kmeans_fit({}, 1, 1, 0), InvalidArgument);
  EXPECT_THROW(kmeans_fit(pts, 2, 1, 0), InvalidArgument);
}

TEST(KMeans, DuplicatePointsReseedEmptyClusters) {
  std::vector<float> pts = {1, 1, 1, 1, 1, 1, 1, 1, 4, 4};
  auto r = kmeans_fit(pts, 2, 3, 9);
  EXPECT_EQ(r.objective(), 0.0);
  for (float c : r.centroids) EXPECT_TRUE(std::isfinite(c));
}

TEST(KMeans, ObjectiveNonIncreasingProperty) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const std::size_t dim = 1 + rng.below(4);
    const std::size_t n = 5 + rng.below(200);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(n, 20));
    std::vector<float> pts(n * dim);
    for (auto& v : pts) v = static_cast<float>(rng.normal() + (rng.below(3) * 4.0));
    auto r = kmeans_fit(pts, dim, k, seed, {.max_iter = 50});
    ASSERT_FALSE(r.objective_history.empty());
    for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
      EXPECT_LE(r.objective_history[i], r.objective_history[i - 1]) << "seed " << seed << " iter " << i;
    }
    EXPECT_LE(r.objective_history.size(), 50U);
  }
}

TEST(KMeans, DeterministicForSeed) {
  Rng rng(4);
  std::vector<float> pts(300);
  for (auto& v : pts) v = static_cast<float>(rng.normal());
  auto a = kmeans_fit(pts, 3, 8, 42);
  auto b = kmeans_fit(pts, 3, 8, 42);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignments, b.assignments);
}
