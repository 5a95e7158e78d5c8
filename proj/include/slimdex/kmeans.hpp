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

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "slimdex/common.hpp"

namespace slimdex {

struct KMeansOptions {
  std::size_t max_iter = 25;
  double rel_tol = 1e-6;
};

struct KMeansResult {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;            // k x dim
  std::vector<std::uint32_t> assignments;  // one per point
  /// Objective after each assignment step; the last entry matches the
  /// returned centroids and assignments.
  std::vector<double> objective_history;

  double objective() const { return objective_history.empty() ? 0.0 : objective_history.back(); }
};

namespace detail {

inline double squared_distance(const float* a, const double* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double diff = static_cast<double>(a[j]) - b[j];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace detail

/// Lloyd's algorithm from a k-means++ seeding. `points` is n x dim row-major.
/// Empty clusters are re-seeded from the point farthest from its centroid.
/// Stops after max_iter assignment steps, when the objective reaches zero, or
/// when its relative decrease falls below rel_tol.
inline KMeansResult kmeans_fit(std::span<const float> points, std::size_t dim, std::size_t k,
                               std::uint64_t seed, const KMeansOptions& opts = {}) {
  if (dim == 0) throw InvalidArgument("kmeans_fit: dim must be >= 1");
  if (points.size() % dim != 0) throw InvalidArgument("kmeans_fit: points size not a multiple of dim");
  const std::size_t n = points.size() / dim;
  if (n == 0) throw InvalidArgument("kmeans_fit: no points");
  if (k == 0) throw InvalidArgument("kmeans_fit: k must be >= 1");
  if (k > n) {
    throw InvalidArgument("kmeans_fit: k (" + std::to_string(k) + ") exceeds point count (" +
                          std::to_string(n) + ")");
  }
  if (opts.max_iter == 0) throw InvalidArgument("kmeans_fit: max_iter must be >= 1");

  Rng rng(seed);
  auto point = [&](std::size_t i) { return points.data() + i * dim; };

  // k-means++ seeding.
  std::vector<double> centers(k * dim);
  auto set_center = [&](std::size_t c, std::size_t i) {
    for (std::size_t j = 0; j < dim; ++j) centers[c * dim + j] = point(i)[j];
  };
  set_center(0, rng.below(n));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = detail::squared_distance(point(i), centers.data(), dim);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : nearest) total += v;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum += nearest[i];
        if (target < cum) {
          pick = i;
          break;
        }
      }
      while (nearest[pick] == 0.0 && pick > 0) --pick;  // never land on a zero-weight tail
    } else {
      pick = rng.below(n);
    }
    set_center(c, pick);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], detail::squared_distance(point(i), centers.data() + c * dim, dim));
    }
  }

  KMeansResult res;
  res.k = k;
  res.dim = dim;
  res.assignments.assign(n, 0);
  std::vector<double> dist(n);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);

  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = detail::squared_distance(point(i), centers.data() + c * dim, dim);
        if (dd < best) {
          best = dd;
          arg = static_cast<std::uint32_t>(c);
        }
      }
      res.assignments[i] = arg;
      dist[i] = best;
      objective += best;
    }
    const double prev = res.objective_history.empty() ? 0.0 : res.objective_history.back();
    res.objective_history.push_back(objective);
    if (objective == 0.0) break;
    if (res.objective_history.size() > 1 && prev - objective <= opts.rel_tol * prev) break;
    if (iter + 1 == opts.max_iter) break;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = res.assignments[i];
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += point(i)[j];
    }
    bool any_empty = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        any_empty = true;
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        centers[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
      }
    }
    if (any_empty) {
      for (std::size_t i = 0; i < n; ++i) {
        dist[i] = detail::squared_distance(point(i), centers.data() + res.assignments[i] * dim, dim);
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i) {
          if (dist[i] > dist[far]) far = i;
        }
        set_center(c, far);
        dist[far] = 0.0;
      }
    }
  }

  res.centroids.resize(k * dim);
  for (std::size_t i = 0; i < k * dim; ++i) res.centroids[i] = static_cast<float>(centers[i]);
  return res;
}

/// Sum of squared distances from each point to the given centroid.
inline double kmeans_objective(std::span<const float> points, std::size_t dim,
                               std::span<const float> centroids,
                               std::span<const std::uint32_t> assignments) {
  double total = 0.0;
  const std::size_t n = points.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = static_cast<double>(points[i * dim + j]) - centroids[assignments[i] * dim + j];
      total += diff * diff;
    }
  }
  return total;
}

}  // namespace slimdex
