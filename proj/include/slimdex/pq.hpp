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

// Product quantization for inner-product search.
//
// A d-vector is split into n_v contiguous sub-vectors of sub_dim = d / n_v
// coordinates; each is replaced by the index of its nearest centroid in a
// per-sub-space codebook of 2^n_b entries. Storage is n_v * n_b bits per
// vector, bit-packed LSB-first (n_b in {1, 2, 4, 8, 16}).
//
// Queries stay full precision: adc_score_table() precomputes the dot product
// of each query sub-vector with every centroid, and a code row scores as the
// sum of its n_v table entries.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slimdex/common.hpp"
#include "slimdex/corpus.hpp"
#include "slimdex/kmeans.hpp"

namespace slimdex {

inline bool is_supported_code_width(std::size_t n_b) {
  return n_b == 1 || n_b == 2 || n_b == 4 || n_b == 8 || n_b == 16;
}

/// Throws InvalidArgument unless (d, n_v, n_b) describes a valid split.
inline void validate_pq_params(std::size_t d, std::size_t n_v, std::size_t n_b) {
  if (n_v == 0) throw InvalidArgument("PQ: n_v must be >= 1");
  if (d % n_v != 0) {
    throw InvalidArgument("PQ: n_v (" + std::to_string(n_v) + ") does not divide dimension " +
                          std::to_string(d));
  }
  if (!is_supported_code_width(n_b)) {
    throw InvalidArgument("PQ: n_b must be one of 1, 2, 4, 8, 16 (got " + std::to_string(n_b) + ")");
  }
}

/// Bytes needed to store one vector's codes.
constexpr std::size_t pq_code_bytes(std::size_t n_v, std::size_t n_b) { return (n_v * n_b + 7) / 8; }

struct PQCodebook {
  std::size_t d = 0;
  std::size_t n_v = 0;
  std::size_t n_b = 0;
  std::size_t sub_dim = 0;
  std::vector<float> centroids;  // n_v x 2^n_b x sub_dim

  std::size_t ksub() const { return std::size_t{1} << n_b; }

  std::span<const float> centroid(std::size_t sub, std::size_t c) const {
    return {centroids.data() + (sub * ksub() + c) * sub_dim, sub_dim};
  }

  friend bool operator==(const PQCodebook&, const PQCodebook&) = default;
};

struct PQCodes {
  std::size_t n = 0;
  std::size_t n_v = 0;
  std::size_t n_b = 0;
  std::vector<std::uint16_t> codes;  // n x n_v, unpacked
  std::vector<std::string> ids;

  std::span<const std::uint16_t> row(std::size_t i) const { return {codes.data() + i * n_v, n_v}; }

  friend bool operator==(const PQCodes&, const PQCodes&) = default;
};

/// LSB-first bit packing; code j of a row occupies bits [j*n_b, (j+1)*n_b).
/// For n_b = 16 this is little-endian u16 per code.
inline std::vector<std::uint8_t> pack_codes(const PQCodes& codes) {
  const std::size_t row_bytes = pq_code_bytes(codes.n_v, codes.n_b);
  std::vector<std::uint8_t> out(codes.n * row_bytes, 0);
  for (std::size_t i = 0; i < codes.n; ++i) {
    std::uint8_t* dst = out.data() + i * row_bytes;
    for (std::size_t j = 0; j < codes.n_v; ++j) {
      const std::uint32_t code = codes.codes[i * codes.n_v + j];
      for (std::size_t b = 0; b < codes.n_b; ++b) {
        if ((code >> b) & 1U) {
          const std::size_t bit = j * codes.n_b + b;
          dst[bit / 8] = static_cast<std::uint8_t>(dst[bit / 8] | (1U << (bit % 8)));
        }
      }
    }
  }
  return out;
}

inline std::vector<std::uint16_t> unpack_codes(std::span<const std::uint8_t> packed, std::size_t n,
                                               std::size_t n_v, std::size_t n_b) {
  const std::size_t row_bytes = pq_code_bytes(n_v, n_b);
  if (packed.size() != n * row_bytes) throw FormatError("PQ code block has wrong length");
  std::vector<std::uint16_t> out(n * n_v, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* src = packed.data() + i * row_bytes;
    for (std::size_t j = 0; j < n_v; ++j) {
      std::uint32_t code = 0;
      for (std::size_t b = 0; b < n_b; ++b) {
        const std::size_t bit = j * n_b + b;
        code |= static_cast<std::uint32_t>((src[bit / 8] >> (bit % 8)) & 1U) << b;
      }
      out[i * n_v + j] = static_cast<std::uint16_t>(code);
    }
  }
  return out;
}

struct PQTrainOptions {
  KMeansOptions kmeans;
  /// Codebooks are fitted on at most this many rows (seeded subsample).
  std::size_t max_training_points = 100000;
};

/// Trains one k-means codebook per sub-space with k = 2^n_b. When fewer
/// training rows than 2^n_b exist, fits min(n, 2^n_b) centroids and pads the
/// codebook with copies of the last one so code width stays n_b bits.
inline PQCodebook pq_train(const EmbeddingMatrix& X, std::size_t n_v, std::size_t n_b,
                           std::uint64_t seed, const PQTrainOptions& opts = {}) {
  validate_pq_params(X.d, n_v, n_b);
  if (X.n == 0) throw InvalidArgument("pq_train: empty training set");

  std::vector<std::size_t> rows(X.n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (opts.max_training_points > 0 && X.n > opts.max_training_points) {
    Rng rng(mix_seed(seed, 0xC0DEB00C));
    for (std::size_t i = 0; i < opts.max_training_points; ++i) {
      std::swap(rows[i], rows[i + rng.below(X.n - i)]);
    }
    rows.resize(opts.max_training_points);
    std::sort(rows.begin(), rows.end());
  }

  PQCodebook cb;
  cb.d = X.d;
  cb.n_v = n_v;
  cb.n_b = n_b;
  cb.sub_dim = X.d / n_v;
  const std::size_t ksub = cb.ksub();
  const std::size_t k = std::min(ksub, rows.size());
  cb.centroids.resize(n_v * ksub * cb.sub_dim);

  std::vector<float> sub(rows.size() * cb.sub_dim);
  for (std::size_t j = 0; j < n_v; ++j) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto src = X.row(rows[r]).subspan(j * cb.sub_dim, cb.sub_dim);
      std::copy(src.begin(), src.end(), sub.begin() + static_cast<std::ptrdiff_t>(r * cb.sub_dim));
    }
    const KMeansResult km = kmeans_fit(sub, cb.sub_dim, k, mix_seed(seed, j), opts.kmeans);
    float* dst = cb.centroids.data() + j * ksub * cb.sub_dim;
    std::copy(km.centroids.begin(), km.centroids.end(), dst);
    for (std::size_t c = k; c < ksub; ++c) {
      std::copy(km.centroids.end() - static_cast<std::ptrdiff_t>(cb.sub_dim), km.centroids.end(),
                dst + c * cb.sub_dim);
    }
  }
  return cb;
}

namespace detail {

inline std::uint16_t nearest_centroid(const PQCodebook& cb, std::size_t sub, std::span<const float> x) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < cb.ksub(); ++c) {
    auto cent = cb.centroid(sub, c);
    double acc = 0.0;
    for (std::size_t t = 0; t < cb.sub_dim; ++t) {
      const double diff = static_cast<double>(x[t]) - cent[t];
      acc += diff * diff;
    }
    if (acc < best) {
      best = acc;
      arg = c;
    }
  }
  return static_cast<std::uint16_t>(arg);
}

}  // namespace detail

/// Nearest centroid per sub-vector (squared L2, ties to the lowest index).
inline PQCodes pq_encode(const PQCodebook& cb, const EmbeddingMatrix& X) {
  if (X.d != cb.d) {
    throw InvalidArgument("pq_encode: input dimension " + std::to_string(X.d) +
                          " != codebook dimension " + std::to_string(cb.d));
  }
  PQCodes out;
  out.n = X.n;
  out.n_v = cb.n_v;
  out.n_b = cb.n_b;
  out.ids = X.ids;
  out.codes.resize(X.n * cb.n_v);
  for (std::size_t i = 0; i < X.n; ++i) {
    auto row = X.row(i);
    for (std::size_t j = 0; j < cb.n_v; ++j) {
      out.codes[i * cb.n_v + j] = detail::nearest_centroid(cb, j, row.subspan(j * cb.sub_dim, cb.sub_dim));
    }
  }
  return out;
}

inline EmbeddingMatrix pq_decode(const PQCodebook& cb, const PQCodes& codes) {
  EmbeddingMatrix X;
  X.n = codes.n;
  X.d = cb.d;
  X.ids = codes.ids;
  X.data.resize(codes.n * cb.d);
  for (std::size_t i = 0; i < codes.n; ++i) {
    auto dst = X.row(i);
    for (std::size_t j = 0; j < cb.n_v; ++j) {
      auto cent = cb.centroid(j, codes.codes[i * cb.n_v + j]);
      std::copy(cent.begin(), cent.end(), dst.begin() + static_cast<std::ptrdiff_t>(j * cb.sub_dim));
    }
  }
  return X;
}

/// n_v x 2^n_b table; entry [j][c] = <q_j, centroid_{j,c}>.
inline std::vector<double> adc_score_table(const PQCodebook& cb, std::span<const float> q) {
  if (q.size() != cb.d) {
    throw InvalidArgument("adc_score_table: query dimension " + std::to_string(q.size()) +
                          " != codebook dimension " + std::to_string(cb.d));
  }
  const std::size_t ksub = cb.ksub();
  std::vector<double> table(cb.n_v * ksub);
  for (std::size_t j = 0; j < cb.n_v; ++j) {
    auto qs = q.subspan(j * cb.sub_dim, cb.sub_dim);
    for (std::size_t c = 0; c < ksub; ++c) table[j * ksub + c] = dot(qs, cb.centroid(j, c));
  }
  return table;
}

inline double adc_score(std::span<const double> table, std::size_t ksub,
                        std::span<const std::uint16_t> code_row) {
  double acc = 0.0;
  for (std::size_t j = 0; j < code_row.size(); ++j) acc += table[j * ksub + code_row[j]];
  return acc;
}

/// Top-k passages by ADC score, descending; ties go to the smaller id.
inline Ranking pq_search(const PQCodebook& cb, const PQCodes& codes, std::span<const float> q,
                         std::size_t k) {
  if (k == 0) throw InvalidArgument("pq_search: k must be >= 1");
  const auto table = adc_score_table(cb, q);
  std::vector<double> scores(codes.n);
  for (std::size_t i = 0; i < codes.n; ++i) scores[i] = adc_score(table, cb.ksub(), codes.row(i));
  return rank_top_k(scores, codes.ids, k);
}

/// Storage cost of one vector relative to 32-bit floats, as a ratio.
constexpr double pq_compression_factor(std::size_t d, std::size_t n_v, std::size_t n_b) {
  return static_cast<double>(d * 4) / (static_cast<double>(n_v * n_b) / 8.0);
}

}  // namespace slimdex
