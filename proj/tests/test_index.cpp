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

#include <bit>
#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "slimdex/index.hpp"

namespace fs = std::filesystem;
using namespace slimdex;

namespace {

EmbeddingMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingMatrix m;
  m.n = n;
  m.d = d;
  for (std::size_t i = 0; i < n; ++i) m.ids.push_back("p" + std::to_string(i));
  for (std::size_t i = 0; i < n * d; ++i) m.data.push_back(static_cast<float>(rng.normal()));
  return m;
}

IndexConfig pq_config(std::size_t n_v, std::size_t n_b, std::uint64_t seed = 0) {
  IndexConfig c;
  c.mode = StorageMode::kPQ;
  c.n_v = n_v;
  c.n_b = n_b;
  c.seed = seed;
  return c;
}

double recall_at_10(const IndexArtifact& ix, const EmbeddingMatrix& X, const EmbeddingMatrix& Q) {
  double total = 0;
  for (std::size_t qi = 0; qi < Q.n; ++qi) {
    std::set<std::string> truth;
    for (auto& e : exact_oracle_search(X, Q.row(qi), 10)) truth.insert(e.id);
    for (auto& a : ix.search(Q.row(qi), 10)) total += truth.count(a.id);
  }
  return total / (10.0 * Q.n);
}

}  // namespace

TEST(Half, ExactValues) {
  EXPECT_EQ(float_to_half_bits(1.0F), 0x3C00);
  EXPECT_EQ(float_to_half_bits(-2.0F), 0xC000);
  EXPECT_EQ(float_to_half_bits(0.0F), 0x0000);
  EXPECT_EQ(float_to_half_bits(65520.0F), 0x7BFF);
  EXPECT_EQ(half_bits_to_float(float_to_half_bits(65520.0F)), 65504.0F);
  EXPECT_EQ(float_to_half_bits(-1e9F), 0xFBFF);
  EXPECT_EQ(float_to_half_bits(0.1F), 0x2E66);
  EXPECT_EQ(static_cast<double>(half_bits_to_float(0x2E66)), 0.0999755859375);
}

TEST(Half, MatchesNearestHalfOracleProperty) {
  Rng rng(31);
  for (int t = 0; t < 600; ++t) {
    // Log-uniform magnitudes spanning subnormal to saturated halves.
    const double mag = std::ldexp(rng.uniform(1.0, 2.0), static_cast<int>(rng.below(41)) - 24);
    const float x = static_cast<float>(rng.below(2) ? mag : -mag);
    ASSERT_EQ(float_to_half_bits(x), oracle::nearest_half(x)) << x;
  }
  // Exact ties between neighbouring halves round to the even mantissa.
  for (std::uint16_t h : {0x3C00, 0x3C01, 0x0001, 0x0200, 0x7BFE}) {
    const double mid = (oracle::half_value(h) + oracle::half_value(static_cast<std::uint16_t>(h + 1))) / 2;
    EXPECT_EQ(float_to_half_bits(static_cast<float>(mid)), oracle::nearest_half(mid)) << h;
  }
}

TEST(Half, EveryFiniteHalfRoundTrips) {
  for (std::uint32_t h = 0; h < 0x10000; ++h) {
    if (((h >> 10) & 0x1F) == 0x1F) continue;
    const float f = half_bits_to_float(static_cast<std::uint16_t>(h));
    ASSERT_EQ(static_cast<double>(f), oracle::half_value(static_cast<std::uint16_t>(h)));
    ASSERT_EQ(float_to_half_bits(f), h);
  }
}

TEST(BuildIndex, Flat32TwoBasisVectors) {
  auto X = EmbeddingMatrix::from_rows({"e1", "e2"}, {{1, 0}, {0, 1}});
  auto ix = build_index(X, {});
  std::vector<float> q = {1, 0};
  auto r = search(ix, q, 1);
  ASSERT_EQ(r.size(), 1U);
  EXPECT_EQ(r[0], (ScoredId{"e1", 1.0}));
}

TEST(BuildIndex, Flat32EqualsExactOracleProperty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    auto X = random_matrix(1 + rng.below(150), 1 + rng.below(24), seed);
    auto ix = build_index(X, {});
    std::vector<std::vector<float>> rows;
    for (std::size_t i = 0; i < X.n; ++i) rows.emplace_back(X.row(i).begin(), X.row(i).end());
    for (int t = 0; t < 5; ++t) {
      auto q = random_matrix(1, X.d, seed * 100 + t);
      const std::size_t k = 1 + rng.below(X.n + 3);
      auto got = ix.search(q.row(0), k);
      auto want = oracle::brute_force_ranking(rows, X.ids, {q.data.begin(), q.data.end()}, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t r = 0; r < got.size(); ++r) EXPECT_EQ(got[r].id, want[r]);
      EXPECT_EQ(got, exact_oracle_search(X, q.row(0), k));
    }
  }
}

TEST(BuildIndex, Flat16StoresRoundToNearestEvenCast) {
  auto X = random_matrix(30, 7, 4);
  IndexConfig c;
  c.mode = StorageMode::kFlat16;
  auto ix = build_index(X, c);
  const auto& half = std::get<std::vector<std::uint16_t>>(ix.payload());
  ASSERT_EQ(half.size(), X.data.size());
  for (std::size_t i = 0; i < half.size(); ++i) EXPECT_EQ(half[i], oracle::nearest_half(X.data[i]));
}

TEST(BuildIndex, Flat16LosslessOnRepresentableValues) {
  Rng rng(6);
  EmbeddingMatrix X;
  X.n = 40;
  X.d = 6;
  for (std::size_t i = 0; i < X.n; ++i) X.ids.push_back("p" + std::to_string(i));
  for (std::size_t i = 0; i < X.n * X.d; ++i) X.data.push_back(static_cast<float>(static_cast<int>(rng.below(257)) - 128) / 64.0F);
  IndexConfig c16;
  c16.mode = StorageMode::kFlat16;
  auto a = build_index(X, {});
  auto b = build_index(X, c16);
  for (int t = 0; t < 10; ++t) {
    auto q = random_matrix(1, 6, 50 + t);
    EXPECT_EQ(a.search(q.row(0), 40), b.search(q.row(0), 40));
  }
}

TEST(BuildIndex, PqPayloadEqualsStandalonePipeline) {
  std::vector<std::vector<float>> rows;
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) {
    ids.push_back("r" + std::to_string(i));
    std::vector<float> r;
    for (int j = 0; j < 8; ++j) r.push_back(static_cast<float>(((i * 7 + j * 3) % 11) - 5) * 0.25F);
    rows.push_back(r);
  }
  auto X = EmbeddingMatrix::from_rows(ids, rows);
  auto ix = build_index(X, pq_config(4, 8, 99));
  const auto& p = std::get<IndexArtifact::PQPayload>(ix.payload());
  auto cb = pq_train(X, 4, 8, 99);
  EXPECT_EQ(p.codebook, cb);
  EXPECT_EQ(p.codes, pq_encode(cb, X));
  auto q = random_matrix(1, 8, 1);
  EXPECT_EQ(ix.search(q.row(0), 5), pq_search(cb, p.codes, q.row(0), 5));
}

TEST(BuildIndex, PcaAppliedToQueries) {
  auto X = random_matrix(80, 12, 9);
  IndexConfig c;
  c.d_r = 5;
  auto ix = build_index(X, c);
  ASSERT_TRUE(ix.pca());
  auto Y = apply_pca(*ix.pca(), X);
  auto q = random_matrix(1, 12, 10);
  std::vector<float> qy(5);
  project(*ix.pca(), q.row(0), qy);
  EXPECT_EQ(ix.search(q.row(0), 10), exact_oracle_search(Y, qy, 10));
  EXPECT_EQ(ix.d_r(), 5U);
  EXPECT_EQ(ix.d_original(), 12U);
}

TEST(BuildIndex, NormalizationAppliedToPassagesAndQueries) {
  auto X = random_matrix(50, 8, 2);
  IndexConfig c;
  c.normalize = true;
  auto ix = build_index(X, c);
  const auto& flat = std::get<std::vector<float>>(ix.payload());
  auto expected = layer_normalize(X.row(3), NormalizationParams::identity(8));
  EXPECT_TRUE(std::equal(expected.begin(), expected.end(), flat.begin() + 3 * 8));
  auto q = random_matrix(1, 8, 3);
  EXPECT_EQ(ix.transform_query(q.row(0)), layer_normalize(q.row(0), NormalizationParams::identity(8)));
}

TEST(BuildIndex, ConfigErrors) {
  auto X = random_matrix(20, 16, 1);
  EXPECT_THROW(build_index(X, pq_config(3, 8)), InvalidArgument);
  IndexConfig missing;
  missing.mode = StorageMode::kPQ;
  EXPECT_THROW(build_index(X, missing), InvalidArgument);
  IndexConfig stray;
  stray.n_v = 4;
  EXPECT_THROW(build_index(X, stray), InvalidArgument);
  IndexConfig big;
  big.d_r = 17;
  EXPECT_THROW(build_index(X, big), InvalidArgument);
  IndexConfig pca_split = pq_config(4, 8);
  pca_split.d_r = 6;
  EXPECT_THROW(build_index(X, pca_split), InvalidArgument);
  auto ix = build_index(X, {});
  EXPECT_THROW(ix.search(std::vector<float>(15), 3), InvalidArgument);
  EXPECT_THROW(ix.search(std::vector<float>(16), 0), InvalidArgument);
}

TEST(IndexSize, SectionsMatchFormulasAndFileLength) {
  auto X = random_matrix(37, 16, 5);
  std::vector<IndexConfig> configs(5);
  configs[1].mode = StorageMode::kFlat16;
  configs[2] = pq_config(8, 4);
  configs[3] = pq_config(4, 8);
  configs[3].d_r = 8;
  configs[3].normalize = true;
  configs[4].d_r = 10;
  for (const auto& c : configs) {
    auto ix = build_index(X, c);
    auto rep = index_size_bytes(ix);
    EXPECT_EQ(ix.serialize().size(), rep.total_bytes) << to_string(c.mode);
    std::uint64_t sum = 0;
    for (auto& [k, v] : rep.breakdown) sum += v;
    EXPECT_EQ(sum, rep.total_bytes);
    const std::size_t dr = c.d_r.value_or(16);
    if (c.mode == StorageMode::kFlat32) {
      EXPECT_EQ(rep.breakdown.at("vectors"), 37U * dr * 4);
    }
    if (c.mode == StorageMode::kFlat16) {
      EXPECT_EQ(rep.breakdown.at("vectors"), 37U * dr * 2);
    }
    if (c.mode == StorageMode::kPQ) {
      EXPECT_EQ(rep.breakdown.at("codes"), 37U * ((c.n_v * c.n_b + 7) / 8));
      EXPECT_EQ(rep.breakdown.at("codebook"), c.n_v * (1U << c.n_b) * (dr / c.n_v) * 4);
    }
  }
}

TEST(IndexSize, HalfPrecisionIsExactlyHalf) {
  for (std::uint64_t n : {1ULL, 1000ULL, 26000000ULL}) {
    const auto f32 = payload_bytes(StorageMode::kFlat32, n, 768).vectors;
    const auto f16 = payload_bytes(StorageMode::kFlat16, n, 768).vectors;
    EXPECT_EQ(f32, 2 * f16);
  }
  auto X = random_matrix(5, 3, 1);
  EXPECT_EQ(cast_f16(X.data).size(), X.data.size());
}

TEST(IndexSize, WikipediaScaleArithmetic) {
  const auto flat = payload_bytes(StorageMode::kFlat32, 26'000'000, 768);
  EXPECT_EQ(flat.vectors, 79'872'000'000ULL);
  EXPECT_NEAR(static_cast<double>(flat.vectors) / 75e9, 1.0, 0.08);
  EXPECT_EQ(payload_bytes(StorageMode::kPQ, 26'000'000, 256, 64, 8).vectors, 1'664'000'000ULL);
  EXPECT_EQ(payload_bytes(StorageMode::kPQ, 26'000'000, 128, 16, 8).vectors, 416'000'000ULL);
}

TEST(Serialization, RoundTripAllModes) {
  auto X = random_matrix(60, 16, 8);
  std::vector<IndexConfig> configs(6);
  configs[1].mode = StorageMode::kFlat16;
  configs[2] = pq_config(8, 8, 3);
  configs[3] = pq_config(16, 1, 3);
  configs[4] = pq_config(4, 16, 3);
  configs[5] = pq_config(4, 2, 3);
  configs[5].d_r = 8;
  configs[5].normalize = true;
  const auto dir = fs::temp_directory_path() / "slimdex_test_index";
  fs::create_directories(dir);
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    auto ix = build_index(X, configs[ci]);
    const auto path = dir / ("ix" + std::to_string(ci) + ".pqix");
    save_index(ix, path);
    EXPECT_EQ(fs::file_size(path), ix.size_report().total_bytes);
    auto back = load_index(path);
    EXPECT_EQ(back.size_report(), ix.size_report());
    EXPECT_EQ(back.payload(), ix.payload());
    EXPECT_EQ(back.serialize(), ix.serialize());
    auto Q = random_matrix(100, 16, 1000 + ci);
    for (std::size_t qi = 0; qi < Q.n; ++qi) {
      ASSERT_EQ(back.search(Q.row(qi), 10), ix.search(Q.row(qi), 10));
    }
  }
}

TEST(Serialization, CorruptionDetected) {
  auto ix = build_index(random_matrix(10, 4, 1), {});
  auto bytes = ix.serialize();
  auto bad_magic = bytes;
  bad_magic[1] = 'X';
  EXPECT_THROW(IndexArtifact::deserialize(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(IndexArtifact::deserialize(bad_version), FormatError);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  try {
    IndexArtifact::deserialize(flipped);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(IndexArtifact::deserialize(truncated), FormatError);
  EXPECT_THROW(IndexArtifact::deserialize(std::span<const std::uint8_t>(bytes.data(), 6)), FormatError);
}

TEST(Serialization, HeaderLayout) {
  auto ix = build_index(random_matrix(3, 4, 1), pq_config(2, 4));
  auto b = ix.serialize();
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "PQIX");
  EXPECT_EQ(b[4], 1);       // version
  EXPECT_EQ(b[8], 2);       // mode pq
  EXPECT_EQ(b[9], 4);       // d_original
  EXPECT_EQ(b[13], 4);      // d_R
  EXPECT_EQ(b[17], 0);      // flags
  EXPECT_EQ(b[18], 3);      // n
  EXPECT_EQ(b[26], 2);      // n_v
  EXPECT_EQ(b[30], 4);      // n_b
}

TEST(IndexStatistical, RecallDegradesMonotonicallyWithCompression) {
  auto corpus = generate_synthetic({.n = 2000, .d = 64, .n_clusters = 50, .noise_sigma = 0.1, .seed = 77,
                                    .n_queries = 100});
  const auto& X = corpus.passage_vectors;
  IndexConfig f16;
  f16.mode = StorageMode::kFlat16;
  std::vector<double> r = {recall_at_10(build_index(X, {}), X, corpus.query_vectors),
                           recall_at_10(build_index(X, f16), X, corpus.query_vectors),
                           recall_at_10(build_index(X, pq_config(64, 8, 1)), X, corpus.query_vectors),
                           recall_at_10(build_index(X, pq_config(16, 8, 1)), X, corpus.query_vectors),
                           recall_at_10(build_index(X, pq_config(8, 8, 1)), X, corpus.query_vectors)};
  EXPECT_EQ(r[0], 1.0);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_LE(r[i], r[i - 1] + 0.01) << "step " << i;
}
