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

// Embedding matrices, passage/query records, their on-disk formats, and the
// seeded synthetic corpus generator used for desk-scale evaluation.
//
// Embedding file layout (little-endian):
//   "EMB1" | version u32 | n u64 | d u32 | dtype u8 (0 = f32) | 7 reserved
//   | n x (u32 length + UTF-8 id) | n*d f32, row-major

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slimdex/binary_io.hpp"
#include "slimdex/common.hpp"

namespace slimdex {

struct EmbeddingMatrix {
  std::size_t n = 0;
  std::size_t d = 1;
  std::vector<float> data;  // n*d, row-major
  std::vector<std::string> ids;

  std::span<const float> row(std::size_t i) const { return {data.data() + i * d, d}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * d, d}; }

  static EmbeddingMatrix from_rows(std::vector<std::string> ids,
                                   const std::vector<std::vector<float>>& rows) {
    EmbeddingMatrix m;
    m.n = rows.size();
    m.d = rows.empty() ? 1 : rows.front().size();
    m.ids = std::move(ids);
    for (const auto& r : rows) {
      if (r.size() != m.d) throw InvalidArgument("from_rows: ragged rows");
      m.data.insert(m.data.end(), r.begin(), r.end());
    }
    m.validate();
    return m;
  }

  /// Throws InvalidArgument when any structural invariant is broken.
  void validate() const {
    if (d < 1) throw InvalidArgument("embedding dimension must be >= 1");
    if (data.size() != n * d) {
      throw InvalidArgument("embedding data length " + std::to_string(data.size()) +
                            " != n*d = " + std::to_string(n * d));
    }
    if (ids.size() != n) throw InvalidArgument("embedding ids length != n");
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ids) {
      if (!seen.insert(id).second) throw InvalidArgument("duplicate embedding id '" + id + "'");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!std::isfinite(data[i])) {
        throw InvalidArgument("non-finite embedding value in row " + std::to_string(i / d));
      }
    }
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

inline std::vector<std::uint8_t> serialize_embeddings(const EmbeddingMatrix& m) {
  m.validate();
  io::ByteWriter w;
  w.raw("EMB1");
  w.u32(kEmbeddingFormatVersion);
  w.u64(m.n);
  w.u32(static_cast<std::uint32_t>(m.d));
  w.u8(0);
  w.zeros(7);
  for (const auto& id : m.ids) w.str(id);
  for (float v : m.data) w.f32(v);
  return w.take();
}

inline EmbeddingMatrix parse_embeddings(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  auto magic = r.bytes(4, "magic");
  if (std::string(magic.begin(), magic.end()) != "EMB1") r.fail("bad magic (expected EMB1)");
  if (const auto version = r.u32(); version != kEmbeddingFormatVersion) {
    r.fail("unsupported embedding format version " + std::to_string(version));
  }
  EmbeddingMatrix m;
  m.n = r.u64();
  m.d = r.u32();
  if (m.d == 0) r.fail("dimension must be >= 1");
  if (const auto dtype = r.u8(); dtype != 0) r.fail("unsupported dtype " + std::to_string(dtype));
  r.skip(7, "reserved header bytes");

  // Every id needs at least its 4-byte length prefix; reject absurd n early.
  if (m.n > r.remaining() / 4) r.fail("vector count exceeds file size");
  m.ids.reserve(m.n);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < m.n; ++i) {
    const std::size_t at = r.offset();
    std::string id = r.str("id");
    if (!seen.insert(id).second) {
      throw FormatError("duplicate id '" + id + "' at byte offset " + std::to_string(at));
    }
    m.ids.push_back(std::move(id));
  }

  const std::size_t expected = m.n * m.d * 4;
  if (r.remaining() < expected) {
    throw FormatError("truncated data block at byte offset " + std::to_string(r.offset()) +
                      ": expected " + std::to_string(expected) + " bytes, found " +
                      std::to_string(r.remaining()));
  }
  m.data.resize(m.n * m.d);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    const std::size_t at = r.offset();
    m.data[i] = r.f32();
    if (!std::isfinite(m.data[i])) {
      throw FormatError("non-finite value at byte offset " + std::to_string(at));
    }
  }
  if (r.remaining() != 0) {
    r.fail("trailing " + std::to_string(r.remaining()) + " bytes after data block");
  }
  return m;
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  auto bytes = io::read_file(path);
  try {
    return parse_embeddings(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_embeddings(m));
}

// ---------------------------------------------------------------------------
// JSONL records

struct PassageRecord {
  std::string id;
  std::string article_id;
  std::string title;
  std::string text;
  std::vector<std::string> categories;

  friend bool operator==(const PassageRecord&, const PassageRecord&) = default;
};

struct QueryRecord {
  std::string id;
  std::string question;
  std::vector<std::string> answers;

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

namespace detail {

template <typename Fn>
void for_each_jsonl_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
      }
      if (!obj.is_object()) throw FormatError("line " + std::to_string(line_no) + ": not an object");
      fn(obj, line_no);
    }
    start = end + 1;
  }
}

inline std::string string_field(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError("line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  if (!it->is_string()) {
    throw FormatError("line " + std::to_string(line) + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

inline std::vector<std::string> string_list_field(const nlohmann::json& obj, const char* key,
                                                  std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError("line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  if (!it->is_array()) {
    throw FormatError("line " + std::to_string(line) + ": field '" + key + "' must be an array");
  }
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw FormatError("line " + std::to_string(line) + ": field '" + key +
                        "' must contain strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline std::vector<PassageRecord> parse_passages(std::string_view jsonl) {
  std::vector<PassageRecord> out;
  std::unordered_set<std::string> seen;
  detail::for_each_jsonl_line(jsonl, [&](const nlohmann::json& obj, std::size_t line) {
    PassageRecord p;
    p.id = detail::string_field(obj, "id", line);
    p.article_id = detail::string_field(obj, "article_id", line);
    p.title = detail::string_field(obj, "title", line);
    p.text = detail::string_field(obj, "text", line);
    p.categories = detail::string_list_field(obj, "categories", line);
    if (p.text.empty()) throw FormatError("line " + std::to_string(line) + ": empty text");
    if (!seen.insert(p.id).second) {
      throw FormatError("line " + std::to_string(line) + ": duplicate id '" + p.id + "'");
    }
    out.push_back(std::move(p));
  });
  return out;
}

inline std::vector<QueryRecord> parse_queries(std::string_view jsonl) {
  std::vector<QueryRecord> out;
  std::unordered_set<std::string> seen;
  detail::for_each_jsonl_line(jsonl, [&](const nlohmann::json& obj, std::size_t line) {
    QueryRecord q;
    q.id = detail::string_field(obj, "id", line);
    q.question = detail::string_field(obj, "question", line);
    q.answers = detail::string_list_field(obj, "answers", line);
    if (q.answers.empty()) {
      throw FormatError("line " + std::to_string(line) + ": answers must be non-empty");
    }
    if (!seen.insert(q.id).second) {
      throw FormatError("line " + std::to_string(line) + ": duplicate id '" + q.id + "'");
    }
    out.push_back(std::move(q));
  });
  return out;
}

inline std::vector<PassageRecord> load_passages(const std::filesystem::path& path) {
  try {
    return parse_passages(io::read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
  try {
    return parse_queries(io::read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline std::string passages_to_jsonl(std::span<const PassageRecord> passages) {
  std::string out;
  for (const auto& p : passages) {
    nlohmann::json obj = {{"id", p.id},
                          {"article_id", p.article_id},
                          {"title", p.title},
                          {"text", p.text},
                          {"categories", p.categories}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

inline std::string queries_to_jsonl(std::span<const QueryRecord> queries) {
  std::string out;
  for (const auto& q : queries) {
    nlohmann::json obj = {{"id", q.id}, {"question", q.question}, {"answers", q.answers}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t d = 16;
  std::size_t n_clusters = 10;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
  std::size_t n_queries = 100;
  /// Fraction of articles (clusters) whose passages carry an answer string.
  double answer_fraction = 1.0;
  /// Probability that a title word or category is drawn from the other
  /// class's vocabulary (answer-bearing vs not).
  double title_noise = 0.2;
};

struct GroundTruth {
  std::string query_id;
  std::string passage_id;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct SyntheticCorpus {
  EmbeddingMatrix passage_vectors;
  EmbeddingMatrix query_vectors;
  std::vector<GroundTruth> ground_truth;  // in query order
  std::vector<PassageRecord> passages;
  std::vector<QueryRecord> queries;
  std::vector<std::string> answer_article_ids;  // sorted
};

namespace detail {

inline std::string padded_id(char prefix, std::size_t i, std::size_t count) {
  std::string digits = std::to_string(count == 0 ? 0 : count - 1);
  std::string num = std::to_string(i);
  return std::string(1, prefix) + std::string(digits.size() - std::min(digits.size(), num.size()), '0') +
         num;
}

inline constexpr const char* kTopicalWords[] = {
    "history", "war",   "river",  "city",       "king",    "science", "film",   "album",
    "novel",   "election", "empire", "battle", "university", "physics", "saint", "opera"};
inline constexpr const char* kMaintenanceWords[] = {
    "list",  "template", "disambiguation", "stub",     "index",    "draft",   "user",     "portal",
    "archive", "glossary", "outline",      "timeline", "redirect", "sandbox", "category", "track"};
inline constexpr const char* kTopicalCategories[] = {
    "Living people", "Capitals in Europe", "Nobel laureates", "Rivers of Asia",
    "20th-century novels", "Physics", "World War II", "Operas"};
inline constexpr const char* kMaintenanceCategories[] = {
    "Lists of lists", "Stub articles", "Disambiguation pages", "Redirects",
    "Templates", "Maintenance", "Wikipedia glossaries", "Index pages"};
inline constexpr const char* kFillerWords[] = {
    "lorem", "ipsum", "dolor", "sit",  "amet",  "consectetur", "adipiscing", "elit",
    "sed",   "do",    "eiusmod", "tempor", "incididunt", "ut", "labore", "magna"};

template <std::size_t N>
const char* pick(Rng& rng, const char* const (&words)[N]) {
  return words[rng.below(N)];
}

}  // namespace detail

/// Exhaustive exact dot-product nearest passage; ties go to the smaller id.
inline std::string exact_nearest_id(const EmbeddingMatrix& passages, std::span<const float> q) {
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < passages.n; ++i) {
    const double s = dot(q, passages.row(i));
    if (i == 0 || s > best_score || (s == best_score && passages.ids[i] < passages.ids[best])) {
      best = i;
      best_score = s;
    }
  }
  return passages.ids[best];
}

/// Clustered corpus with planted MIPS structure. Each cluster is one article:
/// a unit-norm center (uniform in [-1,1]^d, then normalized); passage i
/// belongs to cluster i mod n_clusters and is the center plus N(0, sigma^2)
/// noise. Queries are noisy copies of passages drawn from answer-bearing
/// articles. Output depends only on the spec.
inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n == 0) throw InvalidArgument("synthetic corpus needs n >= 1");
  if (spec.d == 0) throw InvalidArgument("synthetic corpus needs d >= 1");
  if (spec.n_clusters == 0) throw InvalidArgument("synthetic corpus needs n_clusters >= 1");
  if (spec.n_clusters > spec.n) {
    throw InvalidArgument("n_clusters (" + std::to_string(spec.n_clusters) +
                          ") must not exceed n (" + std::to_string(spec.n) + ")");
  }
  if (!(spec.noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be non-negative");
  if (!(spec.answer_fraction >= 0.0 && spec.answer_fraction <= 1.0)) {
    throw InvalidArgument("answer_fraction must lie in [0, 1]");
  }
  if (!(spec.title_noise >= 0.0 && spec.title_noise <= 1.0)) {
    throw InvalidArgument("title_noise must lie in [0, 1]");
  }

  Rng rng(spec.seed);
  const std::size_t d = spec.d;
  const std::size_t k = spec.n_clusters;

  std::vector<float> centers(k * d);
  for (std::size_t c = 0; c < k; ++c) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double v = rng.uniform(-1.0, 1.0);
        centers[c * d + j] = static_cast<float>(v);
        norm2 += v * v;
      }
    } while (norm2 < 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < d; ++j) {
      centers[c * d + j] = static_cast<float>(centers[c * d + j] * inv);
    }
  }

  std::vector<std::size_t> article_order(k);
  std::iota(article_order.begin(), article_order.end(), std::size_t{0});
  for (std::size_t i = k; i > 1; --i) std::swap(article_order[i - 1], article_order[rng.below(i)]);
  const auto n_answer = static_cast<std::size_t>(std::llround(spec.answer_fraction * static_cast<double>(k)));
  std::vector<bool> has_answer(k, false);
  for (std::size_t i = 0; i < n_answer; ++i) has_answer[article_order[i]] = true;

  SyntheticCorpus out;
  auto& P = out.passage_vectors;
  P.n = spec.n;
  P.d = d;
  P.data.resize(spec.n * d);
  P.ids.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t c = i % k;
    P.ids.push_back(detail::padded_id('p', i, spec.n));
    for (std::size_t j = 0; j < d; ++j) {
      P.data[i * d + j] =
          static_cast<float>(centers[c * d + j] + spec.noise_sigma * rng.normal());
    }
  }

  std::vector<std::size_t> query_sources;
  for (std::size_t i = 0; i < spec.n; ++i) {
    if (n_answer == 0 || has_answer[i % k]) query_sources.push_back(i);
  }

  auto& Q = out.query_vectors;
  Q.n = spec.n_queries;
  Q.d = d;
  Q.data.resize(spec.n_queries * d);
  std::vector<std::size_t> query_article(spec.n_queries);
  for (std::size_t qi = 0; qi < spec.n_queries; ++qi) {
    const std::size_t src = query_sources[rng.below(query_sources.size())];
    query_article[qi] = src % k;
    Q.ids.push_back(detail::padded_id('q', qi, spec.n_queries));
    for (std::size_t j = 0; j < d; ++j) {
      Q.data[qi * d + j] = static_cast<float>(P.data[src * d + j] + spec.noise_sigma * rng.normal());
    }
  }

  for (std::size_t qi = 0; qi < Q.n; ++qi) {
    out.ground_truth.push_back({Q.ids[qi], exact_nearest_id(P, Q.row(qi))});
  }

  // Text side. Answer-bearing articles lean on topical vocabulary, the rest
  // on maintenance vocabulary, with title_noise crossover so the filter has to learn.
  std::vector<std::string> article_ids(k), titles(k), answers(k);
  std::vector<std::vector<std::string>> categories(k);
  for (std::size_t c = 0; c < k; ++c) {
    article_ids[c] = detail::padded_id('a', c, k);
    answers[c] = "ans" + article_ids[c].substr(1);
    auto word = [&]() {
      const bool topical = (rng.uniform() < 1.0 - spec.title_noise) == has_answer[c];
      return std::string(topical ? detail::pick(rng, detail::kTopicalWords)
                                 : detail::pick(rng, detail::kMaintenanceWords));
    };
    auto category = [&]() {
      const bool topical = (rng.uniform() < 1.0 - spec.title_noise) == has_answer[c];
      return std::string(topical ? detail::pick(rng, detail::kTopicalCategories)
                                 : detail::pick(rng, detail::kMaintenanceCategories));
    };
    titles[c] = word() + " " + word() + " " + article_ids[c];
    categories[c] = {category(), category()};
    if (has_answer[c]) out.answer_article_ids.push_back(article_ids[c]);
  }

  out.passages.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t c = i % k;
    std::string text = titles[c] + " passage " + std::to_string(i / k) + ".";
    for (int w = 0; w < 12; ++w) {
      text += ' ';
      text += detail::pick(rng, detail::kFillerWords);
    }
    if (has_answer[c]) text += " The key term is " + answers[c] + ".";
    out.passages.push_back({P.ids[i], article_ids[c], titles[c], std::move(text), categories[c]});
  }

  for (std::size_t qi = 0; qi < Q.n; ++qi) {
    const std::size_t c = query_article[qi];
    out.queries.push_back({Q.ids[qi], "What is the key term of " + titles[c] + "?", {answers[c]}});
  }
  return out;
}

inline std::string ground_truth_to_jsonl(std::span<const GroundTruth> gt) {
  std::string out;
  for (const auto& g : gt) {
    out += nlohmann::json{{"query_id", g.query_id}, {"passage_id", g.passage_id}}.dump();
    out += '\n';
  }
  return out;
}

}  // namespace slimdex
