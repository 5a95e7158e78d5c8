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

// Retrieval metrics (top-k answer accuracy, recall against exact search),
// size/accuracy sweeps with CSV output, and system size budgeting.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "slimdex/common.hpp"
#include "slimdex/corpus.hpp"
#include "slimdex/filter.hpp"
#include "slimdex/index.hpp"

namespace slimdex {

/// Bumped whenever the answer normalization rules change.
inline constexpr int kAnswerNormalizationVersion = 1;

/// Lowercase, drop ASCII punctuation, drop the whole words "a", "an",
/// "the", collapse whitespace.
inline std::string normalize_answer_text(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && std::ispunct(u)) continue;
    cleaned += (u < 0x80 && std::isspace(u)) ? ' ' : static_cast<char>(std::tolower(u));
  }
  std::string out;
  std::istringstream words(cleaned);
  std::string w;
  while (words >> w) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

namespace detail {

inline bool contains_tokens(std::string_view normalized_text, std::string_view normalized_answer) {
  if (normalized_answer.empty()) return false;
  std::string hay = " ";
  hay += normalized_text;
  hay += ' ';
  std::string needle = " ";
  needle += normalized_answer;
  needle += ' ';
  return hay.find(needle) != std::string::npos;
}

}  // namespace detail

/// True iff some normalized answer occurs in the normalized passage on token
/// boundaries.
inline bool answer_match(std::string_view passage_text, std::span<const std::string> answers) {
  const std::string text = normalize_answer_text(passage_text);
  for (const auto& a : answers) {
    if (detail::contains_tokens(text, normalize_answer_text(a))) return true;
  }
  return false;
}

/// Normalized passage text by id, built once per corpus.
class PassageTexts {
 public:
  explicit PassageTexts(std::span<const PassageRecord> passages) {
    for (const auto& p : passages) {
      normalized_.emplace(p.id, normalize_answer_text(p.text));
      article_.emplace(p.id, p.article_id);
    }
  }

  const std::string& normalized(const std::string& id) const {
    auto it = normalized_.find(id);
    if (it == normalized_.end()) throw FormatError("retrieved id '" + id + "' does not resolve to a passage");
    return it->second;
  }

  const std::string& article_of(const std::string& id) const {
    normalized(id);
    return article_.at(id);
  }

 private:
  std::unordered_map<std::string, std::string> normalized_;
  std::unordered_map<std::string, std::string> article_;
};

/// Rank (0-based) of the first answer-bearing passage per query, if any.
/// `results[i]` belongs to `queries[i]`.
inline std::vector<std::optional<std::size_t>> first_hit_ranks(std::span<const Ranking> results,
                                                               std::span<const QueryRecord> queries,
                                                               const PassageTexts& texts) {
  if (results.size() != queries.size()) throw InvalidArgument("first_hit_ranks: results/queries size mismatch");
  std::vector<std::optional<std::size_t>> out(results.size());
  for (std::size_t qi = 0; qi < results.size(); ++qi) {
    std::vector<std::string> answers;
    for (const auto& a : queries[qi].answers) answers.push_back(normalize_answer_text(a));
    for (std::size_t r = 0; r < results[qi].size(); ++r) {
      const auto& text = texts.normalized(results[qi][r].id);
      const bool hit = std::any_of(answers.begin(), answers.end(),
                                   [&](const std::string& a) { return detail::contains_tokens(text, a); });
      if (hit) {
        out[qi] = r;
        break;
      }
    }
  }
  return out;
}

inline double precision_at_k(std::span<const std::optional<std::size_t>> first_hits, std::size_t k) {
  if (first_hits.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& h : first_hits) {
    if (h && *h < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(first_hits.size());
}

/// Query vectors reordered to follow `queries`; every query needs a vector.
inline EmbeddingMatrix align_query_vectors(const EmbeddingMatrix& vectors, std::span<const QueryRecord> queries) {
  std::unordered_map<std::string_view, std::size_t> row_of;
  for (std::size_t i = 0; i < vectors.n; ++i) row_of.emplace(vectors.ids[i], i);
  EmbeddingMatrix out;
  out.d = vectors.d;
  out.n = queries.size();
  for (const auto& q : queries) {
    auto it = row_of.find(q.id);
    if (it == row_of.end()) throw FormatError("query '" + q.id + "' has no embedding");
    out.ids.push_back(q.id);
    auto r = vectors.row(it->second);
    out.data.insert(out.data.end(), r.begin(), r.end());
  }
  return out;
}

inline std::vector<Ranking> retrieve_all(const IndexArtifact& ix, const EmbeddingMatrix& query_vectors,
                                         std::size_t k) {
  std::vector<Ranking> out;
  out.reserve(query_vectors.n);
  for (std::size_t i = 0; i < query_vectors.n; ++i) out.push_back(ix.search(query_vectors.row(i), k));
  return out;
}

inline std::vector<Ranking> exact_retrieve_all(const EmbeddingMatrix& passages, const EmbeddingMatrix& query_vectors,
                                               std::size_t k) {
  std::vector<Ranking> out;
  out.reserve(query_vectors.n);
  for (std::size_t i = 0; i < query_vectors.n; ++i) out.push_back(exact_oracle_search(passages, query_vectors.row(i), k));
  return out;
}

/// Fraction of queries whose top-k retrieved passages contain a gold answer.
inline double precision_at_k(const IndexArtifact& ix, const EmbeddingMatrix& query_vectors,
                             std::span<const QueryRecord> queries, std::span<const PassageRecord> passages,
                             std::size_t k) {
  const auto aligned = align_query_vectors(query_vectors, queries);
  const auto results = retrieve_all(ix, aligned, k);
  const PassageTexts texts(passages);
  return precision_at_k(first_hit_ranks(results, queries, texts), k);
}

/// Mean over queries of |top-k(approx) ∩ top-k(oracle)| / k. When the
/// oracle holds fewer than k ids (tiny corpora) its size is the denominator.
inline double recall_vs_exact(std::span<const Ranking> approx, std::span<const Ranking> oracle, std::size_t k) {
  if (approx.size() != oracle.size()) throw InvalidArgument("recall_vs_exact: result count mismatch");
  if (approx.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t qi = 0; qi < approx.size(); ++qi) {
    const std::size_t ko = std::min(k, oracle[qi].size());
    if (ko == 0) continue;
    std::unordered_set<std::string_view> truth;
    for (std::size_t r = 0; r < ko; ++r) truth.insert(oracle[qi][r].id);
    std::size_t hit = 0;
    for (std::size_t r = 0; r < std::min(k, approx[qi].size()); ++r) hit += truth.count(approx[qi][r].id);
    total += static_cast<double>(hit) / static_cast<double>(ko);
  }
  return total / static_cast<double>(approx.size());
}

/// Articles owning a retrieved passage that contains the query's answer;
/// used as filter positives in place of a trained retriever's hits.
inline std::set<std::string> answer_bearing_articles(std::span<const Ranking> results,
                                                     std::span<const QueryRecord> queries,
                                                     const PassageTexts& texts) {
  std::set<std::string> out;
  for (std::size_t qi = 0; qi < results.size(); ++qi) {
    std::vector<std::string> answers;
    for (const auto& a : queries[qi].answers) answers.push_back(normalize_answer_text(a));
    for (const auto& hit : results[qi]) {
      const auto& text = texts.normalized(hit.id);
      if (std::any_of(answers.begin(), answers.end(),
                      [&](const std::string& a) { return detail::contains_tokens(text, a); })) {
        out.insert(texts.article_of(hit.id));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

inline constexpr std::array<std::size_t, 5> kReportedK = {1, 5, 10, 20, 100};

struct SweepConfig {
  StorageMode mode = StorageMode::kFlat32;
  std::optional<std::size_t> d_r;
  std::size_t n_v = 0;
  std::size_t n_b = 0;
  double keep_fraction = 1.0;
};

/// Storage settings for a bits-per-dimension budget: 32 -> flat32,
/// 16 -> flat16, otherwise PQ with code_bits-bit codes over sub-vectors of
/// code_bits / bits_per_dim coordinates.
inline SweepConfig config_for_bits(std::size_t dim, std::optional<std::size_t> d_r, std::size_t bits_per_dim,
                                   std::size_t code_bits = 8, double keep_fraction = 1.0) {
  SweepConfig c;
  c.d_r = d_r;
  c.keep_fraction = keep_fraction;
  if (bits_per_dim == 32) return c;
  if (bits_per_dim == 16) {
    c.mode = StorageMode::kFlat16;
    return c;
  }
  if (bits_per_dim == 0 || code_bits % bits_per_dim != 0) {
    throw InvalidArgument("bits per dimension " + std::to_string(bits_per_dim) + " is not reachable with " +
                          std::to_string(code_bits) + "-bit codes");
  }
  const std::size_t sub_dim = code_bits / bits_per_dim;
  const std::size_t dr = d_r.value_or(dim);
  if (dr % sub_dim != 0) {
    throw InvalidArgument("dimension " + std::to_string(dr) + " is not divisible by sub-vector size " +
                          std::to_string(sub_dim));
  }
  c.mode = StorageMode::kPQ;
  c.n_b = code_bits;
  c.n_v = dr / sub_dim;
  return c;
}

struct SweepRow {
  std::string mode;
  std::size_t d_r = 0;
  std::size_t n_v = 0;
  std::size_t n_b = 0;
  double bits_per_dim = 0.0;
  std::size_t passages_kept = 0;
  std::uint64_t index_bytes = 0;
  std::array<double, kReportedK.size()> p_at_k{};
  double recall_at_10 = 0.0;
  double wall_time_ms = 0.0;
  std::string error;  // non-empty: the configuration failed; metrics are unset

  double p_at(std::size_t k) const {
    for (std::size_t i = 0; i < kReportedK.size(); ++i) {
      if (kReportedK[i] == k) return p_at_k[i];
    }
    throw InvalidArgument("P@" + std::to_string(k) + " is not reported");
  }

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepCorpus {
  const EmbeddingMatrix* passage_vectors = nullptr;
  std::span<const PassageRecord> passages;
  const EmbeddingMatrix* query_vectors = nullptr;
  std::span<const QueryRecord> queries;
  /// Articles in filter-rank order; required when any keep_fraction < 1.
  std::span<const std::string> article_ranking;
};

struct SweepOptions {
  bool measure_time = false;
  PQTrainOptions pq_options;
};

namespace detail {

inline std::size_t distinct_articles(std::span<const PassageRecord> passages) {
  std::unordered_set<std::string_view> s;
  for (const auto& p : passages) s.insert(p.article_id);
  return s.size();
}

}  // namespace detail

/// Fills the metric fields of `row` for a built index: P@k over `queries`
/// and recall@10 against exact search over `stored` (the passages the index
/// was built from).
inline void measure_index(const IndexArtifact& ix, const EmbeddingMatrix& stored,
                          std::span<const PassageRecord> passages, const EmbeddingMatrix& query_vectors,
                          std::span<const QueryRecord> queries, SweepRow& row) {
  row.passages_kept = ix.size();
  row.index_bytes = ix.size_report().total_bytes;
  const auto aligned = align_query_vectors(query_vectors, queries);
  const auto results = retrieve_all(ix, aligned, kReportedK.back());
  const PassageTexts texts(passages);
  const auto hits = first_hit_ranks(results, queries, texts);
  for (std::size_t i = 0; i < kReportedK.size(); ++i) row.p_at_k[i] = precision_at_k(hits, kReportedK[i]);
  const auto oracle = exact_retrieve_all(stored, aligned, 10);
  row.recall_at_10 = recall_vs_exact(results, oracle, 10);
}

/// Configuration columns of a row describing `ix`.
inline SweepRow row_for_index(const IndexArtifact& ix) {
  SweepRow row;
  row.mode = std::string(to_string(ix.mode()));
  row.d_r = ix.d_r();
  row.n_v = ix.config().n_v;
  row.n_b = ix.config().n_b;
  row.bits_per_dim = ix.mode() == StorageMode::kFlat32   ? 32.0
                     : ix.mode() == StorageMode::kFlat16 ? 16.0
                                                         : static_cast<double>(row.n_v * row.n_b) /
                                                               static_cast<double>(row.d_r);
  return row;
}

/// Article ids of the top keep_fraction of `ranking`, as passage rows of P.
inline EmbeddingMatrix keep_top_articles(const EmbeddingMatrix& P, std::span<const PassageRecord> passages,
                                         std::span<const std::string> ranking, double keep_fraction) {
  if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) throw InvalidArgument("keep_fraction must lie in [0, 1]");
  const std::size_t n_articles = detail::distinct_articles(passages);
  if (ranking.size() != n_articles) {
    throw InvalidArgument("passage filtering needs a ranking of all " + std::to_string(n_articles) + " articles");
  }
  const auto keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(n_articles)));
  return select_rows(P, passages_of_articles(passages, ranking.first(keep)));
}

/// Evaluates one configuration. Passages are restricted to the top
/// keep_fraction of ranked articles first; recall is measured against exact
/// search over the same retained passages.
inline SweepRow evaluate_config(const SweepCorpus& corpus, const SweepConfig& cfg, std::uint64_t seed,
                                const SweepOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  const EmbeddingMatrix& P = *corpus.passage_vectors;

  EmbeddingMatrix kept_storage;
  const EmbeddingMatrix* kept = &P;
  if (cfg.keep_fraction < 1.0) {
    kept_storage = keep_top_articles(P, corpus.passages, corpus.article_ranking, cfg.keep_fraction);
    kept = &kept_storage;
  }
  if (kept->n == 0) throw InvalidArgument("no passages left after filtering");

  IndexConfig ic;
  ic.mode = cfg.mode;
  ic.d_r = cfg.d_r;
  ic.n_v = cfg.n_v;
  ic.n_b = cfg.n_b;
  ic.seed = seed;
  ic.pq_options = opts.pq_options;
  const IndexArtifact ix = build_index(*kept, ic);
  SweepRow row = row_for_index(ix);
  measure_index(ix, *kept, corpus.passages, *corpus.query_vectors, corpus.queries, row);

  if (opts.measure_time) {
    row.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

/// One row per configuration, sorted by (d_R, bits_per_dim, passages_kept).
/// A failing configuration yields a row with `error` set; the sweep goes on.
inline std::vector<SweepRow> run_sweep(const SweepCorpus& corpus, std::span<const SweepConfig> grid,
                                       std::uint64_t seed, const SweepOptions& opts = {}) {
  if (grid.empty()) throw InvalidArgument("run_sweep: empty grid");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const auto& cfg : grid) {
    try {
      rows.push_back(evaluate_config(corpus, cfg, seed, opts));
    } catch (const std::exception& e) {
      SweepRow r;
      r.mode = std::string(to_string(cfg.mode));
      r.d_r = cfg.d_r.value_or(corpus.passage_vectors->d);
      r.n_v = cfg.n_v;
      r.n_b = cfg.n_b;
      r.error = e.what();
      rows.push_back(std::move(r));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.d_r != b.d_r) return a.d_r < b.d_r;
    if (a.bits_per_dim != b.bits_per_dim) return a.bits_per_dim < b.bits_per_dim;
    return a.passages_kept < b.passages_kept;
  });
  return rows;
}

// CSV: header row, then one row per successful configuration. Reals use the
// shortest representation that parses back to the same double.

inline constexpr std::string_view kSweepCsvHeader =
    "mode,d_R,n_v,n_b,bits_per_dim,passages_kept,index_bytes,p_at_1,p_at_5,p_at_10,p_at_20,p_at_100,"
    "recall_at_10,wall_time_ms";

namespace detail {

inline std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw FormatError("CSV line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline std::string sweep_to_csv(std::span<const SweepRow> rows) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    out += r.mode + ',' + std::to_string(r.d_r) + ',' + std::to_string(r.n_v) + ',' + std::to_string(r.n_b) + ',' +
           detail::format_real(r.bits_per_dim) + ',' + std::to_string(r.passages_kept) + ',' +
           std::to_string(r.index_bytes);
    for (double p : r.p_at_k) out += ',' + detail::format_real(p);
    out += ',' + detail::format_real(r.recall_at_10) + ',' + detail::format_real(r.wall_time_ms) + '\n';
  }
  return out;
}

inline std::vector<SweepRow> parse_sweep_csv(std::string_view csv) {
  std::vector<SweepRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool header_seen = false;
  while (start < csv.size()) {
    std::size_t end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kSweepCsvHeader) throw FormatError("CSV: unexpected header");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t p = 0;
    while (true) {
      const std::size_t c = line.find(',', p);
      f.push_back(line.substr(p, c == std::string_view::npos ? std::string_view::npos : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    if (f.size() != 14) throw FormatError("CSV line " + std::to_string(line_no) + ": expected 14 fields");
    SweepRow r;
    r.mode = std::string(f[0]);
    r.d_r = detail::parse_number<std::size_t>(f[1], line_no);
    r.n_v = detail::parse_number<std::size_t>(f[2], line_no);
    r.n_b = detail::parse_number<std::size_t>(f[3], line_no);
    r.bits_per_dim = detail::parse_number<double>(f[4], line_no);
    r.passages_kept = detail::parse_number<std::size_t>(f[5], line_no);
    r.index_bytes = detail::parse_number<std::uint64_t>(f[6], line_no);
    for (std::size_t i = 0; i < r.p_at_k.size(); ++i) r.p_at_k[i] = detail::parse_number<double>(f[7 + i], line_no);
    r.recall_at_10 = detail::parse_number<double>(f[12], line_no);
    r.wall_time_ms = detail::parse_number<double>(f[13], line_no);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw FormatError("CSV: missing header row");
  return rows;
}

// ---------------------------------------------------------------------------
// System size budget

struct SizeComponent {
  std::string name;
  std::uint64_t bytes = 0;
};

struct SystemSizeReport {
  std::vector<SizeComponent> components;
  std::uint64_t total_bytes = 0;

  /// Fixed-width table with decimal gigabytes (1 GB = 1e9 bytes).
  std::string format() const {
    std::ostringstream os;
    std::size_t width = 5;
    for (const auto& c : components) width = std::max(width, c.name.size());
    auto line = [&](const std::string& name, std::uint64_t bytes) {
      char gb[32];
      std::snprintf(gb, sizeof(gb), "%.2f", static_cast<double>(bytes) / 1e9);
      os << name << std::string(width - name.size() + 2, ' ') << bytes << " bytes  (" << gb << " GB)\n";
    };
    for (const auto& c : components) line(c.name, c.bytes);
    line("total", total_bytes);
    return os.str();
  }
};

constexpr std::uint64_t parameter_bytes(std::uint64_t parameters, std::uint64_t bytes_per_parameter = 4) {
  return parameters * bytes_per_parameter;
}

inline SystemSizeReport system_size_report(std::vector<SizeComponent> components) {
  SystemSizeReport r;
  r.components = std::move(components);
  for (const auto& c : r.components) r.total_bytes += c.bytes;
  return r;
}

}  // namespace slimdex
