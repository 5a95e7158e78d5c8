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

// Article filter: a logistic-regression classifier over hashed title and
// category features, trained by self-training with mined negatives, used to
// keep only the articles most likely to help answer questions.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "slimdex/binary_io.hpp"
#include "slimdex/common.hpp"
#include "slimdex/corpus.hpp"

namespace slimdex {

/// Active feature indices (value 1 each), sorted and unique.
using SparseFeatures = std::vector<std::uint32_t>;

inline constexpr std::size_t kDefaultHashDim = std::size_t{1} << 20;

inline bool is_power_of_two(std::size_t x) { return x != 0 && (x & (x - 1)) == 0; }

/// Title tokens are the lowercase runs of ASCII alphanumerics (bytes >= 0x80
/// count as word characters so UTF-8 words stay whole).
inline std::vector<std::string> title_tokens(std::string_view title) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : title) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || u >= 0x80) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Hashing-trick features: each title token hashes as "t:<token>", each
/// category as "c:<lowercased category>", with seeded FNV-1a 64 masked to
/// hash_dim buckets.
inline SparseFeatures featurize(std::string_view title, std::span<const std::string> categories,
                                std::size_t hash_dim, std::uint64_t hash_seed) {
  if (!is_power_of_two(hash_dim)) throw InvalidArgument("hash_dim must be a power of two");
  const std::uint64_t mask = hash_dim - 1;
  SparseFeatures out;
  for (const auto& tok : title_tokens(title)) {
    out.push_back(static_cast<std::uint32_t>(fnv1a64("t:" + tok, hash_seed) & mask));
  }
  for (const auto& cat : categories) {
    if (cat.empty()) continue;
    out.push_back(static_cast<std::uint32_t>(fnv1a64("c:" + ascii_lower(cat), hash_seed) & mask));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct FilterModel {
  std::size_t hash_dim = kDefaultHashDim;
  std::uint64_t hash_seed = 0;
  std::vector<float> weights;  // hash_dim
  float bias = 0.0F;
  std::size_t rounds_trained = 0;

  /// Pre-sigmoid score.
  double margin(std::span<const std::uint32_t> features) const {
    double z = bias;
    for (auto f : features) z += weights[f];
    return z;
  }

  friend bool operator==(const FilterModel&, const FilterModel&) = default;
};

struct LogRegHyper {
  double l2 = 1e-4;
  double lr = 0.5;
  std::size_t epochs = 200;
};

namespace detail {

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// Minimizes mean logistic loss + (l2/2)||w||^2 (bias unregularized) by
/// full-batch gradient descent. A step that would raise the loss is halved
/// until it does not; training ends early when no step helps. When given,
/// `loss_history` receives the initial loss followed by the loss after each
/// epoch.
inline FilterModel train_logreg(std::span<const SparseFeatures> pos, std::span<const SparseFeatures> neg,
                                const LogRegHyper& hyper, std::size_t hash_dim, std::uint64_t hash_seed,
                                std::vector<double>* loss_history = nullptr) {
  if (pos.empty() || neg.empty()) throw InvalidArgument("train_logreg: both classes must be non-empty");
  if (!is_power_of_two(hash_dim)) throw InvalidArgument("hash_dim must be a power of two");

  // Work only on features that occur; every other weight stays at zero.
  std::vector<std::uint32_t> active;
  for (auto set : {pos, neg}) {
    for (const auto& f : set) active.insert(active.end(), f.begin(), f.end());
  }
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  for (auto f : active) {
    if (f >= hash_dim) throw InvalidArgument("train_logreg: feature index out of range");
  }
  auto local = [&](std::uint32_t f) {
    return static_cast<std::size_t>(std::lower_bound(active.begin(), active.end(), f) - active.begin());
  };

  struct Example {
    std::vector<std::size_t> feats;
    double label;
  };
  std::vector<Example> examples;
  examples.reserve(pos.size() + neg.size());
  for (const auto& f : pos) {
    Example e{{}, 1.0};
    for (auto x : f) e.feats.push_back(local(x));
    examples.push_back(std::move(e));
  }
  for (const auto& f : neg) {
    Example e{{}, 0.0};
    for (auto x : f) e.feats.push_back(local(x));
    examples.push_back(std::move(e));
  }
  const double inv_n = 1.0 / static_cast<double>(examples.size());

  std::vector<double> w(active.size(), 0.0);
  double b = 0.0;

  auto loss_at = [&](const std::vector<double>& ww, double bb) {
    double loss = 0.0;
    for (const auto& e : examples) {
      double z = bb;
      for (auto f : e.feats) z += ww[f];
      loss += e.label > 0.5 ? detail::softplus(-z) : detail::softplus(z);
    }
    double reg = 0.0;
    for (double v : ww) reg += v * v;
    return loss * inv_n + 0.5 * hyper.l2 * reg;
  };

  double loss = loss_at(w, b);
  if (loss_history) loss_history->assign(1, loss);

  std::vector<double> gw(w.size()), cand(w.size());
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (const auto& e : examples) {
      double z = b;
      for (auto f : e.feats) z += w[f];
      const double r = (detail::sigmoid(z) - e.label) * inv_n;
      gb += r;
      for (auto f : e.feats) gw[f] += r;
    }
    for (std::size_t i = 0; i < w.size(); ++i) gw[i] += hyper.l2 * w[i];

    double step = hyper.lr;
    bool moved = false;
    for (int attempt = 0; attempt < 40; ++attempt, step *= 0.5) {
      for (std::size_t i = 0; i < w.size(); ++i) cand[i] = w[i] - step * gw[i];
      const double cand_b = b - step * gb;
      const double cand_loss = loss_at(cand, cand_b);
      if (cand_loss <= loss) {
        w.swap(cand);
        b = cand_b;
        moved = cand_loss < loss;
        loss = cand_loss;
        break;
      }
    }
    if (loss_history) loss_history->push_back(loss);
    if (!moved) break;
  }

  FilterModel m;
  m.hash_dim = hash_dim;
  m.hash_seed = hash_seed;
  m.weights.assign(hash_dim, 0.0F);
  for (std::size_t i = 0; i < active.size(); ++i) m.weights[active[i]] = static_cast<float>(w[i]);
  m.bias = static_cast<float>(b);
  m.rounds_trained = 1;
  return m;
}

struct ArticleFeatures {
  std::string id;
  SparseFeatures features;
};

/// One entry per distinct article_id (title and categories of its first
/// passage), sorted by id.
inline std::vector<ArticleFeatures> article_features(std::span<const PassageRecord> passages,
                                                     std::size_t hash_dim, std::uint64_t hash_seed) {
  std::map<std::string, SparseFeatures> by_id;
  for (const auto& p : passages) {
    if (by_id.count(p.article_id)) continue;
    by_id.emplace(p.article_id, featurize(p.title, p.categories, hash_dim, hash_seed));
  }
  std::vector<ArticleFeatures> out;
  out.reserve(by_id.size());
  for (auto& [id, f] : by_id) out.push_back({id, std::move(f)});
  return out;
}

struct SelfTrainOptions {
  std::size_t rounds = 3;
  std::size_t negatives_per_round = 1000;
  std::uint64_t seed = 0;
  LogRegHyper hyper;
};

/// Per-round record of which articles served as negatives.
struct SelfTrainTrace {
  std::vector<std::vector<std::string>> negatives;
};

/// Self-training with hard-negative mining. Round 1 samples negatives
/// uniformly from the non-positive articles; each later round takes the
/// non-positives the previous model scores lowest (most confidently
/// negative, ties to the smaller id). Positives stay fixed.
inline FilterModel self_train(std::span<const ArticleFeatures> articles,
                              const std::set<std::string>& positive_ids, const SelfTrainOptions& opts,
                              std::size_t hash_dim, std::uint64_t hash_seed, SelfTrainTrace* trace = nullptr) {
  if (opts.rounds == 0) throw InvalidArgument("self_train: rounds must be >= 1");
  std::unordered_set<std::string_view> known;
  for (const auto& a : articles) known.insert(a.id);
  for (const auto& p : positive_ids) {
    if (!known.count(p)) throw InvalidArgument("self_train: positive id '" + p + "' is not an article");
  }

  std::vector<SparseFeatures> pos;
  std::vector<const ArticleFeatures*> pool;
  for (const auto& a : articles) {
    if (positive_ids.count(a.id)) {
      pos.push_back(a.features);
    } else {
      pool.push_back(&a);
    }
  }
  std::sort(pool.begin(), pool.end(), [](auto* x, auto* y) { return x->id < y->id; });
  const std::size_t m = std::min(opts.negatives_per_round, pool.size());

  Rng rng(opts.seed);
  std::vector<const ArticleFeatures*> chosen(pool);
  for (std::size_t i = 0; i < m; ++i) std::swap(chosen[i], chosen[i + rng.below(chosen.size() - i)]);
  chosen.resize(m);

  FilterModel model;
  for (std::size_t round = 1; round <= opts.rounds; ++round) {
    if (round > 1) {
      std::vector<std::pair<double, const ArticleFeatures*>> scored;
      scored.reserve(pool.size());
      for (auto* a : pool) scored.emplace_back(model.margin(a->features), a);
      std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first < y.first;
        return x.second->id < y.second->id;
      });
      chosen.clear();
      for (std::size_t i = 0; i < m; ++i) chosen.push_back(scored[i].second);
    }
    std::vector<SparseFeatures> neg;
    neg.reserve(chosen.size());
    for (auto* a : chosen) neg.push_back(a->features);
    if (trace) {
      std::vector<std::string> ids;
      for (auto* a : chosen) ids.push_back(a->id);
      trace->negatives.push_back(std::move(ids));
    }
    model = train_logreg(pos, neg, opts.hyper, hash_dim, hash_seed);
  }
  model.rounds_trained = opts.rounds;
  return model;
}

struct FilterDecision {
  std::string article_id;
  double score = 0.0;
  bool keep = false;
};

inline std::vector<FilterDecision> decide(const FilterModel& model, std::span<const ArticleFeatures> articles,
                                          double threshold) {
  std::vector<FilterDecision> out;
  out.reserve(articles.size());
  for (const auto& a : articles) {
    const double s = model.margin(a.features);
    out.push_back({a.id, s, s >= threshold});
  }
  return out;
}

/// The keep_count highest-margin article ids (ties to the smaller id), in
/// rank order. Results for smaller keep_count are prefixes of larger ones.
inline std::vector<std::string> filter_corpus(const FilterModel& model, std::span<const ArticleFeatures> articles,
                                              std::size_t keep_count) {
  if (keep_count > articles.size()) {
    throw InvalidArgument("filter_corpus: keep_count " + std::to_string(keep_count) + " exceeds " +
                          std::to_string(articles.size()) + " articles");
  }
  std::vector<std::pair<double, const std::string*>> scored;
  scored.reserve(articles.size());
  for (const auto& a : articles) scored.emplace_back(model.margin(a.features), &a.id);
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return *x.second < *y.second;
  });
  std::vector<std::string> out;
  out.reserve(keep_count);
  for (std::size_t i = 0; i < keep_count; ++i) out.push_back(*scored[i].second);
  return out;
}

/// Expands article-level decisions to passage ids (corpus order).
inline std::vector<std::string> passages_of_articles(std::span<const PassageRecord> passages,
                                                     std::span<const std::string> article_ids) {
  std::unordered_set<std::string_view> keep(article_ids.begin(), article_ids.end());
  std::vector<std::string> out;
  for (const auto& p : passages) {
    if (keep.count(p.article_id)) out.push_back(p.id);
  }
  return out;
}

/// Rows of X whose id is in `ids`, in X's order.
inline EmbeddingMatrix select_rows(const EmbeddingMatrix& X, std::span<const std::string> ids) {
  std::unordered_set<std::string_view> keep(ids.begin(), ids.end());
  EmbeddingMatrix out;
  out.d = X.d;
  for (std::size_t i = 0; i < X.n; ++i) {
    if (!keep.count(X.ids[i])) continue;
    out.ids.push_back(X.ids[i]);
    auto r = X.row(i);
    out.data.insert(out.data.end(), r.begin(), r.end());
  }
  out.n = out.ids.size();
  return out;
}

// Model file: one JSON header line, then hash_dim little-endian f32 weights.

inline std::vector<std::uint8_t> serialize_filter_model(const FilterModel& m) {
  nlohmann::json header = {{"format", "slimdex-filter"},
                           {"version", 1},
                           {"hash_dim", m.hash_dim},
                           {"hash_seed", m.hash_seed},
                           {"rounds", m.rounds_trained},
                           {"bias", m.bias}};
  io::ByteWriter w;
  w.raw(header.dump());
  w.u8('\n');
  for (float v : m.weights) w.f32(v);
  return w.take();
}

inline FilterModel parse_filter_model(std::span<const std::uint8_t> bytes) {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (nl == bytes.end()) throw FormatError("filter model: missing JSON header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(std::string(bytes.begin(), nl));
    FilterModel m;
    if (header.at("format").get<std::string>() != "slimdex-filter") throw FormatError("filter model: bad format tag");
    if (header.at("version").get<int>() != 1) throw FormatError("filter model: unsupported version");
    m.hash_dim = header.at("hash_dim").get<std::size_t>();
    m.hash_seed = header.at("hash_seed").get<std::uint64_t>();
    m.rounds_trained = header.at("rounds").get<std::size_t>();
    m.bias = header.at("bias").get<float>();
    if (!is_power_of_two(m.hash_dim)) throw FormatError("filter model: hash_dim must be a power of two");
    const auto body = bytes.subspan(static_cast<std::size_t>(nl - bytes.begin()) + 1);
    if (body.size() != m.hash_dim * 4) {
      throw FormatError("filter model: weights block has " + std::to_string(body.size()) + " bytes, expected " +
                        std::to_string(m.hash_dim * 4));
    }
    io::ByteReader r(body);
    m.weights.resize(m.hash_dim);
    for (auto& v : m.weights) {
      v = r.f32();
      if (!std::isfinite(v)) throw FormatError("filter model: non-finite weight");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("filter model: bad header: ") + e.what());
  }
}

inline void save_filter_model(const FilterModel& m, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_filter_model(m));
}

inline FilterModel load_filter_model(const std::filesystem::path& path) {
  return parse_filter_model(io::read_file(path));
}

}  // namespace slimdex
