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

// Sealed maximum-inner-product index in one of three storage modes:
//   flat32  n * d_R * 4 bytes, exact scores
//   flat16  n * d_R * 2 bytes, half-precision storage widened at query time
//   pq      n * ceil(n_v * n_b / 8) bytes + codebook, ADC scores
// An optional PCA model (and layer normalization) is fitted on the passages
// at build time and applied to every query before scoring.
//
// File layout (little-endian):
//   "PQIX" | version u32 | mode u8 | d_original u32 | d_R u32 | flags u8
//   | n u64 | n_v u32 | n_b u8
//   | [pca: mean d f32, components d_R*d f32, eigenvalues d_R f32]   flags & 1
//   | [norm: gain d_R f32, bias d_R f32, epsilon f64]                 flags & 2
//   | ids (u32 length + UTF-8 each)
//   | payload: flat32 f32 | flat16 u16 | pq codebook f32 then packed codes
//   | checksum u64 = FNV-1a 64 of every preceding byte

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "json.hpp"
#include "slimdex/binary_io.hpp"
#include "slimdex/common.hpp"
#include "slimdex/corpus.hpp"
#include "slimdex/half.hpp"
#include "slimdex/pca.hpp"
#include "slimdex/pq.hpp"

namespace slimdex {

enum class StorageMode : std::uint8_t { kFlat32 = 0, kFlat16 = 1, kPQ = 2 };

inline std::string_view to_string(StorageMode m) {
  switch (m) {
    case StorageMode::kFlat32: return "flat32";
    case StorageMode::kFlat16: return "flat16";
    case StorageMode::kPQ: return "pq";
  }
  return "unknown";
}

inline StorageMode parse_storage_mode(std::string_view s) {
  if (s == "flat32") return StorageMode::kFlat32;
  if (s == "flat16") return StorageMode::kFlat16;
  if (s == "pq") return StorageMode::kPQ;
  throw InvalidArgument("unknown storage mode '" + std::string(s) + "' (expected flat32, flat16 or pq)");
}

struct IndexConfig {
  StorageMode mode = StorageMode::kFlat32;
  std::optional<std::size_t> d_r;  // PCA target dimension; absent = no PCA
  std::size_t n_v = 0;             // PQ only
  std::size_t n_b = 0;             // PQ only
  std::uint64_t seed = 0;
  bool normalize = false;
  PQTrainOptions pq_options;

  /// Throws InvalidArgument on inconsistent settings for input dimension d.
  void validate(std::size_t d) const {
    const std::size_t dr = d_r.value_or(d);
    if (d_r && (*d_r < 1 || *d_r > d)) {
      throw InvalidArgument("d_R must lie in [1, " + std::to_string(d) + "], got " + std::to_string(*d_r));
    }
    if (mode == StorageMode::kPQ) {
      if (n_v == 0 || n_b == 0) throw InvalidArgument("pq mode requires n_v and n_b");
      validate_pq_params(dr, n_v, n_b);
    } else if (n_v != 0 || n_b != 0) {
      throw InvalidArgument("n_v/n_b are only valid with pq mode");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"mode", std::string(to_string(mode))},
                        {"n_v", n_v},
                        {"n_b", n_b},
                        {"seed", seed},
                        {"normalize", normalize}};
    j["d_r"] = d_r ? nlohmann::json(*d_r) : nlohmann::json(nullptr);
    return j;
  }
};

struct SizeReport {
  std::uint64_t total_bytes = 0;
  std::map<std::string, std::uint64_t> breakdown;

  friend bool operator==(const SizeReport&, const SizeReport&) = default;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["total_bytes"] = total_bytes;
    j["breakdown"] = breakdown;
    return j;
  }
};

struct PayloadBytes {
  std::uint64_t vectors = 0;   // flat vectors or PQ codes
  std::uint64_t codebook = 0;  // PQ only
};

/// Payload size from the storage parameters alone; no index needed.
constexpr PayloadBytes payload_bytes(StorageMode mode, std::uint64_t n, std::uint64_t d_r,
                                     std::uint64_t n_v = 0, std::uint64_t n_b = 0) {
  switch (mode) {
    case StorageMode::kFlat32: return {n * d_r * 4, 0};
    case StorageMode::kFlat16: return {n * d_r * 2, 0};
    case StorageMode::kPQ:
      return {n * ((n_v * n_b + 7) / 8), n_v * (std::uint64_t{1} << n_b) * (n_v == 0 ? 0 : d_r / n_v) * 4};
  }
  return {};
}

inline constexpr std::uint32_t kIndexFormatVersion = 1;
inline constexpr std::size_t kIndexHeaderBytes = 4 + 4 + 1 + 4 + 4 + 1 + 8 + 4 + 1;
inline constexpr std::uint8_t kFlagPCA = 1;
inline constexpr std::uint8_t kFlagNorm = 2;

namespace detail {

inline const std::array<float, 65536>& half_table() {
  static const auto table = [] {
    std::array<float, 65536> t{};
    for (std::uint32_t h = 0; h < 65536; ++h) t[h] = half_bits_to_float(static_cast<std::uint16_t>(h));
    return t;
  }();
  return table;
}

}  // namespace detail

class IndexArtifact {
 public:
  struct PQPayload {
    PQCodebook codebook;
    PQCodes codes;
    friend bool operator==(const PQPayload&, const PQPayload&) = default;
  };
  using Payload = std::variant<std::vector<float>, std::vector<std::uint16_t>, PQPayload>;

  /// Optional PCA -> optional layer normalization per row -> storage encoding.
  static IndexArtifact build(const EmbeddingMatrix& X, const IndexConfig& config) {
    X.validate();
    config.validate(X.d);

    IndexArtifact ix;
    ix.config_ = config;
    ix.d_original_ = X.d;
    ix.d_r_ = config.d_r.value_or(X.d);
    ix.ids_ = X.ids;

    EmbeddingMatrix Y;
    const EmbeddingMatrix* stored = &X;
    if (config.d_r) {
      ix.pca_ = fit_pca(X, *config.d_r);
      Y = apply_pca(*ix.pca_, X);
      stored = &Y;
    }
    if (config.normalize) {
      ix.norm_ = NormalizationParams::identity(ix.d_r_);
      if (stored == &X) {
        Y = X;
        stored = &Y;
      }
      layer_normalize_rows(Y, *ix.norm_);
    }

    switch (config.mode) {
      case StorageMode::kFlat32: ix.payload_ = stored->data; break;
      case StorageMode::kFlat16: ix.payload_ = cast_f16(stored->data); break;
      case StorageMode::kPQ: {
        PQPayload p;
        p.codebook = pq_train(*stored, config.n_v, config.n_b, config.seed, config.pq_options);
        p.codes = pq_encode(p.codebook, *stored);
        ix.payload_ = std::move(p);
        break;
      }
    }
    return ix;
  }

  StorageMode mode() const { return config_.mode; }
  const IndexConfig& config() const { return config_; }
  std::size_t size() const { return ids_.size(); }
  std::size_t d_original() const { return d_original_; }
  std::size_t d_r() const { return d_r_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::optional<PCAModel>& pca() const { return pca_; }
  const std::optional<NormalizationParams>& norm() const { return norm_; }
  const Payload& payload() const { return payload_; }

  /// Maps a d_original query into the stored space (PCA, then normalization).
  std::vector<float> transform_query(std::span<const float> q) const {
    if (q.size() != d_original_) {
      throw InvalidArgument("query dimension " + std::to_string(q.size()) + " != index dimension " +
                            std::to_string(d_original_));
    }
    std::vector<float> out(q.begin(), q.end());
    if (pca_) {
      out.assign(d_r_, 0.0F);
      project(*pca_, q, out);
    }
    if (norm_) out = layer_normalize(out, *norm_);
    return out;
  }

  /// Scores every stored passage against q (d_original coordinates).
  std::vector<double> score_all(std::span<const float> q) const {
    const auto qt = transform_query(q);
    const std::span<const float> qs(qt);
    const std::size_t n = ids_.size();
    std::vector<double> scores(n);
    if (const auto* flat = std::get_if<std::vector<float>>(&payload_)) {
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = dot(qs, std::span<const float>(flat->data() + i * d_r_, d_r_));
      }
    } else if (const auto* half = std::get_if<std::vector<std::uint16_t>>(&payload_)) {
      const auto& table = detail::half_table();
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t* row = half->data() + i * d_r_;
        double acc = 0.0;
        for (std::size_t j = 0; j < d_r_; ++j) acc += static_cast<double>(qs[j]) * table[row[j]];
        scores[i] = acc;
      }
    } else {
      const auto& p = std::get<PQPayload>(payload_);
      const auto table = adc_score_table(p.codebook, qs);
      for (std::size_t i = 0; i < n; ++i) scores[i] = adc_score(table, p.codebook.ksub(), p.codes.row(i));
    }
    return scores;
  }

  /// Top-k by score, descending; ties go to the smaller id. k > n returns all.
  Ranking search(std::span<const float> q, std::size_t k) const {
    if (k == 0) throw InvalidArgument("search: k must be >= 1");
    return rank_top_k(score_all(q), ids_, k);
  }

  SizeReport size_report() const {
    SizeReport r;
    r.breakdown["header"] = kIndexHeaderBytes;
    if (pca_) r.breakdown["pca"] = 4ULL * (d_original_ + d_r_ * d_original_ + d_r_);
    if (norm_) r.breakdown["norm"] = 4ULL * 2 * d_r_ + 8;
    std::uint64_t id_bytes = 0;
    for (const auto& id : ids_) id_bytes += 4 + id.size();
    r.breakdown["ids"] = id_bytes;
    const auto pb = payload_bytes(config_.mode, ids_.size(), d_r_, config_.n_v, config_.n_b);
    if (config_.mode == StorageMode::kPQ) {
      r.breakdown["codes"] = pb.vectors;
      r.breakdown["codebook"] = pb.codebook;
    } else {
      r.breakdown["vectors"] = pb.vectors;
    }
    r.breakdown["checksum"] = 8;
    for (const auto& [_, bytes] : r.breakdown) r.total_bytes += bytes;
    return r;
  }

  std::vector<std::uint8_t> serialize() const {
    io::ByteWriter w;
    w.raw("PQIX");
    w.u32(kIndexFormatVersion);
    w.u8(static_cast<std::uint8_t>(config_.mode));
    w.u32(static_cast<std::uint32_t>(d_original_));
    w.u32(static_cast<std::uint32_t>(d_r_));
    w.u8(static_cast<std::uint8_t>((pca_ ? kFlagPCA : 0) | (norm_ ? kFlagNorm : 0)));
    w.u64(ids_.size());
    w.u32(static_cast<std::uint32_t>(config_.n_v));
    w.u8(static_cast<std::uint8_t>(config_.n_b));
    if (pca_) {
      for (float v : pca_->mean) w.f32(v);
      for (float v : pca_->components) w.f32(v);
      for (float v : pca_->eigenvalues) w.f32(v);
    }
    if (norm_) {
      for (std::size_t i = 0; i < d_r_; ++i) w.f32(norm_->gain.empty() ? 1.0F : norm_->gain[i]);
      for (std::size_t i = 0; i < d_r_; ++i) w.f32(norm_->bias.empty() ? 0.0F : norm_->bias[i]);
      w.f64(norm_->epsilon);
    }
    for (const auto& id : ids_) w.str(id);
    if (const auto* flat = std::get_if<std::vector<float>>(&payload_)) {
      for (float v : *flat) w.f32(v);
    } else if (const auto* half = std::get_if<std::vector<std::uint16_t>>(&payload_)) {
      for (std::uint16_t v : *half) w.u16(v);
    } else {
      const auto& p = std::get<PQPayload>(payload_);
      for (float v : p.codebook.centroids) w.f32(v);
      w.bytes(pack_codes(p.codes));
    }
    Fnv1a64 h;
    h.update(w.buffer());
    w.u64(h.digest());
    return w.take();
  }

  static IndexArtifact deserialize(std::span<const std::uint8_t> bytes) {
    io::ByteReader head(bytes);
    auto magic = head.bytes(4, "magic");
    if (std::string(magic.begin(), magic.end()) != "PQIX") head.fail("bad magic (expected PQIX)");
    if (const auto version = head.u32(); version != kIndexFormatVersion) {
      head.fail("unsupported index format version " + std::to_string(version));
    }
    if (bytes.size() < kIndexHeaderBytes + 8) {
      throw FormatError("truncated index: " + std::to_string(bytes.size()) + " bytes");
    }
    const auto body = bytes.first(bytes.size() - 8);
    {
      io::ByteReader tail(bytes.subspan(bytes.size() - 8));
      Fnv1a64 h;
      h.update(body);
      if (tail.u64() != h.digest()) throw FormatError("index checksum mismatch (corrupt or truncated file)");
    }

    io::ByteReader r(body);
    r.skip(8, "magic and version");
    IndexArtifact ix;
    const std::uint8_t mode = r.u8();
    if (mode > 2) r.fail("unknown storage mode " + std::to_string(mode));
    ix.config_.mode = static_cast<StorageMode>(mode);
    ix.d_original_ = r.u32();
    ix.d_r_ = r.u32();
    const std::uint8_t flags = r.u8();
    const std::uint64_t n = r.u64();
    ix.config_.n_v = r.u32();
    ix.config_.n_b = r.u8();
    if (ix.d_original_ == 0 || ix.d_r_ == 0 || ix.d_r_ > ix.d_original_) r.fail("invalid dimensions");
    if ((flags & kFlagPCA) == 0 && ix.d_r_ != ix.d_original_) r.fail("d_R differs from d without PCA block");
    if (flags & kFlagPCA) ix.config_.d_r = ix.d_r_;
    ix.config_.normalize = (flags & kFlagNorm) != 0;
    try {
      ix.config_.validate(ix.d_original_);
    } catch (const InvalidArgument& e) {
      r.fail(std::string("inconsistent header: ") + e.what());
    }

    auto read_floats = [&r](std::size_t count, std::string_view what) {
      r.require(count * 4, what);
      std::vector<float> v(count);
      for (auto& x : v) x = r.f32();
      return v;
    };
    if (flags & kFlagPCA) {
      PCAModel m;
      m.d = ix.d_original_;
      m.d_r = ix.d_r_;
      m.mean = read_floats(m.d, "pca mean");
      m.components = read_floats(m.d_r * m.d, "pca components");
      m.eigenvalues = read_floats(m.d_r, "pca eigenvalues");
      ix.pca_ = std::move(m);
    }
    if (flags & kFlagNorm) {
      NormalizationParams p;
      p.gain = read_floats(ix.d_r_, "norm gain");
      p.bias = read_floats(ix.d_r_, "norm bias");
      p.epsilon = r.f64();
      ix.norm_ = std::move(p);
    }
    if (n > r.remaining() / 4) r.fail("vector count exceeds file size");
    std::unordered_set<std::string> seen;
    ix.ids_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string id = r.str("id");
      if (!seen.insert(id).second) r.fail("duplicate id '" + id + "'");
      ix.ids_.push_back(std::move(id));
    }
    switch (ix.config_.mode) {
      case StorageMode::kFlat32: ix.payload_ = read_floats(n * ix.d_r_, "flat32 payload"); break;
      case StorageMode::kFlat16: {
        r.require(n * ix.d_r_ * 2, "flat16 payload");
        std::vector<std::uint16_t> v(n * ix.d_r_);
        for (auto& x : v) x = r.u16();
        ix.payload_ = std::move(v);
        break;
      }
      case StorageMode::kPQ: {
        PQPayload p;
        p.codebook.d = ix.d_r_;
        p.codebook.n_v = ix.config_.n_v;
        p.codebook.n_b = ix.config_.n_b;
        p.codebook.sub_dim = ix.d_r_ / ix.config_.n_v;
        p.codebook.centroids = read_floats(p.codebook.n_v * p.codebook.ksub() * p.codebook.sub_dim, "pq codebook");
        const std::size_t code_bytes = n * pq_code_bytes(p.codebook.n_v, p.codebook.n_b);
        p.codes.n = n;
        p.codes.n_v = p.codebook.n_v;
        p.codes.n_b = p.codebook.n_b;
        p.codes.codes = unpack_codes(r.bytes(code_bytes, "pq codes"), n, p.codes.n_v, p.codes.n_b);
        p.codes.ids = ix.ids_;
        ix.payload_ = std::move(p);
        break;
      }
    }
    if (r.remaining() != 0) r.fail("trailing bytes before checksum");
    return ix;
  }

 private:
  IndexConfig config_;
  std::size_t d_original_ = 0;
  std::size_t d_r_ = 0;
  std::optional<PCAModel> pca_;
  std::optional<NormalizationParams> norm_;
  std::vector<std::string> ids_;
  Payload payload_;
};

inline IndexArtifact build_index(const EmbeddingMatrix& X, const IndexConfig& config) {
  return IndexArtifact::build(X, config);
}

inline Ranking search(const IndexArtifact& ix, std::span<const float> q, std::size_t k) {
  return ix.search(q, k);
}

inline SizeReport index_size_bytes(const IndexArtifact& ix) { return ix.size_report(); }

inline void save_index(const IndexArtifact& ix, const std::filesystem::path& path) {
  io::write_file_atomic(path, ix.serialize());
}

inline IndexArtifact load_index(const std::filesystem::path& path) {
  auto bytes = io::read_file(path);
  try {
    return IndexArtifact::deserialize(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Full-precision exhaustive ranking; the reference every index is measured against.
inline Ranking exact_oracle_search(const EmbeddingMatrix& X, std::span<const float> q, std::size_t k) {
  if (q.size() != X.d) {
    throw InvalidArgument("query dimension " + std::to_string(q.size()) + " != corpus dimension " +
                          std::to_string(X.d));
  }
  std::vector<double> scores(X.n);
  for (std::size_t i = 0; i < X.n; ++i) scores[i] = dot(q, X.row(i));
  return rank_top_k(scores, X.ids, k);
}

}  // namespace slimdex
