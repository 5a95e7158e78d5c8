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

// Dimension reduction: PCA fitted on already-trained embeddings, and the
// layer-style normalization optionally applied to the reduced vectors.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "slimdex/common.hpp"
#include "slimdex/corpus.hpp"

namespace slimdex {

/// Mean plus d_R orthonormal principal directions of the training set.
struct PCAModel {
  std::size_t d = 0;
  std::size_t d_r = 0;
  std::vector<float> mean;         // d
  std::vector<float> components;   // d_r x d, row-major, orthonormal rows
  std::vector<float> eigenvalues;  // d_r, non-increasing, >= 0

  std::span<const float> component(std::size_t r) const {
    return {components.data() + r * d, d};
  }

  friend bool operator==(const PCAModel&, const PCAModel&) = default;
};

/// Fits PCA by eigendecomposition of the population covariance (1/n). Each
/// component is oriented so its largest-magnitude entry is positive.
/// Rank-deficient data yields zero eigenvalues.
inline PCAModel fit_pca(const EmbeddingMatrix& X, std::size_t d_r) {
  if (X.n < 2) throw InvalidArgument("fit_pca needs at least 2 vectors, got " + std::to_string(X.n));
  if (d_r < 1 || d_r > X.d) {
    throw InvalidArgument("fit_pca: d_R must lie in [1, " + std::to_string(X.d) + "], got " +
                          std::to_string(d_r));
  }
  const std::size_t d = X.d;
  const auto dd = static_cast<Eigen::Index>(d);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dd);
  for (std::size_t i = 0; i < X.n; ++i) {
    auto r = X.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[static_cast<Eigen::Index>(j)] += r[j];
  }
  mean /= static_cast<double>(X.n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dd, dd);
  Eigen::VectorXd centered(dd);
  for (std::size_t i = 0; i < X.n; ++i) {
    auto r = X.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      centered[static_cast<Eigen::Index>(j)] = r[j] - mean[static_cast<Eigen::Index>(j)];
    }
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(X.n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigensolver failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const Eigen::MatrixXd& evecs = solver.eigenvectors();

  PCAModel m;
  m.d = d;
  m.d_r = d_r;
  m.mean.resize(d);
  for (std::size_t j = 0; j < d; ++j) m.mean[j] = static_cast<float>(mean[static_cast<Eigen::Index>(j)]);
  m.components.resize(d_r * d);
  m.eigenvalues.resize(d_r);
  for (std::size_t r = 0; r < d_r; ++r) {
    const Eigen::Index col = dd - 1 - static_cast<Eigen::Index>(r);
    Eigen::VectorXd v = evecs.col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    for (std::size_t j = 0; j < d; ++j) {
      m.components[r * d + j] = static_cast<float>(v[static_cast<Eigen::Index>(j)]);
    }
    m.eigenvalues[r] = static_cast<float>(std::max(0.0, evals[col]));
  }
  return m;
}

/// Projects one vector: out = components * (x - mean).
inline void project(const PCAModel& m, std::span<const float> x, std::span<float> out) {
  for (std::size_t r = 0; r < m.d_r; ++r) {
    auto c = m.component(r);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.d; ++j) {
      acc += static_cast<double>(c[j]) * (static_cast<double>(x[j]) - m.mean[j]);
    }
    out[r] = static_cast<float>(acc);
  }
}

inline EmbeddingMatrix apply_pca(const PCAModel& m, const EmbeddingMatrix& X) {
  if (X.d != m.d) {
    throw InvalidArgument("apply_pca: input dimension " + std::to_string(X.d) +
                          " != model dimension " + std::to_string(m.d));
  }
  EmbeddingMatrix Y;
  Y.n = X.n;
  Y.d = m.d_r;
  Y.ids = X.ids;
  Y.data.resize(X.n * m.d_r);
  for (std::size_t i = 0; i < X.n; ++i) project(m, X.row(i), Y.row(i));
  return Y;
}

/// mean^T + components^T * y
inline std::vector<float> reconstruct(const PCAModel& m, std::span<const float> y) {
  std::vector<float> x(m.d);
  for (std::size_t j = 0; j < m.d; ++j) {
    double acc = m.mean[j];
    for (std::size_t r = 0; r < m.d_r; ++r) acc += static_cast<double>(m.components[r * m.d + j]) * y[r];
    x[j] = static_cast<float>(acc);
  }
  return x;
}

struct NormalizationParams {
  std::vector<float> gain;  // empty means all ones
  std::vector<float> bias;  // empty means all zeros
  double epsilon = 1e-5;

  static NormalizationParams identity(std::size_t dim, double epsilon = 1e-5) {
    return {std::vector<float>(dim, 1.0F), std::vector<float>(dim, 0.0F), epsilon};
  }

  friend bool operator==(const NormalizationParams&, const NormalizationParams&) = default;
};

/// out_i = gain_i * (y_i - mean(y)) / sqrt(var(y) + eps) + bias_i, with the
/// population variance.
inline std::vector<float> layer_normalize(std::span<const float> y, const NormalizationParams& p) {
  if (y.empty()) throw InvalidArgument("layer_normalize: empty vector");
  if (!(p.epsilon > 0.0)) throw InvalidArgument("layer_normalize: epsilon must be positive");
  if (!p.gain.empty() && p.gain.size() != y.size()) throw InvalidArgument("layer_normalize: gain size mismatch");
  if (!p.bias.empty() && p.bias.size() != y.size()) throw InvalidArgument("layer_normalize: bias size mismatch");

  const auto n = static_cast<double>(y.size());
  double mean = 0.0;
  for (float v : y) mean += v;
  mean /= n;
  double var = 0.0;
  for (float v : y) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + p.epsilon);

  std::vector<float> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double g = p.gain.empty() ? 1.0 : p.gain[i];
    const double b = p.bias.empty() ? 0.0 : p.bias[i];
    out[i] = static_cast<float>(g * (y[i] - mean) * inv + b);
  }
  return out;
}

inline void layer_normalize_rows(EmbeddingMatrix& X, const NormalizationParams& p) {
  for (std::size_t i = 0; i < X.n; ++i) {
    auto r = X.row(i);
    auto normed = layer_normalize(r, p);
    std::copy(normed.begin(), normed.end(), r.begin());
  }
}

}  // namespace slimdex
