#pragma once

#include <cmath>
#include <cstdint>

#include "gmrfrec/common.hpp"
#include "gmrfrec/interactions.hpp"

namespace gmrfrec {

// Per-item scaling statistics. scale_i = std_i^alpha, forced to 1 when
// std_i == 0 so constant columns pass through unchanged.
struct PreprocessStats {
  Vector mu;
  Vector stddev;
  Vector scale;
  double alpha = 0.0;

  std::size_t m() const { return static_cast<std::size_t>(mu.size()); }
};

// Regularized Gram matrix S = (X'^T X' + lambda*I) / n, kept exactly
// symmetric. The pivot structure both solvers consume.
struct GramMatrix {
  Matrix S;
  double lambda = 0.0;
  std::size_t n_users = 0;

  std::size_t m() const { return static_cast<std::size_t>(S.rows()); }
};

inline PreprocessStats compute_stats(const InteractionMatrix& mat, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw config_error("alpha must lie in [0, 1]");
  if (mat.n_users() == 0 || mat.n_items() == 0) throw data_error("empty interaction matrix");

  const auto n = static_cast<double>(mat.n_users());
  const std::size_t m = mat.n_items();
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(m));
  Vector sumsq = Vector::Zero(static_cast<Eigen::Index>(m));
  for (std::uint32_t u = 0; u < mat.n_users(); ++u) {
    for (const auto& e : mat.row(u)) {
      sum[e.item] += e.value;
      sumsq[e.item] += e.value * e.value;
    }
  }

  PreprocessStats stats;
  stats.alpha = alpha;
  stats.mu = sum / n;
  // population variance; matches the 1/n normalization of the Gram matrix
  stats.stddev = (sumsq / n - stats.mu.cwiseProduct(stats.mu)).cwiseMax(0.0).cwiseSqrt();
  stats.scale = Vector::Ones(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < stats.stddev.size(); ++i) {
    if (stats.stddev[i] > 0.0) stats.scale[i] = std::pow(stats.stddev[i], alpha);
  }
  return stats;
}

// Dense X' with X'_ui = (X_ui - center*mu_i) / s_i. Small data only; the
// training pipeline never materializes this.
inline Matrix transform(const InteractionMatrix& mat, const PreprocessStats& stats, bool center) {
  if (stats.m() != mat.n_items()) {
    throw config_error("stats were computed for a different item universe");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(mat.n_users()),
                            static_cast<Eigen::Index>(mat.n_items()));
  for (std::uint32_t u = 0; u < mat.n_users(); ++u) {
    for (const auto& e : mat.row(u)) out(u, e.item) = e.value;
  }
  if (center) out.rowwise() -= stats.mu.transpose();
  out.array().rowwise() /= stats.scale.transpose().array();
  return out;
}

// S = (X'^T X' + lambda*I) / n from an already-transformed dense matrix.
inline GramMatrix gram(const Matrix& transformed, double lambda) {
  if (lambda < 0.0) throw config_error("lambda must be nonnegative");
  const Eigen::Index m = transformed.cols();
  const auto n = static_cast<double>(transformed.rows());
  Matrix S = transformed.transpose() * transformed;
  S.diagonal().array() += lambda;
  S /= n;
  S = ((S + S.transpose()) / 2.0).eval();
  return {std::move(S), lambda, static_cast<std::size_t>(transformed.rows())};
}

// Sparse-aware path: accumulates Z^T Z for the scaled-but-uncentered Z and
// applies the rank-one correction X'^T X' = Z^T Z - n * mu' mu'^T, where mu'
// is the column-mean vector of Z. Only the upper triangle is accumulated and
// then mirrored, so the result is symmetric by construction.
inline GramMatrix gram(const InteractionMatrix& mat, const PreprocessStats& stats, bool center,
                       double lambda) {
  if (lambda < 0.0) throw config_error("lambda must be nonnegative");
  if (stats.m() != mat.n_items()) {
    throw config_error("stats were computed for a different item universe");
  }
  const auto m = static_cast<Eigen::Index>(mat.n_items());
  const auto n = static_cast<double>(mat.n_users());
  Matrix S = Matrix::Zero(m, m);

  std::vector<InteractionMatrix::Entry> scaled;
  for (std::uint32_t u = 0; u < mat.n_users(); ++u) {
    auto r = mat.row(u);
    scaled.assign(r.begin(), r.end());
    for (auto& e : scaled) e.value /= stats.scale[e.item];
    for (std::size_t a = 0; a < scaled.size(); ++a) {
      for (std::size_t b = a; b < scaled.size(); ++b) {
        S(scaled[a].item, scaled[b].item) += scaled[a].value * scaled[b].value;
      }
    }
  }
  if (center) {
    const Vector mu_scaled = stats.mu.cwiseQuotient(stats.scale);
    S.triangularView<Eigen::Upper>() -= (n * mu_scaled) * mu_scaled.transpose();
  }
  S.diagonal().array() += lambda;
  S /= n;
  S.triangularView<Eigen::StrictlyLower>() = S.transpose();
  return {std::move(S), lambda, mat.n_users()};
}

}  // namespace gmrfrec
