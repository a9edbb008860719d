#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gmrfrec/common.hpp"
#include "gmrfrec/dense.hpp"
#include "gmrfrec/interactions.hpp"
#include "gmrfrec/preprocess.hpp"

namespace gmrfrec {

struct ScoredItem {
  std::uint32_t item;
  double score;
};

// Scores every item for one user from the user's observed interactions. The
// fold-in row is transformed exactly like a training row, pushed through the
// weight matrix, and the predictions are mapped back to the original value
// scale. Centering makes the transformed row dense, so the mean term is
// precomputed once per model and reused across users. The weight matrix is
// held by reference and must outlive the scorer; the stats are copied.
class Scorer {
 public:
  Scorer(const WeightMatrix& weights, PreprocessStats stats, bool center)
      : B_(&weights.B), stats_(std::move(stats)), center_(center) {
    if (static_cast<std::size_t>(stats_.mu.size()) != weights.m) {
      throw config_error("stats do not match weight matrix size");
    }
    if (center_) {
      const Vector mu_scaled = stats_.mu.cwiseQuotient(stats_.scale);
      mean_term_ = B_->transpose() * mu_scaled;
    }
  }

  Vector score(std::span<const InteractionMatrix::Entry> fold_in) const {
    const auto m = static_cast<Eigen::Index>(stats_.mu.size());
    Vector z = Vector::Zero(m);
    for (const auto& e : fold_in) z[e.item] = e.value / stats_.scale[e.item];

    Vector pred = B_->transpose() * z;
    if (center_) pred -= mean_term_;
    pred = pred.cwiseProduct(stats_.scale);
    if (center_) pred += stats_.mu;
    return pred;
  }

 private:
  const SparseMat* B_;
  PreprocessStats stats_;
  bool center_ = false;
  Vector mean_term_;
};

// Same transform as Scorer but for many users at once: the observed rows are
// assembled into one sparse matrix and pushed through B in a single product.
class BatchScorer {
 public:
  BatchScorer(const WeightMatrix& weights, PreprocessStats stats, bool center)
      : B_(&weights.B), stats_(std::move(stats)), center_(center) {
    if (static_cast<std::size_t>(stats_.mu.size()) != weights.m) {
      throw config_error("stats do not match weight matrix size");
    }
    if (center_) {
      const Vector mu_scaled = stats_.mu.cwiseQuotient(stats_.scale);
      mean_term_ = B_->transpose() * mu_scaled;
    }
  }

  // rows: one entry list per user; returns a dense users x items score matrix
  Matrix score(const std::vector<std::span<const InteractionMatrix::Entry>>& rows) const {
    const auto m = static_cast<Eigen::Index>(stats_.mu.size());
    Eigen::SparseMatrix<double, Eigen::RowMajor> Z(static_cast<Eigen::Index>(rows.size()), m);
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t u = 0; u < rows.size(); ++u) {
      for (const auto& e : rows[u]) {
        trips.emplace_back(static_cast<Eigen::Index>(u), e.item, e.value / stats_.scale[e.item]);
      }
    }
    Z.setFromTriplets(trips.begin(), trips.end());

    Matrix pred = Matrix(Z * *B_);
    if (center_) pred.rowwise() -= mean_term_.transpose();
    pred.array().rowwise() *= stats_.scale.transpose().array();
    if (center_) pred.rowwise() += stats_.mu.transpose();
    return pred;
  }

 private:
  const SparseMat* B_;
  PreprocessStats stats_;
  bool center_ = false;
  Vector mean_term_;
};

// Top n items by score, ties broken by item index; items listed in `exclude`
// are skipped (typically the user's own fold-in items).
inline std::vector<ScoredItem> top_n(const Vector& scores,
                                     std::span<const std::uint32_t> exclude, std::size_t n) {
  if (n < 1) throw config_error("recommendation count must be at least 1");

  std::vector<char> skip(static_cast<std::size_t>(scores.size()), 0);
  for (std::uint32_t e : exclude) skip[e] = 1;

  std::vector<ScoredItem> ranked;
  ranked.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!skip[static_cast<std::size_t>(i)]) {
      ranked.push_back({static_cast<std::uint32_t>(i), scores[i]});
    }
  }
  const std::size_t k = std::min(n, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    [](const ScoredItem& a, const ScoredItem& b) {
                      return a.score != b.score ? a.score > b.score : a.item < b.item;
                    });
  ranked.resize(k);
  return ranked;
}

inline std::vector<std::uint32_t> items_of(std::span<const InteractionMatrix::Entry> row) {
  std::vector<std::uint32_t> items;
  items.reserve(row.size());
  for (const auto& e : row) items.push_back(e.item);
  return items;
}

}  // namespace gmrfrec
