#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmrfrec/common.hpp"
#include "gmrfrec/scoring.hpp"
#include "gmrfrec/split.hpp"

namespace gmrfrec {

// ranked: recommendation list, best first. relevant: sorted item indices.
inline double recall_at_k(std::span<const std::uint32_t> ranked,
                          std::span<const std::uint32_t> relevant, std::size_t k) {
  if (relevant.empty()) throw data_error("recall is undefined without relevant items");
  std::size_t hits = 0;
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t p = 0; p < depth; ++p) {
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(std::min(k, relevant.size()));
}

// Binary-relevance nDCG: a hit at 1-based position p contributes 1/log2(p+1),
// normalized by the best achievable prefix of min(k, |relevant|) hits.
inline double ndcg_at_k(std::span<const std::uint32_t> ranked,
                        std::span<const std::uint32_t> relevant, std::size_t k) {
  if (relevant.empty()) throw data_error("nDCG is undefined without relevant items");
  double dcg = 0.0;
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t p = 0; p < depth; ++p) {
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) {
      dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
  }
  double idcg = 0.0;
  const std::size_t best = std::min(k, relevant.size());
  for (std::size_t p = 0; p < best; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

struct MetricValue {
  std::string name;  // "recall" or "ndcg"
  std::size_t k = 0;
  double mean = 0.0;
  double stderr_ = 0.0;  // sample std / sqrt(n); 0 when n < 2
  std::size_t n_users = 0;
};

struct MetricReport {
  std::vector<MetricValue> values;
};

namespace detail {

inline MetricValue summarize(const std::string& name, std::size_t k,
                             const std::vector<double>& per_user) {
  MetricValue v;
  v.name = name;
  v.k = k;
  v.n_users = per_user.size();
  if (per_user.empty()) return v;
  double sum = 0.0;
  for (double x : per_user) sum += x;
  v.mean = sum / static_cast<double>(per_user.size());
  if (per_user.size() > 1) {
    double ss = 0.0;
    for (double x : per_user) ss += (x - v.mean) * (x - v.mean);
    const double sample_var = ss / static_cast<double>(per_user.size() - 1);
    v.stderr_ = std::sqrt(sample_var / static_cast<double>(per_user.size()));
  }
  return v;
}

}  // namespace detail

// Core evaluation over pre-assembled per-user lists, all in the weight
// matrix's item space: fold_in feeds the scorer and is excluded from the
// ranking, relevant (sorted) is what the ranking is judged against. Users are
// scored in chunks through the batch path.
inline MetricReport evaluate_lists(const std::vector<std::vector<InteractionMatrix::Entry>>& fold_in,
                                   const std::vector<std::vector<std::uint32_t>>& relevant,
                                   const WeightMatrix& weights, const PreprocessStats& stats,
                                   bool center, std::span<const std::size_t> recall_ks,
                                   std::span<const std::size_t> ndcg_ks) {
  if (fold_in.size() != relevant.size()) throw config_error("fold-in / relevant size mismatch");
  std::size_t kmax = 0;
  for (std::size_t k : recall_ks) kmax = std::max(kmax, k);
  for (std::size_t k : ndcg_ks) kmax = std::max(kmax, k);
  if (kmax == 0) throw config_error("no metric cutoffs requested");

  BatchScorer scorer(weights, stats, center);
  constexpr std::size_t chunk = 1024;

  std::vector<std::vector<double>> recall_vals(recall_ks.size()), ndcg_vals(ndcg_ks.size());
  std::vector<std::uint32_t> exclude, ranked;
  for (std::size_t base = 0; base < fold_in.size(); base += chunk) {
    const std::size_t count = std::min(chunk, fold_in.size() - base);
    std::vector<std::span<const InteractionMatrix::Entry>> rows;
    rows.reserve(count);
    for (std::size_t u = 0; u < count; ++u) rows.emplace_back(fold_in[base + u]);
    const Matrix scores = scorer.score(rows);

    for (std::size_t u = 0; u < count; ++u) {
      exclude.clear();
      for (const auto& e : fold_in[base + u]) exclude.push_back(e.item);
      const Vector user_scores = scores.row(static_cast<Eigen::Index>(u)).transpose();
      ranked.clear();
      for (const ScoredItem& s : top_n(user_scores, exclude, kmax)) ranked.push_back(s.item);

      for (std::size_t j = 0; j < recall_ks.size(); ++j) {
        recall_vals[j].push_back(recall_at_k(ranked, relevant[base + u], recall_ks[j]));
      }
      for (std::size_t j = 0; j < ndcg_ks.size(); ++j) {
        ndcg_vals[j].push_back(ndcg_at_k(ranked, relevant[base + u], ndcg_ks[j]));
      }
    }
  }

  MetricReport report;
  for (std::size_t j = 0; j < ndcg_ks.size(); ++j) {
    report.values.push_back(detail::summarize("ndcg", ndcg_ks[j], ndcg_vals[j]));
  }
  for (std::size_t j = 0; j < recall_ks.size(); ++j) {
    report.values.push_back(detail::summarize("recall", recall_ks[j], recall_vals[j]));
  }
  return report;
}

// Convenience wrapper for the common case where the model was trained on the
// same item universe as `mat`: fold-in values are looked up from the matrix
// and held-out items are the relevant sets.
inline MetricReport evaluate(const InteractionMatrix& mat,
                             const std::vector<HoldoutUser>& holdouts,
                             const WeightMatrix& weights, const PreprocessStats& stats,
                             bool center, std::span<const std::size_t> recall_ks,
                             std::span<const std::size_t> ndcg_ks) {
  std::vector<std::vector<InteractionMatrix::Entry>> fold_in(holdouts.size());
  std::vector<std::vector<std::uint32_t>> relevant(holdouts.size());
  for (std::size_t u = 0; u < holdouts.size(); ++u) {
    const HoldoutUser& h = holdouts[u];
    fold_in[u].reserve(h.fold_in.size());
    for (std::uint32_t item : h.fold_in) fold_in[u].push_back({item, mat.value_at(h.user, item)});
    relevant[u] = h.held_out;
  }
  return evaluate_lists(fold_in, relevant, weights, stats, center, recall_ks, ndcg_ks);
}

}  // namespace gmrfrec
