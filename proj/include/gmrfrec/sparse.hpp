#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "gmrfrec/common.hpp"
#include "gmrfrec/dense.hpp"
#include "gmrfrec/preprocess.hpp"

namespace gmrfrec {

struct Neighbor {
  std::uint32_t item;
  double weight;  // |S(item, column)|, always > 0
};

// Column-oriented thresholded support of the Gram matrix. After per-column
// capping the structure may be asymmetric; it is used as-is, column i's list
// defining N(i).
struct SparsityPattern {
  std::size_t m = 0;
  double target_density = 1.0;
  std::uint32_t cap = 1000;
  std::vector<std::vector<Neighbor>> columns;  // each sorted by item index

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& c : columns) n += c.size();
    return n;
  }
};

// One unit of work for the block solver. dependents (D) are the columns
// estimated by this block, conditioners (C) the rest of the neighborhood:
// D ∪ C = N(seed) ∪ {seed}, D ∩ C = ∅. dependents of different blocks may
// overlap; `covered` is the subset of D that this block removed from the
// worklist, and the covered sets partition the item universe.
struct Block {
  std::uint32_t seed = 0;
  std::vector<std::uint32_t> dependents;    // sorted, contains seed
  std::vector<std::uint32_t> conditioners;  // sorted
  std::vector<std::uint32_t> covered;       // sorted, nonempty, contains seed

  std::size_t size() const { return dependents.size() + conditioners.size(); }
};

struct BlockPlan {
  double r = 0.0;
  std::size_t m = 0;
  std::vector<Block> blocks;  // in seed order

  std::size_t n_seeds() const { return blocks.size(); }

  // histogram of submatrix sizes |D| + |C|, keyed by size
  std::map<std::size_t, std::size_t> size_histogram() const {
    std::map<std::size_t, std::size_t> h;
    for (const Block& b : blocks) ++h[b.size()];
    return h;
  }
};

// Thresholds |S| at the (1 - target_density) quantile of the off-diagonal
// entries, so that roughly a target_density fraction of them survives, then
// caps every column at `cap` neighbors (largest |S| kept). Zero entries are
// never part of the pattern.
inline SparsityPattern build_pattern(const GramMatrix& S, double target_density,
                                     std::uint32_t cap) {
  if (!(target_density > 0.0) || target_density > 1.0) {
    throw config_error("target_density must lie in (0, 1]");
  }
  if (cap < 1) throw config_error("cap must be at least 1");

  const auto m = static_cast<std::size_t>(S.S.rows());
  SparsityPattern pattern;
  pattern.m = m;
  pattern.target_density = target_density;
  pattern.cap = cap;
  pattern.columns.resize(m);

  std::vector<double> mags;  // one per unordered pair; S is symmetric
  mags.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = std::abs(S.S(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
      if (v > 0.0) mags.push_back(v);
    }
  }
  const std::size_t total_pairs = m * (m - 1) / 2;
  std::size_t keep = round_half_up(target_density * static_cast<double>(total_pairs));
  keep = std::min(keep, mags.size());
  if (keep == 0) {
    warn("sparsity pattern is empty (no off-diagonal entries survive the threshold)");
    return pattern;
  }
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(keep - 1), mags.end(),
                   std::greater<>());
  const double threshold = mags[keep - 1];

  for (std::size_t i = 0; i < m; ++i) {
    auto& col = pattern.columns[i];
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const double v = std::abs(S.S(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
      if (v >= threshold && v > 0.0) col.push_back({static_cast<std::uint32_t>(j), v});
    }
    if (col.size() > cap) {
      std::sort(col.begin(), col.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.weight != b.weight ? a.weight > b.weight : a.item < b.item;
      });
      col.resize(cap);
      std::sort(col.begin(), col.end(),
                [](const Neighbor& a, const Neighbor& b) { return a.item < b.item; });
    }
  }
  return pattern;
}

// Iterative block planning over a worklist of items sorted by degree
// (descending), ties by popularity then item index. Each step promotes the
// round(r * |N(i)|) neighbors with the largest covariance magnitudes into the
// dependents set D(i) alongside the seed, conditions on the rest, and removes
// the still-pending members of D(i) from the worklist. Items promoted into
// several D sets yield multiple estimates later; that is intended.
inline BlockPlan plan_blocks(const SparsityPattern& pattern, double r,
                             const std::vector<double>& popularity) {
  if (r < 0.0 || r > 1.0) throw config_error("r must lie in [0, 1]");
  if (popularity.size() != pattern.m) {
    throw config_error("popularity vector length does not match pattern");
  }

  const std::size_t m = pattern.m;
  BlockPlan plan;
  plan.r = r;
  plan.m = m;

  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const std::size_t da = pattern.columns[a].size(), db = pattern.columns[b].size();
    if (da != db) return da > db;
    if (popularity[a] != popularity[b]) return popularity[a] > popularity[b];
    return a < b;
  });

  std::vector<char> pending(m, 1);
  for (std::uint32_t seed : order) {
    if (!pending[seed]) continue;  // already covered by an earlier block

    const auto& neigh = pattern.columns[seed];
    std::vector<std::uint32_t> ranked(neigh.size());
    std::iota(ranked.begin(), ranked.end(), 0u);
    std::sort(ranked.begin(), ranked.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (neigh[a].weight != neigh[b].weight) return neigh[a].weight > neigh[b].weight;
      if (popularity[neigh[a].item] != popularity[neigh[b].item]) {
        return popularity[neigh[a].item] > popularity[neigh[b].item];
      }
      return neigh[a].item < neigh[b].item;
    });
    const std::size_t m_i = round_half_up(r * static_cast<double>(neigh.size()));

    Block block;
    block.seed = seed;
    block.dependents.push_back(seed);
    for (std::size_t k = 0; k < m_i; ++k) block.dependents.push_back(neigh[ranked[k]].item);
    for (std::size_t k = m_i; k < neigh.size(); ++k) {
      block.conditioners.push_back(neigh[ranked[k]].item);
    }
    std::sort(block.dependents.begin(), block.dependents.end());
    std::sort(block.conditioners.begin(), block.conditioners.end());

    for (std::uint32_t d : block.dependents) {
      if (pending[d]) {
        pending[d] = 0;
        block.covered.push_back(d);
      }
    }
    plan.blocks.push_back(std::move(block));
  }
  return plan;
}

// Work estimate Σ_seeds (1 + |N(i)|)^omega; omega defaults to 3 to match the
// cubic factorization actually used for the submatrix inversions.
inline double block_cost_estimate(const BlockPlan& plan, double omega = 3.0) {
  double cost = 0.0;
  for (const Block& b : plan.blocks) cost += std::pow(static_cast<double>(b.size()), omega);
  return cost;
}

// Estimates emitted by one block: for every dependent column d and every
// other item j of the submatrix, coeffs(row_of_j, pos_of_d) = -C_jd / C_dd
// where C is the inverse of S[K;K], K = sorted(D ∪ C). The row matching the
// dependent itself is left at zero.
struct BlockEstimates {
  std::vector<std::uint32_t> items;       // K, sorted
  std::vector<std::uint32_t> dependents;  // sorted
  Matrix coeffs;                          // |K| x |D|
};

inline BlockEstimates solve_block(const GramMatrix& S, const std::vector<std::uint32_t>& dependents,
                                  const std::vector<std::uint32_t>& conditioners) {
  if (dependents.empty()) throw config_error("block has no dependents");

  BlockEstimates est;
  est.dependents = dependents;
  est.items.reserve(dependents.size() + conditioners.size());
  std::merge(dependents.begin(), dependents.end(), conditioners.begin(), conditioners.end(),
             std::back_inserter(est.items));

  const auto k = static_cast<Eigen::Index>(est.items.size());
  Matrix sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      sub(a, b) = S.S(static_cast<Eigen::Index>(est.items[a]), static_cast<Eigen::Index>(est.items[b]));
    }
  }

  Eigen::LLT<Matrix> llt(sub);
  if (llt.info() != Eigen::Success) {
    // usually duplicated item columns in small data; boost the ridge once
    const double boost = 10.0 * S.lambda / static_cast<double>(S.n_users);
    warn("singular submatrix for seed item " + std::to_string(dependents.front()) +
         ", retrying with diagonal boost " + std::to_string(boost));
    Matrix boosted = sub;
    boosted.diagonal().array() += boost;
    llt.compute(boosted);
    if (llt.info() != Eigen::Success) {
      throw numerical_error("singular block submatrix for seed item " +
                            std::to_string(dependents.front()));
    }
  }
  Matrix C = llt.solve(Matrix::Identity(k, k));

  est.coeffs = Matrix::Zero(k, static_cast<Eigen::Index>(dependents.size()));
  for (std::size_t d = 0; d < dependents.size(); ++d) {
    const auto pos = static_cast<Eigen::Index>(
        std::lower_bound(est.items.begin(), est.items.end(), dependents[d]) - est.items.begin());
    est.coeffs.col(static_cast<Eigen::Index>(d)) = -C.col(pos) / C(pos, pos);
    est.coeffs(pos, static_cast<Eigen::Index>(d)) = 0.0;
  }
  if (!est.coeffs.allFinite()) {
    throw numerical_error("non-finite block estimates for seed item " +
                          std::to_string(dependents.front()));
  }
  return est;
}

// Solves every planned block (independently, so the loop is parallel), then
// averages the per-entry estimates. Estimates are merged in seed order
// regardless of thread count, which keeps the result bitwise reproducible.
inline WeightMatrix solve_sparse_planned(const GramMatrix& S, const BlockPlan& plan) {
  const std::size_t m = plan.m;
  std::vector<BlockEstimates> results(plan.blocks.size());

  bool failed = false;
  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(plan.blocks.size()); ++b) {
    if (failed) continue;
    try {
      results[b] = solve_block(S, plan.blocks[b].dependents, plan.blocks[b].conditioners);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        failure = e.what();
      }
    }
  }
  if (failed) throw numerical_error(failure);

  struct Cell {
    std::uint32_t row;
    double sum;
    std::uint32_t count;
  };
  std::vector<std::vector<Cell>> cols(m);

  for (const BlockEstimates& est : results) {  // seed order
    for (std::size_t d = 0; d < est.dependents.size(); ++d) {
      auto& col = cols[est.dependents[d]];
      for (std::size_t a = 0; a < est.items.size(); ++a) {
        const std::uint32_t row = est.items[a];
        if (row == est.dependents[d]) continue;
        const double v = est.coeffs(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(d));
        auto it = std::find_if(col.begin(), col.end(), [&](const Cell& c) { return c.row == row; });
        if (it == col.end()) {
          col.push_back({row, v, 1});
        } else {
          it->sum += v;
          ++it->count;
        }
      }
    }
  }

  SparseMat B(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < m; ++i) {
    auto& col = cols[i];
    std::sort(col.begin(), col.end(), [](const Cell& a, const Cell& b) { return a.row < b.row; });
    for (const Cell& c : col) {
      const double v = c.sum / static_cast<double>(c.count);
      if (v != 0.0) trips.emplace_back(c.row, static_cast<Eigen::Index>(i), v);
    }
  }
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();

  WeightMatrix w;
  w.m = m;
  w.B = std::move(B);
  w.meta.solver = SolverKind::sparse;
  w.meta.lambda = S.lambda;
  w.meta.r = plan.r;
  return w;
}

inline WeightMatrix solve_sparse(const GramMatrix& S, const SparsityPattern& pattern, double r,
                                 const std::vector<double>& popularity) {
  if (pattern.m != static_cast<std::size_t>(S.S.rows())) {
    throw config_error("pattern does not match Gram size");
  }
  const BlockPlan plan = plan_blocks(pattern, r, popularity);
  return solve_sparse_planned(S, plan);
}

}  // namespace gmrfrec
