#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "gmrfrec/common.hpp"
#include "gmrfrec/interactions.hpp"

namespace gmrfrec {

struct HoldoutUser {
  std::uint32_t user = 0;
  std::vector<std::uint32_t> fold_in;   // items fed to the model at evaluation time
  std::vector<std::uint32_t> held_out;  // items the model is asked to rank highly
};

// Users are disjoint across the three sets; validation/test users carry a
// fold-in/held-out partition of their items.
struct EvalSplit {
  std::vector<std::uint32_t> train_users;
  std::vector<std::uint32_t> validation_users;
  std::vector<std::uint32_t> test_users;
  std::vector<HoldoutUser> validation_holdouts;  // ascending by user index
  std::vector<HoldoutUser> test_holdouts;
};

// Partitions users by shuffled assignment under the seed, then splits each
// held-out user's items into fold-in (~fold_in_frac, at least 1) and held-out
// (the rest, at least 1). Users with fewer than 2 interactions cannot be
// evaluated and stay in the training set.
inline EvalSplit split_strong_generalization(const InteractionMatrix& mat, double val_frac,
                                             double test_frac, double fold_in_frac,
                                             std::uint64_t seed) {
  if (!(val_frac + test_frac > 0.0) || !(val_frac + test_frac < 1.0) || val_frac < 0.0 ||
      test_frac < 0.0) {
    throw config_error("val_frac + test_frac must lie in (0, 1)");
  }
  if (!(fold_in_frac > 0.0) || !(fold_in_frac < 1.0)) {
    throw config_error("fold_in_frac must lie in (0, 1)");
  }

  const std::size_t n = mat.n_users();
  const auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(n)));
  if ((val_frac > 0.0 && n_val == 0) || (test_frac > 0.0 && n_test == 0) ||
      n_val + n_test == 0 || n_val + n_test >= n) {
    throw data_error("too few users to populate train/validation/test sets");
  }

  Rng rng(seed);
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t u = 0; u < n; ++u) order[u] = u;
  shuffle_vec(order, rng);

  EvalSplit split;
  auto assign = [&](std::size_t begin, std::size_t end, std::vector<std::uint32_t>& dest) {
    for (std::size_t k = begin; k < end; ++k) {
      std::uint32_t u = order[k];
      if (&dest != &split.train_users && mat.row_size(u) < 2) {
        split.train_users.push_back(u);  // not evaluable, keep for training
      } else {
        dest.push_back(u);
      }
    }
  };
  assign(0, n_val, split.validation_users);
  assign(n_val, n_val + n_test, split.test_users);
  assign(n_val + n_test, n, split.train_users);

  if ((val_frac > 0.0 && split.validation_users.empty()) ||
      (test_frac > 0.0 && split.test_users.empty()) || split.train_users.empty()) {
    throw data_error("too few evaluable users to populate train/validation/test sets");
  }
  std::sort(split.train_users.begin(), split.train_users.end());
  std::sort(split.validation_users.begin(), split.validation_users.end());
  std::sort(split.test_users.begin(), split.test_users.end());

  auto hold_out = [&](const std::vector<std::uint32_t>& users, std::vector<HoldoutUser>& dest) {
    for (std::uint32_t u : users) {
      auto r = mat.row(u);
      std::vector<std::uint32_t> items(r.size());
      for (std::size_t k = 0; k < r.size(); ++k) items[k] = r[k].item;
      shuffle_vec(items, rng);
      const std::size_t cnt = items.size();
      std::size_t n_fold = round_half_up(fold_in_frac * static_cast<double>(cnt));
      n_fold = std::clamp<std::size_t>(n_fold, 1, cnt - 1);
      HoldoutUser h;
      h.user = u;
      h.fold_in.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_fold));
      h.held_out.assign(items.begin() + static_cast<std::ptrdiff_t>(n_fold), items.end());
      std::sort(h.fold_in.begin(), h.fold_in.end());
      std::sort(h.held_out.begin(), h.held_out.end());
      dest.push_back(std::move(h));
    }
  };
  hold_out(split.validation_users, split.validation_holdouts);
  hold_out(split.test_users, split.test_holdouts);
  return split;
}

}  // namespace gmrfrec
