#include <algorithm>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include <gmrfrec/split.hpp>

#include "testkit.hpp"

using gmrfrec::EvalSplit;
using gmrfrec::InteractionMatrix;

namespace {

InteractionMatrix fixture(std::size_t n_users = 40, std::size_t n_items = 15,
                          std::uint64_t seed = 7) {
  testkit::SyntheticSpec spec;
  spec.n_users = n_users;
  spec.n_items = n_items;
  spec.density = 0.35;
  spec.seed = seed;
  return InteractionMatrix::build(testkit::random_interactions(spec), gmrfrec::ParseOptions{});
}

}  // namespace

TEST_CASE("fraction arguments are validated") {
  const auto mat = fixture();
  REQUIRE_THROWS_AS(gmrfrec::split_strong_generalization(mat, 0.0, 0.0, 0.8, 1),
                    gmrfrec::config_error);
  REQUIRE_THROWS_AS(gmrfrec::split_strong_generalization(mat, 0.6, 0.6, 0.8, 1),
                    gmrfrec::config_error);
  REQUIRE_THROWS_AS(gmrfrec::split_strong_generalization(mat, -0.1, 0.3, 0.8, 1),
                    gmrfrec::config_error);
  REQUIRE_THROWS_AS(gmrfrec::split_strong_generalization(mat, 0.2, 0.2, 0.0, 1),
                    gmrfrec::config_error);
  REQUIRE_THROWS_AS(gmrfrec::split_strong_generalization(mat, 0.2, 0.2, 1.0, 1),
                    gmrfrec::config_error);
}

TEST_CASE("tiny populations cannot be split") {
  const auto mat = fixture(3, 8);
  REQUIRE_THROWS_AS(gmrfrec::split_strong_generalization(mat, 0.01, 0.01, 0.8, 1),
                    gmrfrec::data_error);
}

TEST_CASE("users are partitioned across the three sets") {
  const auto mat = fixture();
  const EvalSplit split = gmrfrec::split_strong_generalization(mat, 0.2, 0.2, 0.8, 11);

  std::set<std::uint32_t> seen;
  for (auto u : split.train_users) seen.insert(u);
  for (auto u : split.validation_users) seen.insert(u);
  for (auto u : split.test_users) seen.insert(u);
  REQUIRE(seen.size() == mat.n_users());
  REQUIRE(split.train_users.size() + split.validation_users.size() + split.test_users.size() ==
          mat.n_users());
  REQUIRE_FALSE(split.train_users.empty());
  REQUIRE(split.validation_holdouts.size() == split.validation_users.size());
  REQUIRE(split.test_holdouts.size() == split.test_users.size());
}

TEST_CASE("a zero fraction leaves that part empty") {
  const auto mat = fixture();
  const EvalSplit split = gmrfrec::split_strong_generalization(mat, 0.0, 0.3, 0.8, 11);
  REQUIRE(split.validation_users.empty());
  REQUIRE_FALSE(split.test_users.empty());
}

TEST_CASE("same seed reproduces the split, different seed changes it") {
  const auto mat = fixture();
  const EvalSplit a = gmrfrec::split_strong_generalization(mat, 0.2, 0.2, 0.8, 42);
  const EvalSplit b = gmrfrec::split_strong_generalization(mat, 0.2, 0.2, 0.8, 42);
  const EvalSplit c = gmrfrec::split_strong_generalization(mat, 0.2, 0.2, 0.8, 43);

  REQUIRE(a.train_users == b.train_users);
  REQUIRE(a.test_users == b.test_users);
  REQUIRE(a.validation_users == b.validation_users);
  for (std::size_t k = 0; k < a.test_holdouts.size(); ++k) {
    REQUIRE(a.test_holdouts[k].fold_in == b.test_holdouts[k].fold_in);
    REQUIRE(a.test_holdouts[k].held_out == b.test_holdouts[k].held_out);
  }
  REQUIRE(a.train_users != c.train_users);
}

TEST_CASE("users with fewer than two interactions stay in training") {
  std::vector<gmrfrec::Interaction> rows;
  for (int u = 0; u < 20; ++u) {
    rows.push_back({"multi" + std::to_string(u), "a", 1.0});
    rows.push_back({"multi" + std::to_string(u), "b" + std::to_string(u % 5), 1.0});
  }
  for (int u = 0; u < 10; ++u) rows.push_back({"single" + std::to_string(u), "a", 1.0});
  const auto mat = InteractionMatrix::build(rows, gmrfrec::ParseOptions{});

  const EvalSplit split = gmrfrec::split_strong_generalization(mat, 0.25, 0.25, 0.8, 3);
  std::set<std::uint32_t> train(split.train_users.begin(), split.train_users.end());
  for (std::uint32_t u = 0; u < mat.n_users(); ++u) {
    if (mat.row_size(u) < 2) REQUIRE(train.count(u) == 1);
  }
}

TEST_CASE("per-user items split into nonempty fold-in and held-out parts") {
  const auto mat = fixture(60, 12, 5);
  const EvalSplit split = gmrfrec::split_strong_generalization(mat, 0.2, 0.2, 0.8, 9);
  for (const auto& holdouts : {split.validation_holdouts, split.test_holdouts}) {
    for (const auto& h : holdouts) {
      REQUIRE_FALSE(h.fold_in.empty());
      REQUIRE_FALSE(h.held_out.empty());
      std::set<std::uint32_t> all(h.fold_in.begin(), h.fold_in.end());
      for (auto i : h.held_out) REQUIRE(all.insert(i).second);  // disjoint
      REQUIRE(all.size() == mat.row_size(h.user));
      for (auto i : all) REQUIRE(mat.value_at(h.user, i) > 0.0);
      REQUIRE(std::is_sorted(h.fold_in.begin(), h.fold_in.end()));
      REQUIRE(std::is_sorted(h.held_out.begin(), h.held_out.end()));
    }
  }
}

TEST_CASE("two-item users split one and one") {
  std::vector<gmrfrec::Interaction> rows;
  for (int u = 0; u < 30; ++u) {
    rows.push_back({"u" + std::to_string(u), "x" + std::to_string(u % 6), 1.0});
    rows.push_back({"u" + std::to_string(u), "y" + std::to_string(u % 6), 1.0});
  }
  const auto mat = InteractionMatrix::build(rows, gmrfrec::ParseOptions{});
  const EvalSplit split = gmrfrec::split_strong_generalization(mat, 0.2, 0.2, 0.8, 17);
  for (const auto& h : split.test_holdouts) {
    REQUIRE(h.fold_in.size() == 1);
    REQUIRE(h.held_out.size() == 1);
  }
}
