// Full-pipeline harness for large public datasets: strong-generalization
// split, training on the train users only, metrics on a holdout part, and
// optional --expect checks against published numbers. Kept out of the test
// suite on purpose; it needs real data and real time.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <gmrfrec/gmrfrec.hpp>

namespace {

struct Expectation {
  std::string metric;
  std::size_t k = 0;
  double value = 0.0;
};

Expectation parse_expect(const std::string& s) {
  const auto c1 = s.find(':');
  const auto c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw gmrfrec::config_error("--expect wants metric:k:value, got '" + s + "'");
  }
  Expectation e;
  e.metric = s.substr(0, c1);
  if (e.metric != "ndcg" && e.metric != "recall") {
    throw gmrfrec::config_error("--expect metric must be ndcg or recall");
  }
  try {
    e.k = std::stoul(s.substr(c1 + 1, c2 - c1 - 1));
    e.value = std::stod(s.substr(c2 + 1));
  } catch (const std::exception&) {
    throw gmrfrec::config_error("--expect wants metric:k:value, got '" + s + "'");
  }
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"end-to-end run on a large dataset with optional result checks"};

  std::string data_path, solver_name = "dense", part = "test";
  gmrfrec::TrainConfig cfg;
  cfg.lambda = 500.0;  // a reasonable starting point for datasets of millions of users
  double validation_frac = 0.04, test_frac = 0.04;
  std::vector<std::string> expect_raw;
  double tol = 0.005;
  bool binarize = true;
  std::string delimiter = ",";
  bool header = false;

  app.add_option("--data", data_path, "interaction file (user,item[,value])")->required();
  app.add_option("--solver", solver_name, "dense, dense-mean-constrained or sparse")
      ->capture_default_str();
  app.add_option("--lambda", cfg.lambda, "ridge penalty")->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "variance scaling exponent")->capture_default_str();
  app.add_flag("--center,!--no-center", cfg.center, "subtract item means")->capture_default_str();
  app.add_option("--target-density", cfg.target_density, "sparse pattern density")
      ->capture_default_str();
  app.add_option("--cap", cfg.cap, "max neighbors per item")->capture_default_str();
  app.add_option("--r", cfg.r, "fraction of each neighborhood estimated per block")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "split seed")->capture_default_str();
  app.add_option("--threads", cfg.threads, "solver thread count")->capture_default_str();
  app.add_option("--validation-frac", validation_frac, "validation user fraction")
      ->capture_default_str();
  app.add_option("--test-frac", test_frac, "test user fraction")->capture_default_str();
  app.add_option("--fold-in", cfg.fold_in_frac, "per-user fold-in fraction")
      ->capture_default_str();
  app.add_option("--part", part, "which holdout to score")
      ->check(CLI::IsMember({"validation", "test"}))
      ->capture_default_str();
  app.add_flag("--binarize,!--no-binarize", binarize, "replace values with 1")
      ->capture_default_str();
  app.add_option("--delimiter", delimiter, "field delimiter, one character or \\t")
      ->capture_default_str();
  app.add_flag("--header", header, "skip the first line");
  app.add_option("--expect", expect_raw, "check a result, format metric:k:value (repeatable)");
  app.add_option("--tol", tol, "allowed absolute deviation for --expect")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    cfg.solver = gmrfrec::parse_solver(solver_name);
    cfg.parse.binarize = binarize;
    cfg.parse.has_header = header;
    if (delimiter == "\\t") {
      cfg.parse.delimiter = '\t';
    } else if (delimiter.size() == 1) {
      cfg.parse.delimiter = delimiter[0];
    } else {
      throw gmrfrec::config_error("delimiter must be a single character");
    }
    cfg.holdout_validation = 0.0;  // the split is taken here, not inside cmd_train
    cfg.holdout_test = 0.0;
    gmrfrec::validate(cfg);
    if (!(validation_frac >= 0.0 && test_frac >= 0.0 && validation_frac + test_frac < 1.0)) {
      throw gmrfrec::config_error("holdout fractions must be nonnegative and sum below 1");
    }
    std::vector<Expectation> expectations;
    for (const std::string& s : expect_raw) expectations.push_back(parse_expect(s));

    gmrfrec::set_threads(cfg.threads);
    gmrfrec::detail::PhaseTimer timer(std::cout);

    const gmrfrec::InteractionMatrix data = gmrfrec::load_interactions(data_path, cfg.parse);
    std::cout << "data users " << data.n_users() << " items " << data.n_items()
              << " interactions " << data.nnz() << "\n";
    const gmrfrec::EvalSplit split = gmrfrec::split_strong_generalization(
        data, validation_frac, test_frac, cfg.fold_in_frac, cfg.seed);
    const gmrfrec::InteractionMatrix train = gmrfrec::subset_users(data, split.train_users);
    std::cout << "train users " << train.n_users() << " items " << train.n_items() << "\n";
    timer.lap("ingest");

    bool center = cfg.center;
    if (cfg.solver == gmrfrec::SolverKind::dense_mean_constrained) center = false;
    gmrfrec::PreprocessStats stats = gmrfrec::compute_stats(train, cfg.alpha);
    const gmrfrec::GramMatrix S = gmrfrec::gram(train, stats, center, cfg.lambda);
    timer.lap("preprocess");

    gmrfrec::WeightMatrix weights;
    if (cfg.solver == gmrfrec::SolverKind::dense) {
      weights = gmrfrec::solve_dense(S);
    } else if (cfg.solver == gmrfrec::SolverKind::dense_mean_constrained) {
      weights = gmrfrec::solve_dense_mean_constrained(S, stats.mu.cwiseQuotient(stats.scale));
    } else {
      const gmrfrec::SparsityPattern pattern =
          gmrfrec::build_pattern(S, cfg.target_density, cfg.cap);
      const gmrfrec::BlockPlan plan = gmrfrec::plan_blocks(pattern, cfg.r, train.item_counts());
      std::cout << "pattern edges " << pattern.edge_count() << " seeds " << plan.n_seeds()
                << " cost estimate " << gmrfrec::block_cost_estimate(plan) << "\n";
      weights = gmrfrec::solve_sparse_planned(S, plan);
    }
    weights.meta.alpha = cfg.alpha;
    weights.meta.center = center;
    timer.lap("solve");
    std::cout << "weights " << weights.nnz() << " nonzeros, density " << weights.density()
              << "\n";

    gmrfrec::Model model{train.item_ids(), std::move(stats), std::move(weights)};
    const std::vector<std::int64_t> to_model = gmrfrec::detail::map_items(data, model);
    const auto& holdouts = part == "validation" ? split.validation_holdouts : split.test_holdouts;

    std::vector<std::vector<gmrfrec::InteractionMatrix::Entry>> fold_in;
    std::vector<std::vector<std::uint32_t>> relevant;
    for (const gmrfrec::HoldoutUser& h : holdouts) {
      std::vector<std::uint32_t> rel;
      for (std::uint32_t item : h.held_out) {
        if (to_model[item] >= 0) rel.push_back(static_cast<std::uint32_t>(to_model[item]));
      }
      if (rel.empty()) continue;
      std::sort(rel.begin(), rel.end());
      std::vector<gmrfrec::InteractionMatrix::Entry> fi;
      for (std::uint32_t item : h.fold_in) {
        if (to_model[item] >= 0) {
          fi.push_back({static_cast<std::uint32_t>(to_model[item]), data.value_at(h.user, item)});
        }
      }
      fold_in.push_back(std::move(fi));
      relevant.push_back(std::move(rel));
    }

    const std::vector<std::size_t> recall_ks{20, 50};
    const std::vector<std::size_t> ndcg_ks{100};
    const gmrfrec::MetricReport report =
        gmrfrec::evaluate_lists(fold_in, relevant, model.weights, model.stats,
                                model.weights.meta.center, recall_ks, ndcg_ks);
    timer.lap("evaluate");

    for (const gmrfrec::MetricValue& v : report.values) {
      std::printf("%s@%zu %.4f (stderr %.4f, %zu users)\n", v.name.c_str(), v.k, v.mean,
                  v.stderr_, v.n_users);
    }

    bool ok = true;
    for (const Expectation& e : expectations) {
      const gmrfrec::MetricValue* found = nullptr;
      for (const gmrfrec::MetricValue& v : report.values) {
        if (v.name == e.metric && v.k == e.k) found = &v;
      }
      if (found == nullptr) {
        throw gmrfrec::config_error("--expect refers to a metric that was not computed: " +
                                    e.metric + "@" + std::to_string(e.k));
      }
      const double dev = std::abs(found->mean - e.value);
      const bool pass = dev <= tol;
      ok = ok && pass;
      std::printf("expect %s@%zu = %.4f: got %.4f, deviation %.4f, %s\n", e.metric.c_str(), e.k,
                  e.value, found->mean, dev, pass ? "ok" : "OUT OF TOLERANCE");
    }
    return ok ? 0 : 1;
  } catch (const gmrfrec::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gmrfrec::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const gmrfrec::numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
