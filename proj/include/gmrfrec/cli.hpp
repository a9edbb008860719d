#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gmrfrec/common.hpp"
#include "gmrfrec/dense.hpp"
#include "gmrfrec/interactions.hpp"
#include "gmrfrec/metrics.hpp"
#include "gmrfrec/model_io.hpp"
#include "gmrfrec/preprocess.hpp"
#include "gmrfrec/scoring.hpp"
#include "gmrfrec/sparse.hpp"
#include "gmrfrec/split.hpp"

namespace gmrfrec {

struct TrainConfig {
  double lambda = 1.0;
  double alpha = 0.75;
  bool center = true;
  SolverKind solver = SolverKind::dense;
  double target_density = 0.01;  // sparse solver only
  std::uint32_t cap = 1000;      // sparse solver only
  double r = 0.5;                // sparse solver only
  std::uint64_t seed = 42;
  int threads = 1;
  // nonzero fractions reserve users for later evaluation; 0 trains on everyone
  double holdout_validation = 0.0;
  double holdout_test = 0.0;
  double fold_in_frac = 0.8;
  ParseOptions parse;
};

inline SolverKind parse_solver(const std::string& s) {
  if (s == "dense") return SolverKind::dense;
  if (s == "dense-mean-constrained") return SolverKind::dense_mean_constrained;
  if (s == "sparse") return SolverKind::sparse;
  throw config_error("unknown solver '" + s + "' (dense, dense-mean-constrained, sparse)");
}

inline void validate(const TrainConfig& c) {
  if (!(c.lambda >= 0.0)) throw config_error("lambda must be nonnegative");
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw config_error("alpha must lie in [0, 1]");
  if (!(c.target_density > 0.0 && c.target_density <= 1.0)) {
    throw config_error("target_density must lie in (0, 1]");
  }
  if (c.cap < 1) throw config_error("cap must be at least 1");
  if (!(c.r >= 0.0 && c.r <= 1.0)) throw config_error("r must lie in [0, 1]");
  if (c.threads < 1) throw config_error("threads must be at least 1");
  if (c.holdout_validation < 0.0 || c.holdout_test < 0.0 ||
      c.holdout_validation + c.holdout_test >= 1.0) {
    throw config_error("holdout fractions must be nonnegative and sum below 1");
  }
  if (!(c.fold_in_frac > 0.0 && c.fold_in_frac < 1.0)) {
    throw config_error("fold_in fraction must lie in (0, 1)");
  }
}

inline void set_threads(int threads) {
#ifdef _OPENMP
  omp_set_num_threads(threads);
#endif
  Eigen::setNbThreads(threads);
}

namespace detail {

inline std::string fmt10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

class PhaseTimer {
 public:
  explicit PhaseTimer(std::ostream& out) : out_(&out), last_(Clock::now()) {}

  void lap(const char* phase) {
    const auto now = Clock::now();
    const double sec = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", sec);
    *out_ << "phase " << phase << " " << buf << "s\n";
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::ostream* out_;
  Clock::time_point last_;
};

}  // namespace detail

// ingest -> preprocess -> solve -> persist; phase timings and solver
// breakdown go to `report` (stderr-style progress, not part of the model)
inline Model cmd_train(const TrainConfig& cfg, const std::string& data_path,
                       const std::string& model_path, std::ostream& report) {
  validate(cfg);
  set_threads(cfg.threads);

  TrainConfig c = cfg;
  if (c.solver == SolverKind::dense_mean_constrained && c.center) {
    warn("the mean-constrained solver already neutralizes item means; centering disabled");
    c.center = false;
  }

  detail::PhaseTimer timer(report);
  InteractionMatrix train = load_interactions(data_path, c.parse);
  if (c.holdout_validation > 0.0 || c.holdout_test > 0.0) {
    const EvalSplit split = split_strong_generalization(train, c.holdout_validation,
                                                        c.holdout_test, c.fold_in_frac, c.seed);
    train = subset_users(train, split.train_users);
  }
  report << "data users " << train.n_users() << " items " << train.n_items() << " interactions "
         << train.nnz() << "\n";
  timer.lap("ingest");

  PreprocessStats stats = compute_stats(train, c.alpha);
  const GramMatrix S = gram(train, stats, c.center, c.lambda);
  timer.lap("preprocess");

  WeightMatrix w;
  if (c.solver == SolverKind::dense) {
    w = solve_dense(S);
  } else if (c.solver == SolverKind::dense_mean_constrained) {
    w = solve_dense_mean_constrained(S, stats.mu.cwiseQuotient(stats.scale));
  } else {
    const SparsityPattern pattern = build_pattern(S, c.target_density, c.cap);
    const BlockPlan plan = plan_blocks(pattern, c.r, train.item_counts());
    report << "pattern edges " << pattern.edge_count() << " seeds " << plan.n_seeds() << "\n";
    report << "block sizes";
    for (const auto& [size, count] : plan.size_histogram()) report << " " << size << ":" << count;
    report << "\n";
    report << "block cost estimate " << detail::fmt10(block_cost_estimate(plan)) << "\n";
    w = solve_sparse_planned(S, plan);
  }
  w.meta.alpha = c.alpha;
  w.meta.center = c.center;
  w.meta.cap = c.cap;
  w.meta.target_density = c.solver == SolverKind::sparse ? c.target_density : 1.0;
  timer.lap("solve");
  report << "weights " << w.nnz() << " nonzeros, density " << detail::fmt10(w.density()) << "\n";

  Model model{train.item_ids(), std::move(stats), std::move(w)};
  save_model(model_path, model);
  timer.lap("persist");
  return model;
}

struct EvalConfig {
  double validation_frac = 0.1;
  double test_frac = 0.1;
  double fold_in_frac = 0.8;
  std::uint64_t seed = 42;
  bool use_validation = false;  // default: score the test users
  std::vector<std::size_t> recall_ks{20, 50};
  std::vector<std::size_t> ndcg_ks{100};
  ParseOptions parse;
};

namespace detail {

// data-item index -> model-item index (-1 for items the model has not seen);
// fails if the universes are disjoint, warns about partial overlap
inline std::vector<std::int64_t> map_items(const InteractionMatrix& data, const Model& model) {
  std::unordered_map<std::string, std::uint32_t> index;
  index.reserve(model.item_ids.size());
  for (std::uint32_t i = 0; i < model.item_ids.size(); ++i) index[model.item_ids[i]] = i;

  std::vector<std::int64_t> to_model(data.n_items(), -1);
  std::size_t matched = 0;
  for (std::uint32_t i = 0; i < data.n_items(); ++i) {
    auto it = index.find(data.item_id(i));
    if (it != index.end()) {
      to_model[i] = it->second;
      ++matched;
    }
  }
  if (matched == 0) throw data_error("model and data have no items in common");
  if (matched < data.n_items()) {
    warn(std::to_string(data.n_items() - matched) + " of " + std::to_string(data.n_items()) +
         " data items are unknown to the model and will be ignored");
  }
  return to_model;
}

}  // namespace detail

inline MetricReport cmd_evaluate(const std::string& model_path, const std::string& data_path,
                                 const EvalConfig& cfg, std::ostream& report_out) {
  if (cfg.recall_ks.empty() && cfg.ndcg_ks.empty()) {
    throw config_error("at least one metric cutoff is required");
  }
  for (std::size_t k : cfg.recall_ks) {
    if (k < 1) throw config_error("recall cutoffs must be at least 1");
  }
  for (std::size_t k : cfg.ndcg_ks) {
    if (k < 1) throw config_error("ndcg cutoffs must be at least 1");
  }

  const Model model = load_model(model_path);
  const InteractionMatrix data = load_interactions(data_path, cfg.parse);
  const std::vector<std::int64_t> to_model = detail::map_items(data, model);

  const EvalSplit split = split_strong_generalization(data, cfg.validation_frac, cfg.test_frac,
                                                      cfg.fold_in_frac, cfg.seed);
  const auto& holdouts = cfg.use_validation ? split.validation_holdouts : split.test_holdouts;

  std::vector<std::vector<InteractionMatrix::Entry>> fold_in;
  std::vector<std::vector<std::uint32_t>> relevant;
  std::size_t skipped = 0;
  for (const HoldoutUser& h : holdouts) {
    std::vector<std::uint32_t> rel;
    for (std::uint32_t item : h.held_out) {
      if (to_model[item] >= 0) rel.push_back(static_cast<std::uint32_t>(to_model[item]));
    }
    if (rel.empty()) {
      ++skipped;  // nothing this user likes exists in the model's universe
      continue;
    }
    std::sort(rel.begin(), rel.end());
    std::vector<InteractionMatrix::Entry> fi;
    for (std::uint32_t item : h.fold_in) {
      if (to_model[item] >= 0) {
        fi.push_back({static_cast<std::uint32_t>(to_model[item]), data.value_at(h.user, item)});
      }
    }
    fold_in.push_back(std::move(fi));
    relevant.push_back(std::move(rel));
  }
  if (fold_in.empty()) throw data_error("no evaluable users in the requested split");

  const MetricReport report =
      evaluate_lists(fold_in, relevant, model.weights, model.stats, model.weights.meta.center,
                     cfg.recall_ks, cfg.ndcg_ks);

  const auto& meta = model.weights.meta;
  report_out << "# gmrfrec report 1\n";
  report_out << "# model solver=" << solver_name(meta.solver) << " lambda="
             << detail::fmt10(meta.lambda) << " alpha=" << detail::fmt10(meta.alpha)
             << " center=" << (meta.center ? 1 : 0) << " r=" << detail::fmt10(meta.r)
             << " target_density=" << detail::fmt10(meta.target_density) << " cap=" << meta.cap
             << " items=" << model.weights.m << "\n";
  report_out << "# data users=" << data.n_users() << " items=" << data.n_items()
             << " interactions=" << data.nnz() << "\n";
  report_out << "# split part=" << (cfg.use_validation ? "validation" : "test")
             << " seed=" << cfg.seed << " validation=" << detail::fmt10(cfg.validation_frac)
             << " test=" << detail::fmt10(cfg.test_frac)
             << " fold_in=" << detail::fmt10(cfg.fold_in_frac) << "\n";
  report_out << "# users evaluated=" << fold_in.size() << " skipped=" << skipped << "\n";
  report_out << "metric\tk\tmean\tstderr\tn_users\n";
  for (const MetricValue& v : report.values) {
    report_out << v.name << "\t" << v.k << "\t" << detail::fmt10(v.mean) << "\t"
               << detail::fmt10(v.stderr_) << "\t" << v.n_users << "\n";
  }
  return report;
}

struct RecommendConfig {
  std::size_t n = 10;
  ParseOptions parse;
};

// one row per recommendation: user_id, 1-based rank, item_id, score
inline void cmd_recommend(const std::string& model_path, const std::string& data_path,
                          const RecommendConfig& cfg, std::ostream& out) {
  if (cfg.n < 1) throw config_error("n must be at least 1");
  const Model model = load_model(model_path);
  const InteractionMatrix data = load_interactions(data_path, cfg.parse);
  const std::vector<std::int64_t> to_model = detail::map_items(data, model);

  const Scorer scorer(model.weights, model.stats, model.weights.meta.center);
  const char d = cfg.parse.delimiter;
  std::vector<InteractionMatrix::Entry> observed;
  std::vector<std::uint32_t> exclude;
  for (std::uint32_t u = 0; u < data.n_users(); ++u) {
    observed.clear();
    exclude.clear();
    for (const auto& e : data.row(u)) {
      if (to_model[e.item] >= 0) {
        observed.push_back({static_cast<std::uint32_t>(to_model[e.item]), e.value});
        exclude.push_back(static_cast<std::uint32_t>(to_model[e.item]));
      }
    }
    std::sort(exclude.begin(), exclude.end());
    const Vector scores = scorer.score(observed);
    std::size_t rank = 1;
    for (const ScoredItem& s : top_n(scores, exclude, cfg.n)) {
      out << data.user_id(u) << d << rank++ << d << model.item_ids[s.item] << d
          << detail::fmt10(s.score) << "\n";
    }
  }
}

// prints model metadata or replays a report file
inline void cmd_inspect(const std::string& path, std::ostream& out) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw data_error("cannot open file: " + path);
  std::string first;
  std::getline(probe, first);
  probe.close();

  if (first == "gmrfrec model 1") {
    const Model model = load_model(path);
    const auto& meta = model.weights.meta;
    out << "format gmrfrec model 1\n";
    out << "solver " << solver_name(meta.solver) << "\n";
    out << "lambda " << detail::fmt10(meta.lambda) << "\n";
    out << "alpha " << detail::fmt10(meta.alpha) << "\n";
    out << "center " << (meta.center ? 1 : 0) << "\n";
    if (meta.solver == SolverKind::sparse) {
      out << "r " << detail::fmt10(meta.r) << "\n";
      out << "target_density " << detail::fmt10(meta.target_density) << "\n";
      out << "cap " << meta.cap << "\n";
    }
    out << "items " << model.weights.m << "\n";
    out << "nonzeros " << model.weights.nnz() << "\n";
    out << "density " << detail::fmt10(model.weights.density()) << "\n";
    return;
  }
  if (first == "# gmrfrec report 1") {
    std::ifstream in(path);
    out << in.rdbuf();
    return;
  }
  throw data_error("unrecognized file format: " + path);
}

}  // namespace gmrfrec
