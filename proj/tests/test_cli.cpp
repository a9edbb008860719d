#include <filesystem>
#include <fstream>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include <gmrfrec/cli.hpp>

#include "testkit.hpp"

using Catch::Matchers::ContainsSubstring;
using gmrfrec::EvalConfig;
using gmrfrec::Model;
using gmrfrec::RecommendConfig;
using gmrfrec::TrainConfig;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

// three users over two items: both, only a, only b
const char* kTwoItemCsv = "u1,a,1\nu1,b,1\nu2,a,1\nu3,b,1\n";

std::string interactions_csv(const gmrfrec::InteractionMatrix& mat) {
  std::string text;
  for (std::uint32_t u = 0; u < mat.n_users(); ++u) {
    for (const auto& e : mat.row(u)) {
      text += mat.user_id(u) + "," + mat.item_id(e.item) + "," +
              gmrfrec::detail::fmt10(e.value) + "\n";
    }
  }
  return text;
}

TrainConfig plain_train() {
  TrainConfig cfg;
  cfg.lambda = 1.0;
  cfg.alpha = 0.0;
  cfg.center = false;
  return cfg;
}

}  // namespace

TEST_CASE("train on the two item fixture reproduces the closed form") {
  testkit::TempFile data("pair.csv");
  testkit::TempFile model_path("pair.model");
  write_file(data.str(), kTwoItemCsv);

  std::ostringstream report;
  const Model model = cmd_train(plain_train(), data.str(), model_path.str(), report);

  REQUIRE(model.item_ids == std::vector<std::string>{"a", "b"});
  const gmrfrec::Matrix B = model.weights.dense();
  REQUIRE_THAT(B(0, 1), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE_THAT(B(1, 0), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
  REQUIRE(B(0, 0) == 0.0);
  REQUIRE(B(1, 1) == 0.0);

  // the persisted file carries the same payload
  const Model back = gmrfrec::load_model(model_path.str());
  REQUIRE(testkit::max_abs_diff(back.weights.dense(), B) == 0.0);

  const std::string log = report.str();
  REQUIRE_THAT(log, ContainsSubstring("data users 3 items 2 interactions 4"));
  REQUIRE_THAT(log, ContainsSubstring("phase solve"));
}

TEST_CASE("sparse training with a complete pattern matches dense training") {
  testkit::SyntheticSpec spec;
  spec.n_users = 50;
  spec.n_items = 10;
  // dense enough that every item pair co-occurs; a zero covariance entry
  // would be dropped from the pattern even at target density 1
  spec.density = 0.65;
  spec.seed = 61;
  const auto mat = testkit::random_matrix(spec);
  testkit::TempFile data("sparse_vs_dense.csv");
  write_file(data.str(), interactions_csv(mat));

  testkit::TempFile dense_path("dense.model");
  testkit::TempFile sparse_path("sparse.model");

  TrainConfig cfg = plain_train();
  cfg.alpha = 0.5;
  std::ostringstream sink;
  const Model dense = cmd_train(cfg, data.str(), dense_path.str(), sink);

  cfg.solver = gmrfrec::SolverKind::sparse;
  cfg.target_density = 1.0;
  cfg.r = 0.0;
  const Model sparse = cmd_train(cfg, data.str(), sparse_path.str(), sink);

  REQUIRE(testkit::max_abs_diff(dense.weights.dense(), sparse.weights.dense()) < 1e-8);
  REQUIRE_THAT(sink.str(), ContainsSubstring("pattern edges"));
  REQUIRE_THAT(sink.str(), ContainsSubstring("block sizes"));
}

TEST_CASE("invalid train configuration leaves no model file behind") {
  testkit::TempFile data("cfg.csv");
  testkit::TempFile model_path("cfg.model");
  write_file(data.str(), kTwoItemCsv);
  // TempFile pre-creates its file; drop it so the absence check below is real
  std::filesystem::remove(model_path.str());

  TrainConfig cfg = plain_train();
  cfg.solver = gmrfrec::SolverKind::sparse;
  cfg.r = 1.5;
  std::ostringstream sink;
  REQUIRE_THROWS_AS(cmd_train(cfg, data.str(), model_path.str(), sink), gmrfrec::config_error);
  REQUIRE(!std::filesystem::exists(model_path.str()));
}

TEST_CASE("the mean constrained solver turns centering off") {
  testkit::TempFile data("mc.csv");
  testkit::TempFile model_path("mc.model");
  write_file(data.str(), kTwoItemCsv);

  TrainConfig cfg = plain_train();
  cfg.solver = gmrfrec::SolverKind::dense_mean_constrained;
  cfg.center = true;
  std::ostringstream sink;
  const Model model = cmd_train(cfg, data.str(), model_path.str(), sink);
  REQUIRE(model.weights.meta.center == false);
  REQUIRE(model.weights.meta.solver == gmrfrec::SolverKind::dense_mean_constrained);
}

TEST_CASE("training with holdouts drops the held out users") {
  testkit::SyntheticSpec spec;
  spec.n_users = 50;
  spec.n_items = 10;
  spec.seed = 62;
  const auto mat = testkit::random_matrix(spec);
  testkit::TempFile data("holdout.csv");
  testkit::TempFile model_path("holdout.model");
  write_file(data.str(), interactions_csv(mat));

  TrainConfig cfg = plain_train();
  cfg.holdout_validation = 0.2;
  cfg.holdout_test = 0.2;
  std::ostringstream report;
  cmd_train(cfg, data.str(), model_path.str(), report);

  // 50 users minus two 20% holdouts; users too small to evaluate stay in train
  const std::string log = report.str();
  const auto pos = log.find("data users ");
  REQUIRE(pos != std::string::npos);
  const unsigned long n_train = std::stoul(log.substr(pos + 11));
  REQUIRE(n_train >= 30);
  REQUIRE(n_train < 50);
}

TEST_CASE("a perfect oracle model evaluates to one") {
  // hand-built model over items a, b: holding one item predicts the other
  Model oracle;
  oracle.item_ids = {"a", "b"};
  oracle.stats.mu = gmrfrec::Vector::Zero(2);
  oracle.stats.stddev = gmrfrec::Vector::Ones(2);
  oracle.stats.scale = gmrfrec::Vector::Ones(2);
  gmrfrec::Matrix B(2, 2);
  B << 0.0, 1.0, 1.0, 0.0;
  oracle.weights.m = 2;
  oracle.weights.B = B.sparseView();
  oracle.weights.meta.solver = gmrfrec::SolverKind::dense;
  oracle.weights.meta.center = false;

  testkit::TempFile model_path("oracle.model");
  gmrfrec::save_model(model_path.str(), oracle);

  // every user has both items, so fold-in is {one}, held-out is {the other}
  std::string csv;
  for (int u = 0; u < 10; ++u) {
    csv += "u" + std::to_string(u) + ",a,1\n";
    csv += "u" + std::to_string(u) + ",b,1\n";
  }
  testkit::TempFile data("oracle.csv");
  write_file(data.str(), csv);

  EvalConfig cfg;
  cfg.validation_frac = 0.3;
  cfg.test_frac = 0.3;
  cfg.fold_in_frac = 0.5;
  cfg.recall_ks = {1};
  cfg.ndcg_ks = {1};
  std::ostringstream out;
  const gmrfrec::MetricReport report = cmd_evaluate(model_path.str(), data.str(), cfg, out);
  REQUIRE(report.values.size() == 2);
  for (const auto& v : report.values) REQUIRE(v.mean == 1.0);
  REQUIRE_THAT(out.str(), ContainsSubstring("# gmrfrec report 1"));
  REQUIRE_THAT(out.str(), ContainsSubstring("metric\tk\tmean\tstderr\tn_users"));
  REQUIRE_THAT(out.str(), ContainsSubstring("ndcg\t1\t1\t0\t"));
}

TEST_CASE("evaluation is reproducible byte for byte") {
  testkit::SyntheticSpec spec;
  spec.n_users = 80;
  spec.n_items = 14;
  spec.density = 0.35;
  spec.seed = 63;
  const auto mat = testkit::random_matrix(spec);
  testkit::TempFile data("repeat.csv");
  testkit::TempFile model_path("repeat.model");
  write_file(data.str(), interactions_csv(mat));

  std::ostringstream sink;
  cmd_train(plain_train(), data.str(), model_path.str(), sink);

  EvalConfig cfg;
  cfg.validation_frac = 0.15;
  cfg.test_frac = 0.15;
  cfg.recall_ks = {3, 5};
  cfg.ndcg_ks = {5};
  std::ostringstream first, second;
  cmd_evaluate(model_path.str(), data.str(), cfg, first);
  cmd_evaluate(model_path.str(), data.str(), cfg, second);
  REQUIRE(first.str() == second.str());
  REQUIRE_THAT(first.str(), ContainsSubstring("# split part=test"));

  cfg.use_validation = true;
  std::ostringstream third;
  cmd_evaluate(model_path.str(), data.str(), cfg, third);
  REQUIRE_THAT(third.str(), ContainsSubstring("# split part=validation"));
}

TEST_CASE("evaluating against a disjoint item universe fails") {
  testkit::TempFile data("disjoint.csv");
  testkit::TempFile model_path("disjoint.model");
  write_file(data.str(), kTwoItemCsv);
  std::ostringstream sink;
  cmd_train(plain_train(), data.str(), model_path.str(), sink);

  testkit::TempFile other("other.csv");
  write_file(other.str(), "u1,x,1\nu1,y,1\nu2,x,1\nu3,y,1\n");
  EvalConfig cfg;
  cfg.validation_frac = 0.3;
  cfg.test_frac = 0.3;
  cfg.fold_in_frac = 0.5;
  std::ostringstream out;
  REQUIRE_THROWS_MATCHES(cmd_evaluate(model_path.str(), other.str(), cfg, out),
                         gmrfrec::data_error,
                         Catch::Matchers::MessageMatches(
                             ContainsSubstring("no items in common")));
}

TEST_CASE("recommend lists the unseen item first") {
  testkit::TempFile data("rec.csv");
  testkit::TempFile model_path("rec.model");
  write_file(data.str(), kTwoItemCsv);
  std::ostringstream sink;
  cmd_train(plain_train(), data.str(), model_path.str(), sink);

  // u2 has a only, u3 has b only, u1 has both
  RecommendConfig cfg;
  cfg.n = 2;
  std::ostringstream out;
  cmd_recommend(model_path.str(), data.str(), cfg, out);

  std::istringstream lines(out.str());
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  // u1 has seen everything, so only u2 and u3 produce rows
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0] == "u2,1,b,0.3333333333");
  REQUIRE(rows[1] == "u3,1,a,0.3333333333");
}

TEST_CASE("recommend keeps users whose items are all unknown to the model") {
  testkit::TempFile data("known.csv");
  testkit::TempFile model_path("known.model");
  write_file(data.str(), kTwoItemCsv);
  std::ostringstream sink;
  cmd_train(plain_train(), data.str(), model_path.str(), sink);

  // u9 only interacted with an item the model has never seen
  testkit::TempFile mixed("mixed.csv");
  write_file(mixed.str(), "u8,a,1\nu9,z,1\n");
  RecommendConfig cfg;
  cfg.n = 5;
  std::ostringstream out;
  cmd_recommend(model_path.str(), mixed.str(), cfg, out);

  std::istringstream lines(out.str());
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  // u8: b then nothing else (a is excluded); u9: zero scores, index order
  REQUIRE(rows.size() == 3);
  REQUIRE(rows[0] == "u8,1,b,0.3333333333");
  REQUIRE(rows[1] == "u9,1,a,0");
  REQUIRE(rows[2] == "u9,2,b,0");
}

TEST_CASE("recommend rejects a zero count") {
  RecommendConfig cfg;
  cfg.n = 0;
  std::ostringstream out;
  REQUIRE_THROWS_AS(cmd_recommend("ignored", "ignored", cfg, out), gmrfrec::config_error);
}

TEST_CASE("inspect prints model metadata") {
  testkit::TempFile data("inspect.csv");
  testkit::TempFile model_path("inspect.model");
  write_file(data.str(), kTwoItemCsv);
  std::ostringstream sink;
  cmd_train(plain_train(), data.str(), model_path.str(), sink);

  std::ostringstream out;
  gmrfrec::cmd_inspect(model_path.str(), out);
  REQUIRE_THAT(out.str(), ContainsSubstring("format gmrfrec model 1"));
  REQUIRE_THAT(out.str(), ContainsSubstring("solver dense"));
  REQUIRE_THAT(out.str(), ContainsSubstring("items 2"));
  REQUIRE_THAT(out.str(), ContainsSubstring("nonzeros 2"));
}

TEST_CASE("inspect replays a report file") {
  testkit::TempFile report("eval.report");
  const std::string text = "# gmrfrec report 1\nmetric\tk\tmean\tstderr\tn_users\n";
  write_file(report.str(), text);
  std::ostringstream out;
  gmrfrec::cmd_inspect(report.str(), out);
  REQUIRE(out.str() == text);
}

TEST_CASE("inspect rejects unrelated files") {
  testkit::TempFile junk("junk.bin");
  write_file(junk.str(), "hello world\n");
  std::ostringstream out;
  REQUIRE_THROWS_AS(gmrfrec::cmd_inspect(junk.str(), out), gmrfrec::data_error);
}

TEST_CASE("solver names parse and unknown names are rejected") {
  REQUIRE(gmrfrec::parse_solver("dense") == gmrfrec::SolverKind::dense);
  REQUIRE(gmrfrec::parse_solver("dense-mean-constrained") ==
          gmrfrec::SolverKind::dense_mean_constrained);
  REQUIRE(gmrfrec::parse_solver("sparse") == gmrfrec::SolverKind::sparse);
  REQUIRE_THROWS_AS(gmrfrec::parse_solver("cholesky"), gmrfrec::config_error);
}
