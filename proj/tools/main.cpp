#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <gmrfrec/gmrfrec.hpp>

namespace {

struct ParseFlags {
  std::string delimiter = ",";
  bool header = false;
  bool binarize = false;
  std::uint32_t min_item = 0;
  std::uint32_t min_user = 0;
};

void add_parse_flags(CLI::App* cmd, ParseFlags& p) {
  cmd->add_option("--delimiter", p.delimiter, "field delimiter, one character or \\t")
      ->capture_default_str();
  cmd->add_flag("--header", p.header, "skip the first line of the data file");
  cmd->add_flag("--binarize", p.binarize, "replace every interaction value with 1");
  cmd->add_option("--min-item-count", p.min_item, "drop items with fewer interactions")
      ->capture_default_str();
  cmd->add_option("--min-user-count", p.min_user, "drop users with fewer interactions")
      ->capture_default_str();
}

gmrfrec::ParseOptions to_options(const ParseFlags& p) {
  gmrfrec::ParseOptions opt;
  if (p.delimiter == "\\t") {
    opt.delimiter = '\t';
  } else if (p.delimiter.size() == 1) {
    opt.delimiter = p.delimiter[0];
  } else {
    throw gmrfrec::config_error("delimiter must be a single character");
  }
  opt.has_header = p.header;
  opt.binarize = p.binarize;
  opt.min_item_interactions = p.min_item;
  opt.min_user_interactions = p.min_user;
  return opt;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw gmrfrec::data_error("cannot open output file: " + path);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"item-item weight learning and top-N recommendation"};
  app.require_subcommand(1);

  gmrfrec::TrainConfig train_cfg;
  std::string train_data, train_model, train_solver = "dense";
  ParseFlags train_parse;
  CLI::App* train = app.add_subcommand("train", "learn an item-item weight matrix");
  train->add_option("--data", train_data, "interaction file (user,item[,value])")->required();
  train->add_option("--model", train_model, "model output path")->required();
  train->add_option("--solver", train_solver, "dense, dense-mean-constrained or sparse")
      ->capture_default_str();
  train->add_option("--lambda", train_cfg.lambda, "ridge penalty")->capture_default_str();
  train->add_option("--alpha", train_cfg.alpha, "variance scaling exponent")->capture_default_str();
  train->add_flag("--center,!--no-center", train_cfg.center, "subtract item means")
      ->capture_default_str();
  train->add_option("--target-density", train_cfg.target_density,
                    "fraction of item pairs kept in the sparse pattern")
      ->capture_default_str();
  train->add_option("--cap", train_cfg.cap, "max neighbors per item in the sparse pattern")
      ->capture_default_str();
  train->add_option("--r", train_cfg.r, "fraction of each neighborhood estimated per block")
      ->capture_default_str();
  train->add_option("--seed", train_cfg.seed, "seed for the holdout split")->capture_default_str();
  train->add_option("--threads", train_cfg.threads, "solver thread count")->capture_default_str();
  train->add_option("--holdout-validation", train_cfg.holdout_validation,
                    "fraction of users reserved for validation")
      ->capture_default_str();
  train->add_option("--holdout-test", train_cfg.holdout_test,
                    "fraction of users reserved for testing")
      ->capture_default_str();
  train->add_option("--fold-in", train_cfg.fold_in_frac,
                    "per-user fraction of items fed to the model at evaluation")
      ->capture_default_str();
  add_parse_flags(train, train_parse);

  gmrfrec::EvalConfig eval_cfg;
  std::string eval_model, eval_data, eval_report = "-", eval_part = "test";
  ParseFlags eval_parse;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a model on held-out users");
  evaluate->add_option("--model", eval_model, "model file")->required();
  evaluate->add_option("--data", eval_data, "interaction file")->required();
  evaluate->add_option("--report", eval_report, "report output path, - for stdout")
      ->capture_default_str();
  evaluate->add_option("--validation-frac", eval_cfg.validation_frac, "validation user fraction")
      ->capture_default_str();
  evaluate->add_option("--test-frac", eval_cfg.test_frac, "test user fraction")
      ->capture_default_str();
  evaluate->add_option("--fold-in", eval_cfg.fold_in_frac, "per-user fold-in fraction")
      ->capture_default_str();
  evaluate->add_option("--seed", eval_cfg.seed, "split seed")->capture_default_str();
  evaluate->add_option("--part", eval_part, "which holdout to score")
      ->check(CLI::IsMember({"validation", "test"}))
      ->capture_default_str();
  evaluate->add_option("--recall-k", eval_cfg.recall_ks, "recall cutoffs")
      ->delimiter(',')
      ->capture_default_str();
  evaluate->add_option("--ndcg-k", eval_cfg.ndcg_ks, "ndcg cutoffs")
      ->delimiter(',')
      ->capture_default_str();
  add_parse_flags(evaluate, eval_parse);

  gmrfrec::RecommendConfig rec_cfg;
  std::string rec_model, rec_data, rec_output = "-";
  ParseFlags rec_parse;
  CLI::App* recommend = app.add_subcommand("recommend", "emit top-N items per user");
  recommend->add_option("--model", rec_model, "model file")->required();
  recommend->add_option("--data", rec_data, "interaction file")->required();
  recommend->add_option("--n", rec_cfg.n, "recommendations per user")->capture_default_str();
  recommend->add_option("--output", rec_output, "output path, - for stdout")
      ->capture_default_str();
  add_parse_flags(recommend, rec_parse);

  std::string inspect_path;
  CLI::App* inspect = app.add_subcommand("inspect", "print model metadata or a report file");
  inspect->add_option("path", inspect_path, "model or report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) {
      train_cfg.solver = gmrfrec::parse_solver(train_solver);
      train_cfg.parse = to_options(train_parse);
      gmrfrec::cmd_train(train_cfg, train_data, train_model, std::cout);
    } else if (evaluate->parsed()) {
      eval_cfg.use_validation = eval_part == "validation";
      eval_cfg.parse = to_options(eval_parse);
      if (eval_report == "-") {
        gmrfrec::cmd_evaluate(eval_model, eval_data, eval_cfg, std::cout);
      } else {
        auto out = open_output(eval_report);
        gmrfrec::cmd_evaluate(eval_model, eval_data, eval_cfg, out);
      }
    } else if (recommend->parsed()) {
      rec_cfg.parse = to_options(rec_parse);
      if (rec_output == "-") {
        gmrfrec::cmd_recommend(rec_model, rec_data, rec_cfg, std::cout);
      } else {
        auto out = open_output(rec_output);
        gmrfrec::cmd_recommend(rec_model, rec_data, rec_cfg, out);
      }
    } else if (inspect->parsed()) {
      gmrfrec::cmd_inspect(inspect_path, std::cout);
    }
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
  return 0;
}
