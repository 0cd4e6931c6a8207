// Command line front end: gen-corpus, train-judges, run, report.
// Exit codes: 0 success, 2 config error, 3 data error.

#include <CLI11.hpp>
#include <iostream>

#include "flfe/cli.hpp"

namespace {

std::vector<flfe::TransformKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<flfe::TransformKind> kinds;
  for (const auto& name : names) {
    const auto kind = flfe::transform_from_string(name);
    if (!kind) throw flfe::ConfigError("unknown transform: " + name);
    kinds.push_back(*kind);
  }
  return kinds;
}

flfe::BaseModelConfig parse_base_model(const std::string& name) {
  flfe::BaseModelConfig cfg;
  const auto type = flfe::base_model_from_string(name);
  if (!type) throw flfe::ConfigError("unknown base model: " + name);
  cfg.type = *type;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated feature engineering simulator"};
  app.require_subcommand(1);

  // gen-corpus -------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-corpus", "Label transformation candidates and write a training corpus");
  flfe::GenCorpusArgs gen_args;
  std::vector<std::string> gen_kind_names;
  std::string gen_base_model = "logistic_regression";
  std::string gen_report;
  gen->add_option("--data", gen_args.inputs, "CSV files or directories")->required();
  gen->add_option("--label-column", gen_args.label_column, "Label column name");
  gen->add_option("--out", gen_args.out, "Corpus output path (JSON lines)")->required();
  gen->add_option("--report", gen_report, "Generation report path");
  gen->add_option("--seed", gen_args.seed, "Seed")->required();
  gen->add_option("--bins", gen_args.sketch.bins, "Sketch bins per class column");
  gen->add_option("--scale-k", gen_args.sketch.scale_k, "Sketch scaling half-range");
  gen->add_option("--float-width", gen_args.sketch.float_width, "Sketch element width in bytes (4 or 8)");
  gen->add_option("--kinds", gen_kind_names, "Restrict to these transform names");
  gen->add_option("--base-model", gen_base_model, "logistic_regression or random_forest");
  gen->add_option("--improvement-threshold", gen_args.labeling.improvement_threshold,
                  "Minimum cv-f1 gain for a useful label");
  gen->add_option("--cv-folds", gen_args.labeling.cv_folds, "Folds for labeling evaluation");
  gen->add_option("--crop-count", gen_args.labeling.crop_count, "Cropped samples per candidate");
  gen->add_option("--crop-lo", gen_args.labeling.crop_range.first, "Crop rate lower bound");
  gen->add_option("--crop-hi", gen_args.labeling.crop_range.second, "Crop rate upper bound");
  gen->add_option("--smote-ratio", gen_args.labeling.smote_target_ratio, "Post-balance minority/majority ratio");

  // train-judges -----------------------------------------------------------
  auto* train = app.add_subcommand("train-judges", "Train one judge per covered transform");
  flfe::TrainJudgesArgs train_args;
  train->add_option("--corpus", train_args.corpus, "Corpus JSON-lines path")->required();
  train->add_option("--out", train_args.out_dir, "Model output directory")->required();
  train->add_option("--seed", train_args.seed, "Seed")->required();
  train->add_option("--epochs", train_args.hyper.epochs, "Max training epochs");
  train->add_option("--batch", train_args.hyper.batch, "Minibatch size");
  train->add_option("--lr", train_args.hyper.lr, "Learning rate");
  train->add_option("--l2", train_args.hyper.l2, "L2 penalty");
  train->add_option("--dropout", train_args.hyper.dropout_rate, "Dropout rate");
  train->add_option("--hidden", train_args.hyper.hidden_dim, "Hidden width");
  train->add_option("--patience", train_args.hyper.patience, "Early stopping patience");

  // run ----------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Execute a federated feature engineering run");
  flfe::RunArgs run_args;
  std::vector<std::string> run_kind_names;
  std::string run_mode = "flfe";
  std::string run_eval_model = "logistic_regression";
  run->add_option("--data", run_args.dataset, "Dataset CSV")->required();
  run->add_option("--partition", run_args.partition, "Partition spec JSON")->required();
  run->add_option("--label-column", run_args.label_column, "Label column name");
  run->add_option("--models", run_args.models_dir, "Judge model directory");
  run->add_option("--out", run_args.out_dir, "Output directory (report.json, ledger.csv)")->required();
  run->add_option("--seed", run_args.seed, "Seed")->required();
  run->add_option("--mode", run_mode, "flfe, model_eval_baseline or he_model_baseline");
  run->add_option("--bins", run_args.protocol.sketch.bins, "Sketch bins per class column");
  run->add_option("--scale-k", run_args.protocol.sketch.scale_k, "Sketch scaling half-range");
  run->add_option("--float-width", run_args.protocol.sketch.float_width, "Sketch element width (4 or 8)");
  run->add_option("--conf-threshold", run_args.protocol.conf_threshold, "Recommendation threshold");
  run->add_option("--max-loop", run_args.protocol.max_loop, "Loop budget")->required();
  run->add_option("--kinds", run_kind_names, "Restrict to these transform names");
  run->add_option("--feature-width", run_args.protocol.feature_width, "Bytes per true-feature element");
  run->add_flag("--unary-pass", run_args.protocol.unary_pass, "Judge unary kinds locally first");
  bool no_generated_parents = false;
  run->add_flag("--no-generated-parents", no_generated_parents, "Exclude stored features from later candidates");
  run->add_option("--eval-model", run_eval_model, "Baseline evaluation model");
  run->add_option("--improvement-threshold", run_args.protocol.improvement_threshold,
                  "Baseline acceptance threshold");
  run->add_option("--eval-folds", run_args.protocol.eval_folds, "Baseline evaluation folds");
  run->add_flag("--include-values", run_args.include_values, "Write stored feature values into the report");

  // report -------------------------------------------------------------------
  auto* rep = app.add_subcommand("report", "Summarize runs: f1 before/after, added features, byte series");
  flfe::ReportArgs rep_args;
  std::string rep_test_model = "logistic_regression";
  rep->add_option("--run", rep_args.runs, "Run report.json paths")->required();
  rep->add_option("--out", rep_args.out, "Summary output path")->required();
  rep->add_option("--seed", rep_args.seed, "Seed")->required();
  rep->add_option("--test-model", rep_test_model, "logistic_regression or random_forest");
  rep->add_option("--cv-folds", rep_args.cv_folds, "Folds for f1 evaluation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      gen_args.kinds = parse_kinds(gen_kind_names);
      gen_args.labeling.base_model = parse_base_model(gen_base_model);
      if (!gen_report.empty()) gen_args.report = gen_report;
      flfe::cmd_gen_corpus(gen_args);
    } else if (train->parsed()) {
      flfe::cmd_train_judges(train_args);
    } else if (run->parsed()) {
      if (!run_kind_names.empty()) run_args.protocol.kinds = parse_kinds(run_kind_names);
      const auto mode = flfe::run_mode_from_string(run_mode);
      if (!mode) throw flfe::ConfigError("unknown mode: " + run_mode);
      run_args.protocol.mode = *mode;
      run_args.protocol.generated_parents = !no_generated_parents;
      run_args.protocol.eval_model = parse_base_model(run_eval_model);
      flfe::cmd_run(run_args);
    } else if (rep->parsed()) {
      rep_args.test_model = parse_base_model(rep_test_model);
      flfe::cmd_report(rep_args);
    }
  } catch (const flfe::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const flfe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
