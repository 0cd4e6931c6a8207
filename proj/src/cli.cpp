#include "flfe/cli.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "flfe/rng.hpp"

namespace flfe {

using nlohmann::json;

namespace {

std::vector<std::filesystem::path> collect_csvs(const std::vector<std::filesystem::path>& inputs) {
  std::vector<std::filesystem::path> files;
  for (const auto& input : inputs) {
    if (std::filesystem::is_directory(input)) {
      for (const auto& entry : std::filesystem::directory_iterator(input))
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
    } else {
      files.push_back(input);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no CSV inputs found");
  return files;
}

json kind_list_json(const std::vector<TransformKind>& kinds) {
  json arr = json::array();
  for (TransformKind k : kinds) arr.push_back(std::string(to_string(k)));
  return arr;
}

json base_model_json(const BaseModelConfig& cfg) {
  return json{
      {"type", std::string(to_string(cfg.type))},
      {"logreg", {{"lr", cfg.logreg.lr}, {"iterations", cfg.logreg.iterations}}},
      {"forest",
       {{"trees", cfg.forest.trees}, {"max_depth", cfg.forest.max_depth}, {"min_split", cfg.forest.min_split}}},
  };
}

BaseModelConfig base_model_from_json(const json& doc) {
  BaseModelConfig cfg;
  const auto type = base_model_from_string(doc.at("type").get<std::string>());
  if (!type) throw DataError("unknown base model type in report");
  cfg.type = *type;
  cfg.logreg.lr = doc.at("logreg").at("lr").get<double>();
  cfg.logreg.iterations = doc.at("logreg").at("iterations").get<int>();
  cfg.forest.trees = doc.at("forest").at("trees").get<int>();
  cfg.forest.max_depth = doc.at("forest").at("max_depth").get<int>();
  cfg.forest.min_split = doc.at("forest").at("min_split").get<int>();
  return cfg;
}

json candidate_json(const CandidateRef& cand) {
  return json{{"owner_a", cand.owner_a},
              {"feature_a", cand.feature_a},
              {"owner_b", cand.owner_b},
              {"feature_b", cand.feature_b},
              {"kind", std::string(to_string(cand.kind))}};
}

CandidateRef candidate_from_json(const json& doc) {
  CandidateRef cand;
  cand.owner_a = doc.at("owner_a").get<std::string>();
  cand.feature_a = doc.at("feature_a").get<std::string>();
  cand.owner_b = doc.at("owner_b").get<std::string>();
  cand.feature_b = doc.at("feature_b").get<std::string>();
  const auto kind = transform_from_string(doc.at("kind").get<std::string>());
  if (!kind) throw DataError("unknown transform in report lineage");
  cand.kind = *kind;
  return cand;
}

}  // namespace

PartyAssignment read_partition_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open partition spec " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("partition spec " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || doc.empty()) throw DataError("partition spec must be a non-empty JSON object");
  PartyAssignment assignment;
  for (const auto& [party, features] : doc.items()) {
    std::vector<std::string> names;
    for (const auto& f : features) names.push_back(f.get<std::string>());
    assignment.emplace_back(party, std::move(names));
  }
  return assignment;
}

void cmd_gen_corpus(const GenCorpusArgs& args) {
  const auto files = collect_csvs(args.inputs);
  std::vector<Table> tables;
  tables.reserve(files.size());
  for (const auto& f : files) tables.push_back(load_table(f, args.label_column));

  std::vector<TransformKind> kinds = args.kinds;
  if (kinds.empty()) kinds.assign(all_transforms().begin(), all_transforms().end());

  CorpusReport report;
  const auto samples = generate_corpus(tables, kinds, args.sketch, args.labeling, args.seed, &report);
  write_corpus(args.out, samples);

  if (args.report) {
    json doc;
    doc["datasets"] = json::array();
    for (const auto& t : tables)
      doc["datasets"].push_back({{"name", t.name}, {"rows", t.rows}, {"classes", t.n_classes}});
    doc["kinds"] = kind_list_json(kinds);
    doc["candidates"] = report.candidates;
    doc["skipped"] = report.skipped;
    doc["skipped_notes"] = report.skipped_notes;
    doc["per_kind"] = report.per_kind;
    doc["samples"] = samples.size();
    doc["seed"] = args.seed;
    std::ofstream out(*args.report);
    if (!out) throw DataError("cannot write report " + args.report->string());
    out << doc.dump(2) << "\n";
  }
}

void cmd_train_judges(const TrainJudgesArgs& args) {
  const auto samples = read_corpus(args.corpus);
  if (samples.empty()) throw DataError("corpus is empty: " + args.corpus.string());
  TrainHyper hyper = args.hyper;
  hyper.seed = args.seed;
  const auto outcome = train_all_judges(samples, hyper);

  std::filesystem::create_directories(args.out_dir);
  json metrics;
  metrics["seed"] = args.seed;
  metrics["skipped_kinds"] = outcome.skipped_kinds;
  json per_kind = json::object();
  for (const auto& [kind, trained] : outcome.judges) {
    const std::string name(to_string(kind));
    save_judge(args.out_dir / (name + ".json"), trained.model, hyper,
               corpus_fingerprint(samples, kind));
    per_kind[name] = {
        {"epochs_run", trained.metrics.epochs_run},
        {"best_val_loss", trained.metrics.best_val_loss},
        {"train_accuracy", trained.metrics.train_accuracy},
        {"val_accuracy", trained.metrics.val_accuracy},
    };
  }
  metrics["per_kind"] = per_kind;
  std::ofstream out(args.out_dir / "metrics.json");
  if (!out) throw DataError("cannot write metrics.json under " + args.out_dir.string());
  out << metrics.dump(2) << "\n";
}

std::map<TransformKind, JudgeModel> load_judge_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a model directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".json" && entry.path().filename() != "metrics.json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::map<TransformKind, JudgeModel> models;
  for (const auto& f : files) {
    JudgeModel m = load_judge(f);
    models.emplace(m.transform, std::move(m));
  }
  return models;
}

namespace {

json protocol_config_json(const RunArgs& args) {
  const ProtocolConfig& p = args.protocol;
  return json{
      {"dataset", args.dataset.string()},
      {"partition", args.partition.string()},
      {"label_column", args.label_column},
      {"mode", std::string(to_string(p.mode))},
      {"seed", p.seed},
      {"sketch", {{"bins", p.sketch.bins}, {"scale_k", p.sketch.scale_k}, {"float_width", p.sketch.float_width}}},
      {"conf_threshold", p.conf_threshold},
      {"max_loop", p.max_loop},
      {"kinds", kind_list_json(p.kinds)},
      {"feature_width", p.feature_width},
      {"generated_parents", p.generated_parents},
      {"unary_pass", p.unary_pass},
      {"eval_model", base_model_json(p.eval_model)},
      {"improvement_threshold", p.improvement_threshold},
      {"eval_folds", p.eval_folds},
      {"include_values", args.include_values},
  };
}

}  // namespace

nlohmann::json cmd_run(const RunArgs& args) {
  const Table table = load_table(args.dataset, args.label_column);
  const PartyAssignment assignment = read_partition_spec(args.partition);
  std::vector<PartyView> parties = vertical_split(table, assignment);

  ProtocolConfig cfg = args.protocol;
  cfg.seed = args.seed;

  std::map<TransformKind, JudgeModel> models;
  std::unique_ptr<Judge> judge;
  if (cfg.mode == RunMode::model_eval_baseline) {
    judge = std::make_unique<StubJudge>(0.0);  // the baseline judges by evaluation internally
  } else {
    models = load_judge_dir(args.models_dir);
    for (TransformKind kind : cfg.kinds) {
      if (!cfg.unary_pass && arity(kind) == 1) continue;
      if (!models.count(kind))
        throw ConfigError("missing judge model for transform " + std::string(to_string(kind)));
    }
    judge = std::make_unique<MlpJudge>(std::move(models));
  }

  ProtocolRun run(std::move(parties), *judge, cfg);
  const RunResult result = run.run();

  json doc;
  doc["config"] = protocol_config_json(args);
  json records = json::array();
  for (const auto& rec : result.records) {
    json r{{"loop", rec.loop},
           {"candidate", candidate_json(rec.candidate)},
           {"confidence", rec.confidence},
           {"recommended", rec.recommended}};
    if (rec.generated) r["generated"] = *rec.generated;
    records.push_back(std::move(r));
  }
  doc["loop_records"] = std::move(records);
  json store = json::array();
  for (const auto& g : result.store) {
    json s{{"name", g.name}, {"loop", g.loop}, {"lineage", candidate_json(g.lineage)}};
    if (args.include_values) {
      json values = json::array();
      for (Eigen::Index i = 0; i < g.values.size(); ++i) values.push_back(g.values[i]);
      s["values"] = std::move(values);
    }
    store.push_back(std::move(s));
  }
  doc["feature_store"] = std::move(store);
  doc["ledger_summary"] = summary_to_json(result.summary());

  std::filesystem::create_directories(args.out_dir);
  std::ofstream out(args.out_dir / "report.json");
  if (!out) throw DataError("cannot write report under " + args.out_dir.string());
  out << doc.dump(2) << "\n";
  write_ledger_csv(args.out_dir / "ledger.csv", result.ledger);
  return doc;
}

std::vector<GeneratedFeature> replay_lineage(const json& report, const Table& table,
                                             const PartyAssignment& assignment) {
  const std::vector<PartyView> parties = vertical_split(table, assignment);
  std::map<std::pair<std::string, std::string>, Eigen::VectorXd> columns;
  for (const auto& p : parties)
    for (const auto& f : p.features) columns[{p.name, f.name}] = f.values;

  auto resolve = [&](const std::string& owner, const std::string& name) -> const Eigen::VectorXd& {
    auto it = columns.find({owner, name});
    if (it == columns.end()) throw DataError("replay: unknown feature " + name + " at " + owner);
    return it->second;
  };

  std::vector<GeneratedFeature> out;
  // accepted unary transforms first (loop 0 records), then stored
  // features in loop order; both recompute directly from lineage
  for (const auto& rec : report.at("loop_records")) {
    if (!rec.at("recommended").get<bool>() || !rec.contains("generated")) continue;
    const CandidateRef cand = candidate_from_json(rec.at("candidate"));
    if (!cand.owner_b.empty()) continue;  // binary results live in the store list
    GeneratedFeature g;
    g.name = rec.at("generated").get<std::string>();
    g.lineage = cand;
    g.loop = rec.at("loop").get<int>();
    g.values = apply_unary(cand.kind, resolve(cand.owner_a, cand.feature_a), table.label);
    columns[{cand.owner_a, g.name}] = g.values;
    out.push_back(std::move(g));
  }
  for (const auto& s : report.at("feature_store")) {
    const CandidateRef cand = candidate_from_json(s.at("lineage"));
    GeneratedFeature g;
    g.name = s.at("name").get<std::string>();
    g.lineage = cand;
    g.loop = s.at("loop").get<int>();
    g.values = apply_binary(cand.kind, resolve(cand.owner_a, cand.feature_a),
                            resolve(cand.owner_b, cand.feature_b));
    columns[{std::string(kServerNode), g.name}] = g.values;
    out.push_back(std::move(g));
  }
  return out;
}

nlohmann::json cmd_report(const ReportArgs& args) {
  if (args.runs.empty()) throw ConfigError("cmd_report: no run reports given");
  json doc;
  doc["runs"] = json::array();
  for (const auto& run_path : args.runs) {
    std::ifstream in(run_path);
    if (!in) throw DataError("cannot open run report " + run_path.string());
    json report;
    try {
      in >> report;
    } catch (const json::exception& e) {
      throw DataError("run report " + run_path.string() + ": " + e.what());
    }
    const auto& cfg = report.at("config");
    const Table table = load_table(cfg.at("dataset").get<std::string>(), cfg.at("label_column").get<std::string>());
    const PartyAssignment assignment = read_partition_spec(cfg.at("partition").get<std::string>());
    const std::vector<PartyView> parties = vertical_split(table, assignment);

    Eigen::Index n_original = 0;
    for (const auto& p : parties) n_original += static_cast<Eigen::Index>(p.features.size());
    const auto generated = replay_lineage(report, table, assignment);

    Eigen::MatrixXd bench(table.rows, n_original);
    Eigen::Index col = 0;
    for (const auto& p : parties)
      for (const auto& f : p.features) bench.col(col++) = f.values;
    Eigen::MatrixXd post(table.rows, n_original + static_cast<Eigen::Index>(generated.size()));
    post.leftCols(n_original) = bench;
    for (std::size_t i = 0; i < generated.size(); ++i)
      post.col(n_original + static_cast<Eigen::Index>(i)) = generated[i].values;

    const double bench_f1 = cv_f1(args.test_model, bench, table.label, args.cv_folds, args.seed);
    const double post_f1 = generated.empty()
                               ? bench_f1
                               : cv_f1(args.test_model, post, table.label, args.cv_folds, args.seed);

    json entry;
    entry["mode"] = cfg.at("mode");
    entry["dataset"] = table.name;
    entry["bench_f1"] = bench_f1;
    entry["post_f1"] = post_f1;
    entry["features_added"] = generated.size();
    entry["total_bytes"] = report.at("ledger_summary").at("total_bytes");
    entry["series"] = report.at("ledger_summary").at("series");
    doc["runs"].push_back(std::move(entry));
  }
  doc["test_model"] = base_model_json(args.test_model);
  doc["cv_folds"] = args.cv_folds;
  doc["seed"] = args.seed;

  std::ofstream out(args.out);
  if (!out) throw DataError("cannot write summary report " + args.out.string());
  out << doc.dump(2) << "\n";
  return doc;
}

}  // namespace flfe
