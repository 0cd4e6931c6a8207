#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flfe/corpus.hpp"
#include "flfe/protocol.hpp"

namespace flfe {

/// Command implementations behind the `flfe` binary. Each is a pure
/// function of its arguments and the seed: re-running writes byte
/// identical artifacts. The binary maps exceptions to exit codes
/// (ConfigError and invalid arguments -> 2, DataError -> 3).

struct GenCorpusArgs {
  std::vector<std::filesystem::path> inputs;  // CSV files or directories of CSVs
  std::string label_column = "label";
  std::filesystem::path out;                     // corpus JSON-lines
  std::optional<std::filesystem::path> report;   // generation report JSON
  std::uint64_t seed = 0;
  SketchConfig sketch;
  LabelingConfig labeling;
  std::vector<TransformKind> kinds;  // empty = all 14
};

void cmd_gen_corpus(const GenCorpusArgs& args);

struct TrainJudgesArgs {
  std::filesystem::path corpus;
  std::filesystem::path out_dir;  // one <kind>.json per covered kind + metrics.json
  std::uint64_t seed = 0;
  TrainHyper hyper;
};

void cmd_train_judges(const TrainJudgesArgs& args);

struct RunArgs {
  std::filesystem::path dataset;
  std::filesystem::path partition;  // JSON: party name -> [feature names]
  std::string label_column = "label";
  std::filesystem::path models_dir;  // required for flfe / he modes
  std::filesystem::path out_dir;     // writes report.json + ledger.csv
  std::uint64_t seed = 0;
  ProtocolConfig protocol;
  bool include_values = false;  // stored feature values go into the report only on request
};

nlohmann::json cmd_run(const RunArgs& args);

struct ReportArgs {
  std::vector<std::filesystem::path> runs;  // report.json files from cmd_run
  std::filesystem::path out;
  std::uint64_t seed = 0;
  BaseModelConfig test_model;
  int cv_folds = 10;
};

nlohmann::json cmd_report(const ReportArgs& args);

/// Partition spec: a JSON object mapping party name to an array of
/// feature names.
PartyAssignment read_partition_spec(const std::filesystem::path& path);

/// Recomputes every stored feature from its lineage against the original
/// dataset, in loop order. Used by cmd_report so run reports do not need
/// to carry raw values.
std::vector<GeneratedFeature> replay_lineage(const nlohmann::json& report, const Table& table,
                                             const PartyAssignment& assignment);

std::map<TransformKind, JudgeModel> load_judge_dir(const std::filesystem::path& dir);

}  // namespace flfe
