#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flfe/base_models.hpp"
#include "flfe/dataset.hpp"
#include "flfe/mlp.hpp"
#include "flfe/sketch.hpp"
#include "flfe/transforms.hpp"

namespace flfe {

struct SampleMeta {
  std::string dataset;
  std::vector<std::string> parents;
  int positive_class = 0;
  double improvement = 0;
  int crop = 0;           // 0 = built from the full rows, >0 = crop index
  bool synthetic = false; // SMOTE-generated
};

struct CorpusSample {
  TransformKind transform = TransformKind::sum;
  Eigen::VectorXd qsa;
  Usefulness label = Usefulness::useless;
  SampleMeta meta;
};

struct LabelingConfig {
  BaseModelConfig base_model;
  double improvement_threshold = 0.01;
  int cv_folds = 10;
  int crop_count = 3;
  std::pair<double, double> crop_range{0.5, 0.9};
  double smote_target_ratio = 1.0;
};

/// Labels a candidate by base-model evaluation: improvement =
/// cv_f1(parents + new) - cv_f1(parents), useful iff improvement >=
/// the threshold. Both evaluations share one fold split.
std::pair<Usefulness, double> label_candidate(const Eigen::MatrixXd& parents,
                                              const Eigen::VectorXd& new_feature,
                                              const std::vector<int>& labels, const LabelingConfig& cfg,
                                              std::uint64_t seed);

struct CorpusReport {
  std::map<std::string, std::map<std::string, int>> per_kind;  // kind -> {"useful": n, "useless": n, "synthetic": n}
  int candidates = 0;
  int skipped = 0;
  std::vector<std::string> skipped_notes;
};

/// Enumerates every eligible candidate of every dataset (unary kinds per
/// numeric feature; binary kinds per feature pair, both orders for the
/// non-commutative kinds), labels each by base-model evaluation, sketches
/// one base sample plus crop_count cropped samples per one-vs-all class
/// split, then SMOTE-balances the minority label per kind. Output order
/// is canonical (sorted by transform and meta); deterministic per seed.
std::vector<CorpusSample> generate_corpus(const std::vector<Table>& datasets,
                                          const std::vector<TransformKind>& kinds,
                                          const SketchConfig& sketch_cfg, const LabelingConfig& labeling,
                                          std::uint64_t seed, CorpusReport* report = nullptr);

/// Corpus file format: one JSON object per line
/// {transform, qsa, label, meta}.
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusSample>& samples);
std::vector<CorpusSample> read_corpus(const std::filesystem::path& path);

/// FNV-1a fingerprint of one kind's serialized samples; stored in model
/// files so a model can be traced to the corpus it was trained on.
std::string corpus_fingerprint(const std::vector<CorpusSample>& samples, TransformKind kind);

struct JudgeTrainingOutcome {
  std::map<TransformKind, TrainedJudge> judges;
  std::vector<std::string> skipped_kinds;  // kinds without both labels
};

/// Trains one judge per transformation kind present with both labels.
JudgeTrainingOutcome train_all_judges(const std::vector<CorpusSample>& samples, const TrainHyper& hyper);

}  // namespace flfe
