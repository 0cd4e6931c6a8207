#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "flfe/base_models.hpp"
#include "flfe/corpus.hpp"
#include "flfe/dataset.hpp"
#include "flfe/fednet.hpp"
#include "flfe/mlp.hpp"
#include "flfe/rng.hpp"
#include "flfe/sketch.hpp"
#include "flfe/transforms.hpp"

namespace flfe {

enum class RunMode { flfe, model_eval_baseline, he_model_baseline };

std::string_view to_string(RunMode mode);
std::optional<RunMode> run_mode_from_string(std::string_view name);

/// Node id of the coordinator in every transcript.
inline constexpr const char* kServerNode = "server";

struct ProtocolConfig {
  SketchConfig sketch;
  double conf_threshold = 0.8;
  int max_loop = 0;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::flfe;

  /// Kinds eligible for the run; binary members drive the main loop,
  /// unary members drive the optional local pass.
  std::vector<TransformKind> kinds{TransformKind::sum, TransformKind::subtraction,
                                   TransformKind::multiplication, TransformKind::division};

  int feature_width = 8;          ///< bytes per element for true-feature payloads
  bool generated_parents = true;  ///< stored features may parent later candidates
  bool unary_pass = false;        ///< judge unary kinds locally before the main loop

  /// Evaluation settings for the oracle judge and the baselines.
  BaseModelConfig eval_model;
  double improvement_threshold = 0.01;
  int eval_folds = 10;
  int he_plain_bits = 8;
  int he_cipher_bits = 256;
};

struct CandidateRef {
  std::string owner_a;
  std::string feature_a;
  std::string owner_b;   // empty for unary judgements
  std::string feature_b; // empty for unary judgements
  TransformKind kind = TransformKind::sum;

  friend bool operator<(const CandidateRef& x, const CandidateRef& y) {
    return std::tie(x.owner_a, x.feature_a, x.owner_b, x.feature_b, x.kind) <
           std::tie(y.owner_a, y.feature_a, y.owner_b, y.feature_b, y.kind);
  }
  friend bool operator==(const CandidateRef& x, const CandidateRef& y) {
    return std::tie(x.owner_a, x.feature_a, x.owner_b, x.feature_b, x.kind) ==
           std::tie(y.owner_a, y.feature_a, y.owner_b, y.feature_b, y.kind);
  }
};

struct LoopRecord {
  int loop = 0;
  CandidateRef candidate;
  double confidence = 0;
  bool recommended = false;
  std::optional<std::string> generated;
  double judge_seconds = 0;
  double generate_seconds = 0;
};

struct GeneratedFeature {
  std::string name;
  CandidateRef lineage;
  int loop = 0;
  Eigen::VectorXd values;
};

/// What a judge sees for one candidate: the flattened sketch per
/// one-vs-all split, plus (for evaluation-style judges only) the
/// plaintext context the simulation can expose.
struct JudgeInput {
  TransformKind kind = TransformKind::sum;
  std::vector<Eigen::VectorXd> qsa_per_split;
  Eigen::MatrixXd parents;
  Eigen::VectorXd candidate;
  const std::vector<int>* labels = nullptr;
  std::uint64_t eval_seed = 0;
};

class Judge {
 public:
  virtual ~Judge() = default;
  virtual bool needs_plaintext() const { return false; }
  virtual double confidence(const JudgeInput& input) const = 0;
};

/// Trained-model judge: mean p_useful over the one-vs-all splits.
class MlpJudge final : public Judge {
 public:
  explicit MlpJudge(std::map<TransformKind, JudgeModel> models) : models_(std::move(models)) {}
  const std::map<TransformKind, JudgeModel>& models() const { return models_; }
  double confidence(const JudgeInput& input) const override;

 private:
  std::map<TransformKind, JudgeModel> models_;
};

/// Constant-confidence judge for tests and byte accounting.
class StubJudge final : public Judge {
 public:
  explicit StubJudge(double value) : value_(value) {}
  double confidence(const JudgeInput&) const override { return value_; }

 private:
  double value_;
};

/// Ground-truth judge: returns 1 when the candidate improves the base
/// model's cross-validated f1 by at least the threshold, else 0.
class OracleJudge final : public Judge {
 public:
  OracleJudge(BaseModelConfig model, double improvement_threshold, int folds)
      : model_(std::move(model)), threshold_(improvement_threshold), folds_(folds) {}
  bool needs_plaintext() const override { return true; }
  double confidence(const JudgeInput& input) const override;

 private:
  BaseModelConfig model_;
  double threshold_;
  int folds_;
};

struct RunResult {
  std::vector<LoopRecord> records;
  std::vector<GeneratedFeature> store;
  std::vector<LedgerEntry> ledger;
  std::vector<Message> transcript;
  LedgerSummary summary() const { return summarize_ledger(ledger); }
};

/// Executes the coordinator/participant state machines over the simulated
/// transport: per loop, candidate selection, sketch-based judging and (on
/// a recommendation) masked feature generation. Baseline modes replace
/// the judging transmissions (model-evaluation) or the generation byte
/// accounting (homomorphic encryption) while keeping the decision
/// sequence comparable.
class ProtocolRun {
 public:
  ProtocolRun(std::vector<PartyView> parties, const Judge& judge, ProtocolConfig cfg,
              bool capture_transcript = false);

  /// Uniformly selects an unjudged cross-party candidate. Throws
  /// std::runtime_error once the space is exhausted.
  CandidateRef select_candidate();
  std::size_t remaining_candidates() const;

  /// One judging round for a binary candidate (sketch to the partner
  /// device, pair sketch array to the server, verdicts back).
  double judge_a_qsa(const CandidateRef& cand, int loop);

  /// Masked feature generation for a recommended candidate; stores the
  /// unmasked result at the server with lineage.
  std::string generate_new_feature(const CandidateRef& cand, int loop);

  /// Local-judging flow for unary kinds: only the sketch travels; a
  /// recommended transform is applied locally and the feature stays with
  /// its owner.
  double judge_unary_local(const std::string& party, const std::string& feature, TransformKind kind,
                           int loop);

  RunResult run();

  const Network& network() const { return net_; }
  const std::vector<GeneratedFeature>& store() const { return store_; }
  const std::vector<LoopRecord>& records() const { return records_; }

 private:
  struct Participant {
    PartyView view;
    std::vector<FeatureColumn> locals;    // unary results, never transmitted
    std::vector<std::string> returned;    // eval baseline: generated features held for re-upload
  };

  const Eigen::VectorXd& resolve(const std::string& owner, const std::string& feature) const;
  Participant& participant(const std::string& name);
  const Participant& participant(const std::string& name) const;
  std::vector<CandidateRef> unjudged_candidates() const;
  std::vector<int> splits() const;

  Eigen::VectorXd sketch_stack_single(const Eigen::VectorXd& values, const std::vector<int>& labels) const;
  void fill_plaintext(JudgeInput& input, const CandidateRef& cand, int loop) const;
  double judge_flfe(const CandidateRef& cand, int loop);
  double judge_eval(const CandidateRef& cand, int loop);
  void generate_flfe(const CandidateRef& cand, int loop, GeneratedFeature& out);
  void generate_he(const CandidateRef& cand, int loop, GeneratedFeature& out);
  void generate_eval(const CandidateRef& cand, int loop, GeneratedFeature& out);
  void send_control(const std::string& from, const std::string& to, MessageKind kind, int loop);

  std::vector<Participant> parties_;
  const Judge& judge_;
  ProtocolConfig cfg_;
  Network net_;
  Rng select_rng_;
  std::set<CandidateRef> judged_;
  std::vector<GeneratedFeature> store_;
  std::vector<LoopRecord> records_;
  std::unique_ptr<OracleJudge> eval_judge_;  // owns the baseline's evaluation judge
};

}  // namespace flfe
