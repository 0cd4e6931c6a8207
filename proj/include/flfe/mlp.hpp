#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flfe/common.hpp"
#include "flfe/transforms.hpp"

namespace flfe {

/// Binary outcome a judge predicts for a transformation candidate.
enum class Usefulness : int { useful = 0, useless = 1 };

struct TrainHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 1e-4;
  double dropout_rate = 0.5;
  int epochs = 200;
  int batch = 32;
  int patience = 20;
  int hidden_dim = 64;
  std::uint64_t seed = 0;
};

/// One-hidden-layer ReLU network with a 2-way softmax head, mapping a
/// flattened sketch array to (p_useful, p_useless).
struct JudgeModel {
  TransformKind transform = TransformKind::sum;
  int input_dim = 0;
  int hidden_dim = 0;
  Eigen::MatrixXd w1;  // hidden_dim x input_dim
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // 2 x hidden_dim
  Eigen::VectorXd b2;

  Eigen::Index parameter_count() const;
  /// Parameters flattened as [w1 row-major, b1, w2 row-major, b2].
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& packed);
};

JudgeModel init_judge_model(TransformKind transform, int input_dim, int hidden_dim, std::uint64_t seed);

struct DropoutSpec {
  double rate = 0.5;
  std::uint64_t seed = 0;
};

/// Forward pass. With dropout active, hidden units are zeroed i.i.d. at
/// `rate` and survivors scaled by 1/(1-rate); masks are drawn from the
/// spec's seed.
Eigen::Vector2d mlp_forward(const JudgeModel& model, const Eigen::VectorXd& x,
                            const std::optional<DropoutSpec>& dropout = std::nullopt);

struct Batch {
  Eigen::MatrixXd x;       // n x input_dim
  std::vector<int> y;      // 0 = useful, 1 = useless
};

struct LossAndGrad {
  double loss = 0;
  Eigen::VectorXd grad;  // packed, same layout as JudgeModel::pack
};

/// Mean cross-entropy plus l2 * sum of squared weights, with gradients by
/// backpropagation. When dropout is given, one mask per sample is drawn
/// up front and held fixed for the whole forward/backward pass.
LossAndGrad mlp_loss_and_grad(const JudgeModel& model, const Batch& batch, const TrainHyper& hyper,
                              const std::optional<DropoutSpec>& dropout = std::nullopt);

struct AdamState {
  Eigen::ArrayXd m;
  Eigen::ArrayXd v;
};

/// Standard bias-corrected Adam update, in place. t is the 1-based step.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const TrainHyper& hyper, int t);

struct TrainMetrics {
  int epochs_run = 0;
  double best_val_loss = 0;
  double train_accuracy = 0;
  double val_accuracy = 0;
};

struct TrainedJudge {
  JudgeModel model;
  TrainMetrics metrics;
};

/// Trains a judge on labeled flattened sketches with a 90/10 validation
/// split, returning the weights with the best validation loss. Stops
/// early when validation loss has not improved for `patience` epochs.
/// Fully deterministic per hyper.seed.
TrainedJudge train_judge(TransformKind transform, const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const TrainHyper& hyper);

double mlp_accuracy(const JudgeModel& model, const Eigen::MatrixXd& x, const std::vector<int>& y);

/// Model file format: a JSON document {transform, input_dim, hidden_dim,
/// W1, b1, W2, b2, hyper, corpus_fingerprint} with weights as row-major
/// arrays.
void save_judge(const std::filesystem::path& path, const JudgeModel& model, const TrainHyper& hyper,
                const std::string& corpus_fingerprint);
JudgeModel load_judge(const std::filesystem::path& path);

}  // namespace flfe
