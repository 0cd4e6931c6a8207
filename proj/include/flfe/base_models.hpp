#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flfe/common.hpp"

namespace flfe {

enum class BaseModelType { logistic_regression, random_forest };

struct LogisticRegressionParams {
  double lr = 0.1;
  int iterations = 300;
};

struct RandomForestParams {
  int trees = 100;
  int max_depth = 8;
  int min_split = 2;
  bool bootstrap = true;  // off: every tree sees all rows
};

struct BaseModelConfig {
  BaseModelType type = BaseModelType::logistic_regression;
  LogisticRegressionParams logreg;
  RandomForestParams forest;
};

std::string_view to_string(BaseModelType type);
std::optional<BaseModelType> base_model_from_string(std::string_view name);

/// A fitted base/test model. Immutable after fit; safe for concurrent
/// prediction.
class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual std::vector<int> predict(const Eigen::MatrixXd& x) const = 0;
};

/// Fits the requested model. Logistic regression is full-batch gradient
/// descent on log-loss, one-vs-rest for multi-class, with internal
/// feature standardization; the random forest is bagged CART with Gini
/// impurity, per-split feature subsampling and majority vote. Both are
/// deterministic per seed.
std::unique_ptr<FittedModel> fit_base(const BaseModelConfig& cfg, const Eigen::MatrixXd& x,
                                      const std::vector<int>& y, std::uint64_t seed);

/// 2PR/(P+R) for the given positive class; 0 when P+R is 0.
double f1_score(const std::vector<int>& pred, const std::vector<int>& truth, int positive);

/// Macro-averaged f1 over classes 0..n_classes-1.
double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, int n_classes);

/// Mean per-fold f1 over a plain shuffled k-fold split: the positive-class
/// f1 for binary labels, macro-averaged f1 otherwise.
double cv_f1(const BaseModelConfig& cfg, const Eigen::MatrixXd& x, const std::vector<int>& y, int folds,
             std::uint64_t seed);

}  // namespace flfe
