#include "flfe/base_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>

#include "flfe/dataset.hpp"
#include "flfe/rng.hpp"

namespace flfe {
namespace {

int class_count(const std::vector<int>& y) {
  int n = 0;
  for (int v : y) n = std::max(n, v + 1);
  return n;
}

// ---------------------------------------------------------------------------
// logistic regression

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    Eigen::RowVectorXd var = (x.rowwise() - s.mean).array().square().colwise().mean();
    s.scale = var.array().sqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
      if (s.scale[j] == 0.0) s.scale[j] = 1.0;
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

class LogisticRegressionModel final : public FittedModel {
 public:
  LogisticRegressionModel(const LogisticRegressionParams& params, const Eigen::MatrixXd& x,
                          const std::vector<int>& y) {
    n_classes_ = class_count(y);
    std::set<int> distinct(y.begin(), y.end());
    if (distinct.size() < 2) throw std::invalid_argument("logistic regression: single-class labels");
    std_ = Standardizer::fit(x);
    const Eigen::MatrixXd xs = std_.apply(x);
    const Eigen::Index n = xs.rows(), d = xs.cols();
    w_ = Eigen::MatrixXd::Zero(n_classes_, d);
    b_ = Eigen::VectorXd::Zero(n_classes_);
    for (int c = 0; c < n_classes_; ++c) {
      Eigen::VectorXd target(n);
      for (Eigen::Index i = 0; i < n; ++i) target[i] = y[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0;
      Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
      double b = 0.0;
      for (int it = 0; it < params.iterations; ++it) {
        const Eigen::VectorXd z = xs * w + Eigen::VectorXd::Constant(n, b);
        const Eigen::VectorXd p = 1.0 / (1.0 + (-z.array()).exp());
        const Eigen::VectorXd r = p - target;
        w -= params.lr / static_cast<double>(n) * (xs.transpose() * r);
        b -= params.lr / static_cast<double>(n) * r.sum();
      }
      w_.row(c) = w.transpose();
      b_[c] = b;
    }
  }

  std::vector<int> predict(const Eigen::MatrixXd& x) const override {
    const Eigen::MatrixXd xs = std_.apply(x);
    std::vector<int> out(static_cast<std::size_t>(xs.rows()));
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      const Eigen::VectorXd scores = w_ * xs.row(i).transpose() + b_;
      Eigen::Index best;
      scores.maxCoeff(&best);
      out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
  }

 private:
  int n_classes_ = 0;
  Standardizer std_;
  Eigen::MatrixXd w_;
  Eigen::VectorXd b_;
};

// ---------------------------------------------------------------------------
// random forest

struct TreeNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  int leaf = -1;
};

class Tree {
 public:
  Tree(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<Eigen::Index>& rows,
       int n_classes, const RandomForestParams& params, Rng& rng)
      : n_classes_(n_classes) {
    mtry_ = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
    build(x, y, rows, 0, params, rng);
  }

  int predict(const Eigen::RowVectorXd& x) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].leaf < 0) {
      const TreeNode& nd = nodes_[static_cast<std::size_t>(node)];
      node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(node)].leaf;
  }

 private:
  int majority(const std::vector<int>& y, const std::vector<Eigen::Index>& rows) const {
    std::vector<int> counts(static_cast<std::size_t>(n_classes_), 0);
    for (Eigen::Index r : rows) ++counts[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])];
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  static double gini(const std::vector<int>& counts, double total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (int c : counts) {
      const double p = c / total;
      g -= p * p;
    }
    return g;
  }

  int build(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<Eigen::Index>& rows,
            int depth, const RandomForestParams& params, Rng& rng) {
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    bool pure = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (y[static_cast<std::size_t>(rows[i])] != y[static_cast<std::size_t>(rows[0])]) {
        pure = false;
        break;
      }
    if (pure || depth >= params.max_depth || static_cast<int>(rows.size()) < params.min_split) {
      nodes_[static_cast<std::size_t>(node_id)].leaf = majority(y, rows);
      return node_id;
    }

    // sample mtry distinct candidate features
    std::vector<int> features(static_cast<std::size_t>(x.cols()));
    std::iota(features.begin(), features.end(), 0);
    for (int i = 0; i < mtry_; ++i) {
      const std::size_t j = i + rng.index(features.size() - static_cast<std::size_t>(i));
      std::swap(features[static_cast<std::size_t>(i)], features[j]);
    }
    features.resize(static_cast<std::size_t>(mtry_));

    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0;

    std::vector<std::pair<double, int>> sorted;
    sorted.reserve(rows.size());
    for (int f : features) {
      sorted.clear();
      for (Eigen::Index r : rows)
        sorted.emplace_back(x(r, f), y[static_cast<std::size_t>(r)]);
      std::sort(sorted.begin(), sorted.end());

      std::vector<int> left_counts(static_cast<std::size_t>(n_classes_), 0);
      std::vector<int> right_counts(static_cast<std::size_t>(n_classes_), 0);
      for (const auto& [v, c] : sorted) ++right_counts[static_cast<std::size_t>(c)];

      const double total = static_cast<double>(sorted.size());
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        ++left_counts[static_cast<std::size_t>(sorted[i].second)];
        --right_counts[static_cast<std::size_t>(sorted[i].second)];
        if (sorted[i].first == sorted[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1), nr = total - nl;
        const double impurity = (nl * gini(left_counts, nl) + nr * gini(right_counts, nr)) / total;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = f;
          best_threshold = sorted[i].first + 0.5 * (sorted[i + 1].first - sorted[i].first);
        }
      }
    }

    if (best_feature < 0) {
      nodes_[static_cast<std::size_t>(node_id)].leaf = majority(y, rows);
      return node_id;
    }

    std::vector<Eigen::Index> left_rows, right_rows;
    for (Eigen::Index r : rows)
      (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
    if (left_rows.empty() || right_rows.empty()) {
      nodes_[static_cast<std::size_t>(node_id)].leaf = majority(y, rows);
      return node_id;
    }

    nodes_[static_cast<std::size_t>(node_id)].feature = best_feature;
    nodes_[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    const int left_id = build(x, y, left_rows, depth + 1, params, rng);
    nodes_[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = build(x, y, right_rows, depth + 1, params, rng);
    nodes_[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  }

  int n_classes_;
  int mtry_;
  std::vector<TreeNode> nodes_;
};

class RandomForestModel final : public FittedModel {
 public:
  RandomForestModel(const RandomForestParams& params, const Eigen::MatrixXd& x, const std::vector<int>& y,
                    std::uint64_t seed) {
    n_classes_ = class_count(y);
    const Eigen::Index n = x.rows();
    trees_.reserve(static_cast<std::size_t>(params.trees));
    for (int t = 0; t < params.trees; ++t) {
      Rng rng(derive_seed(seed, "tree", static_cast<std::uint64_t>(t)));
      std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
      if (params.bootstrap) {
        for (auto& r : rows) r = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
      } else {
        std::iota(rows.begin(), rows.end(), Eigen::Index{0});
      }
      trees_.emplace_back(x, y, rows, n_classes_, params, rng);
    }
  }

  std::vector<int> predict(const Eigen::MatrixXd& x) const override {
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      std::vector<int> votes(static_cast<std::size_t>(n_classes_), 0);
      for (const Tree& t : trees_) ++votes[static_cast<std::size_t>(t.predict(x.row(i)))];
      out[static_cast<std::size_t>(i)] =
          static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    return out;
  }

 private:
  int n_classes_ = 0;
  std::vector<Tree> trees_;
};

}  // namespace

std::string_view to_string(BaseModelType type) {
  return type == BaseModelType::logistic_regression ? "logistic_regression" : "random_forest";
}

std::optional<BaseModelType> base_model_from_string(std::string_view name) {
  if (name == "logistic_regression") return BaseModelType::logistic_regression;
  if (name == "random_forest") return BaseModelType::random_forest;
  return std::nullopt;
}

std::unique_ptr<FittedModel> fit_base(const BaseModelConfig& cfg, const Eigen::MatrixXd& x,
                                      const std::vector<int>& y, std::uint64_t seed) {
  if (x.rows() == 0) throw std::invalid_argument("fit_base: empty feature matrix");
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw std::invalid_argument("fit_base: rows do not match labels");
  if (cfg.type == BaseModelType::logistic_regression)
    return std::make_unique<LogisticRegressionModel>(cfg.logreg, x, y);
  return std::make_unique<RandomForestModel>(cfg.forest, x, y, seed);
}

double f1_score(const std::vector<int>& pred, const std::vector<int>& truth, int positive) {
  if (pred.size() != truth.size()) throw std::invalid_argument("f1_score: length mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == positive;
    const bool t = truth[i] == positive;
    if (p && t) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
  }
  const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, int n_classes) {
  double sum = 0;
  for (int c = 0; c < n_classes; ++c) sum += f1_score(pred, truth, c);
  return sum / static_cast<double>(n_classes);
}

double cv_f1(const BaseModelConfig& cfg, const Eigen::MatrixXd& x, const std::vector<int>& y, int folds,
             std::uint64_t seed) {
  const int n_classes = class_count(y);
  const auto splits = kfold_indices(x.rows(), folds, derive_seed(seed, "folds"));
  double sum = 0;
  int fold_idx = 0;
  for (const Fold& fold : splits) {
    Eigen::MatrixXd x_train(static_cast<Eigen::Index>(fold.train.size()), x.cols());
    Eigen::MatrixXd x_test(static_cast<Eigen::Index>(fold.test.size()), x.cols());
    std::vector<int> y_train(fold.train.size()), y_test(fold.test.size());
    for (std::size_t i = 0; i < fold.train.size(); ++i) {
      x_train.row(static_cast<Eigen::Index>(i)) = x.row(fold.train[i]);
      y_train[i] = y[static_cast<std::size_t>(fold.train[i])];
    }
    for (std::size_t i = 0; i < fold.test.size(); ++i) {
      x_test.row(static_cast<Eigen::Index>(i)) = x.row(fold.test[i]);
      y_test[i] = y[static_cast<std::size_t>(fold.test[i])];
    }
    const auto model = fit_base(cfg, x_train, y_train, derive_seed(seed, "fold", static_cast<std::uint64_t>(fold_idx)));
    const auto pred = model->predict(x_test);
    sum += n_classes == 2 ? f1_score(pred, y_test, 1) : macro_f1(pred, y_test, n_classes);
    ++fold_idx;
  }
  return sum / static_cast<double>(splits.size());
}

}  // namespace flfe
