#include "flfe/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "flfe/rng.hpp"

namespace flfe {

using nlohmann::json;

Eigen::Index JudgeModel::parameter_count() const {
  return static_cast<Eigen::Index>(hidden_dim) * input_dim + hidden_dim + 2 * hidden_dim + 2;
}

Eigen::VectorXd JudgeModel::pack() const {
  Eigen::VectorXd out(parameter_count());
  Eigen::Index pos = 0;
  for (int r = 0; r < w1.rows(); ++r)
    for (int c = 0; c < w1.cols(); ++c) out[pos++] = w1(r, c);
  for (Eigen::Index i = 0; i < b1.size(); ++i) out[pos++] = b1[i];
  for (int r = 0; r < w2.rows(); ++r)
    for (int c = 0; c < w2.cols(); ++c) out[pos++] = w2(r, c);
  for (Eigen::Index i = 0; i < b2.size(); ++i) out[pos++] = b2[i];
  return out;
}

void JudgeModel::unpack(const Eigen::VectorXd& packed) {
  w1.resize(hidden_dim, input_dim);
  b1.resize(hidden_dim);
  w2.resize(2, hidden_dim);
  b2.resize(2);
  Eigen::Index pos = 0;
  for (int r = 0; r < w1.rows(); ++r)
    for (int c = 0; c < w1.cols(); ++c) w1(r, c) = packed[pos++];
  for (Eigen::Index i = 0; i < b1.size(); ++i) b1[i] = packed[pos++];
  for (int r = 0; r < w2.rows(); ++r)
    for (int c = 0; c < w2.cols(); ++c) w2(r, c) = packed[pos++];
  for (Eigen::Index i = 0; i < b2.size(); ++i) b2[i] = packed[pos++];
}

JudgeModel init_judge_model(TransformKind transform, int input_dim, int hidden_dim, std::uint64_t seed) {
  JudgeModel m;
  m.transform = transform;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  Rng rng(derive_seed(seed, "init"));
  auto glorot = [&](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-limit, limit);
    return w;
  };
  m.w1 = glorot(hidden_dim, input_dim);
  m.b1 = Eigen::VectorXd::Zero(hidden_dim);
  m.w2 = glorot(2, hidden_dim);
  m.b2 = Eigen::VectorXd::Zero(2);
  return m;
}

namespace {

Eigen::Vector2d softmax2(const Eigen::Vector2d& z) {
  const double mx = z.maxCoeff();
  Eigen::Vector2d e = (z.array() - mx).exp();
  return e / e.sum();
}

Eigen::VectorXd dropout_mask(Eigen::Index n, const DropoutSpec& spec, Rng& rng) {
  Eigen::VectorXd mask(n);
  const double keep_scale = 1.0 / (1.0 - spec.rate);
  for (Eigen::Index i = 0; i < n; ++i) mask[i] = rng.bernoulli(spec.rate) ? 0.0 : keep_scale;
  return mask;
}

}  // namespace

Eigen::Vector2d mlp_forward(const JudgeModel& model, const Eigen::VectorXd& x,
                            const std::optional<DropoutSpec>& dropout) {
  if (x.size() != model.input_dim) throw std::invalid_argument("mlp_forward: input dimension mismatch");
  Eigen::VectorXd hidden = ((model.w1 * x + model.b1).array().max(0.0)).matrix();
  if (dropout && dropout->rate > 0.0) {
    Rng rng(dropout->seed);
    hidden = hidden.cwiseProduct(dropout_mask(hidden.size(), *dropout, rng));
  }
  return softmax2(model.w2 * hidden + model.b2);
}

LossAndGrad mlp_loss_and_grad(const JudgeModel& model, const Batch& batch, const TrainHyper& hyper,
                              const std::optional<DropoutSpec>& dropout) {
  const Eigen::Index n = batch.x.rows();
  if (n == 0) throw std::invalid_argument("mlp_loss_and_grad: empty batch");
  if (batch.x.cols() != model.input_dim) throw std::invalid_argument("mlp_loss_and_grad: input dimension mismatch");

  Eigen::MatrixXd gw1 = Eigen::MatrixXd::Zero(model.hidden_dim, model.input_dim);
  Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(model.hidden_dim);
  Eigen::MatrixXd gw2 = Eigen::MatrixXd::Zero(2, model.hidden_dim);
  Eigen::VectorXd gb2 = Eigen::VectorXd::Zero(2);
  double loss = 0;

  // one fixed mask per sample for the whole pass
  std::optional<Rng> drop_rng;
  if (dropout && dropout->rate > 0.0) drop_rng.emplace(dropout->seed);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = batch.x.row(i).transpose();
    const Eigen::VectorXd z1 = model.w1 * x + model.b1;
    Eigen::VectorXd a1 = z1.array().max(0.0).matrix();
    Eigen::VectorXd mask;
    if (drop_rng) {
      mask = dropout_mask(a1.size(), *dropout, *drop_rng);
      a1 = a1.cwiseProduct(mask);
    }
    const Eigen::Vector2d p = softmax2(model.w2 * a1 + model.b2);
    const int y = batch.y[static_cast<std::size_t>(i)];
    loss += -std::log(std::max(p[y], 1e-300));

    Eigen::Vector2d dz2 = p;
    dz2[y] -= 1.0;
    gw2 += dz2 * a1.transpose();
    gb2 += dz2;
    Eigen::VectorXd da1 = model.w2.transpose() * dz2;
    if (drop_rng) da1 = da1.cwiseProduct(mask);
    const Eigen::VectorXd dz1 = (z1.array() > 0.0).select(da1.array(), 0.0);
    gw1 += dz1 * x.transpose();
    gb1 += dz1;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  gw1 *= inv_n;
  gb1 *= inv_n;
  gw2 *= inv_n;
  gb2 *= inv_n;

  loss += hyper.l2 * (model.w1.squaredNorm() + model.w2.squaredNorm());
  gw1 += 2.0 * hyper.l2 * model.w1;
  gw2 += 2.0 * hyper.l2 * model.w2;

  JudgeModel g;
  g.input_dim = model.input_dim;
  g.hidden_dim = model.hidden_dim;
  g.w1 = std::move(gw1);
  g.b1 = std::move(gb1);
  g.w2 = std::move(gw2);
  g.b2 = std::move(gb2);
  return LossAndGrad{loss, g.pack()};
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const TrainHyper& hyper, int t) {
  if (t < 1) throw std::invalid_argument("adam_step: t must be >= 1");
  if (state.m.size() == 0) {
    state.m = Eigen::ArrayXd::Zero(params.size());
    state.v = Eigen::ArrayXd::Zero(params.size());
  }
  const Eigen::ArrayXd g = grads.array();
  state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * g;
  state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * g.square();
  const Eigen::ArrayXd m_hat = state.m / (1.0 - std::pow(hyper.beta1, t));
  const Eigen::ArrayXd v_hat = state.v / (1.0 - std::pow(hyper.beta2, t));
  params.array() -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
}

double mlp_accuracy(const JudgeModel& model, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  if (x.rows() == 0) return 0.0;
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::Vector2d p = mlp_forward(model, x.row(i).transpose());
    const int pred = p[0] >= p[1] ? 0 : 1;
    if (pred == y[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(x.rows());
}

namespace {

double dataset_loss(const JudgeModel& model, const Eigen::MatrixXd& x, const std::vector<int>& y,
                    const TrainHyper& hyper) {
  Batch b{x, y};
  TrainHyper h = hyper;
  return mlp_loss_and_grad(model, b, h).loss;
}

}  // namespace

TrainedJudge train_judge(TransformKind transform, const Eigen::MatrixXd& x, const std::vector<int>& y,
                         const TrainHyper& hyper) {
  const Eigen::Index n = x.rows();
  if (n == 0) throw std::invalid_argument("train_judge: empty corpus");
  bool has0 = false, has1 = false;
  for (int v : y) (v == 0 ? has0 : has1) = true;
  if (!has0 || !has1) throw std::invalid_argument("train_judge: corpus must contain both labels");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng split_rng(derive_seed(hyper.seed, "split"));
  split_rng.shuffle(order);
  const Eigen::Index val_n = std::max<Eigen::Index>(1, n / 10);
  const Eigen::Index train_n = n - val_n;

  auto subset = [&](Eigen::Index begin, Eigen::Index count) {
    Eigen::MatrixXd xs(count, x.cols());
    std::vector<int> ys(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) {
      xs.row(i) = x.row(order[static_cast<std::size_t>(begin + i)]);
      ys[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(order[static_cast<std::size_t>(begin + i)])];
    }
    return std::make_pair(std::move(xs), std::move(ys));
  };
  auto [x_train, y_train] = subset(0, train_n);
  auto [x_val, y_val] = subset(train_n, val_n);

  JudgeModel model = init_judge_model(transform, static_cast<int>(x.cols()), hyper.hidden_dim, hyper.seed);
  Eigen::VectorXd params = model.pack();
  AdamState adam;
  TrainMetrics metrics;

  JudgeModel best = model;
  double best_val = dataset_loss(model, x_val, y_val, hyper);
  int since_best = 0;
  int step = 0;

  std::vector<Eigen::Index> train_order(static_cast<std::size_t>(train_n));
  std::iota(train_order.begin(), train_order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    Rng epoch_rng(derive_seed(hyper.seed, "epoch", static_cast<std::uint64_t>(epoch)));
    epoch_rng.shuffle(train_order);
    for (Eigen::Index begin = 0; begin < train_n; begin += hyper.batch) {
      const Eigen::Index count = std::min<Eigen::Index>(hyper.batch, train_n - begin);
      Batch batch;
      batch.x.resize(count, x.cols());
      batch.y.resize(static_cast<std::size_t>(count));
      for (Eigen::Index i = 0; i < count; ++i) {
        batch.x.row(i) = x_train.row(train_order[static_cast<std::size_t>(begin + i)]);
        batch.y[static_cast<std::size_t>(i)] =
            y_train[static_cast<std::size_t>(train_order[static_cast<std::size_t>(begin + i)])];
      }
      ++step;
      std::optional<DropoutSpec> drop;
      if (hyper.dropout_rate > 0.0)
        drop = DropoutSpec{hyper.dropout_rate, derive_seed(hyper.seed, "dropout", static_cast<std::uint64_t>(step))};
      const LossAndGrad lg = mlp_loss_and_grad(model, batch, hyper, drop);
      adam_step(params, lg.grad, adam, hyper, step);
      model.unpack(params);
    }
    metrics.epochs_run = epoch + 1;
    const double val_loss = dataset_loss(model, x_val, y_val, hyper);
    if (val_loss < best_val) {
      best_val = val_loss;
      best = model;
      since_best = 0;
    } else if (++since_best >= hyper.patience) {
      break;
    }
  }

  metrics.best_val_loss = best_val;
  metrics.train_accuracy = mlp_accuracy(best, x_train, y_train);
  metrics.val_accuracy = mlp_accuracy(best, x_val, y_val);
  return TrainedJudge{std::move(best), metrics};
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

Eigen::MatrixXd matrix_from_json(const json& arr, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(arr.size()) != rows * cols)
    throw DataError("model file: weight array size mismatch");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[static_cast<std::size_t>(i++)].get<double>();
  return m;
}

}  // namespace

void save_judge(const std::filesystem::path& path, const JudgeModel& model, const TrainHyper& hyper,
                const std::string& corpus_fingerprint) {
  json doc;
  doc["transform"] = std::string(to_string(model.transform));
  doc["input_dim"] = model.input_dim;
  doc["hidden_dim"] = model.hidden_dim;
  doc["W1"] = matrix_to_json(model.w1);
  doc["b1"] = matrix_to_json(model.b1);
  doc["W2"] = matrix_to_json(model.w2);
  doc["b2"] = matrix_to_json(model.b2);
  doc["hyper"] = {
      {"lr", hyper.lr},         {"beta1", hyper.beta1},       {"beta2", hyper.beta2},
      {"eps", hyper.eps},       {"l2", hyper.l2},             {"dropout_rate", hyper.dropout_rate},
      {"epochs", hyper.epochs}, {"batch", hyper.batch},       {"patience", hyper.patience},
      {"hidden_dim", hyper.hidden_dim}, {"seed", hyper.seed},
  };
  doc["corpus_fingerprint"] = corpus_fingerprint;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << doc.dump(2) << "\n";
}

JudgeModel load_judge(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("model file " + path.string() + ": " + e.what());
  }
  JudgeModel m;
  const auto kind = transform_from_string(doc.at("transform").get<std::string>());
  if (!kind) throw DataError("model file " + path.string() + ": unknown transform");
  m.transform = *kind;
  m.input_dim = doc.at("input_dim").get<int>();
  m.hidden_dim = doc.at("hidden_dim").get<int>();
  m.w1 = matrix_from_json(doc.at("W1"), m.hidden_dim, m.input_dim);
  m.b1 = matrix_from_json(doc.at("b1"), m.hidden_dim, 1);
  m.w2 = matrix_from_json(doc.at("W2"), 2, m.hidden_dim);
  m.b2 = matrix_from_json(doc.at("b2"), 2, 1);
  return m;
}

}  // namespace flfe
