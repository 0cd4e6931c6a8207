#include "flfe/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "flfe/rng.hpp"

namespace flfe {

Eigen::VectorXd QuantileSketchArray::flatten() const {
  Eigen::Index total = 0;
  for (const auto& c : scaled) total += c.size();
  Eigen::VectorXd out(total);
  Eigen::Index pos = 0;
  for (const auto& c : scaled) {
    out.segment(pos, c.size()) = c;
    pos += c.size();
  }
  return out;
}

int bin_index(double value, double lo, double hi, int m) {
  if (m < 1) throw std::invalid_argument("bin_index: m must be positive");
  if (value < lo || value > hi) throw std::invalid_argument("bin_index: value outside [lo, hi]");
  if (hi == lo) return 0;
  int id = static_cast<int>(std::floor((value - lo) / (hi - lo) * m));
  // value == hi (and rounding at the top edge) lands in the last bin
  return std::clamp(id, 0, m - 1);
}

Eigen::VectorXi class_sketch(const Eigen::VectorXd& values, const std::vector<char>& in_class, int m) {
  if (static_cast<Eigen::Index>(in_class.size()) != values.size())
    throw std::invalid_argument("class_sketch: mask length mismatch");
  Eigen::VectorXi bins = Eigen::VectorXi::Zero(m);
  double lo = 0, hi = 0;
  bool any = false;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!in_class[static_cast<std::size_t>(i)]) continue;
    if (!any) {
      lo = hi = values[i];
      any = true;
    } else {
      lo = std::min(lo, values[i]);
      hi = std::max(hi, values[i]);
    }
  }
  if (!any) return bins;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (in_class[static_cast<std::size_t>(i)]) bins[bin_index(values[i], lo, hi, m)] += 1;
  return bins;
}

Eigen::VectorXd scale_column(const Eigen::VectorXi& raw, double k) {
  const int lo = raw.minCoeff();
  const int hi = raw.maxCoeff();
  if (lo == hi) return Eigen::VectorXd::Zero(raw.size());
  Eigen::VectorXd out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    out[i] = -k + 2.0 * k * (static_cast<double>(raw[i] - lo) / static_cast<double>(hi - lo));
  return out;
}

namespace {

void append_parent(QuantileSketchArray& qsa, const Eigen::VectorXd& parent, const std::vector<int>& labels,
                   int positive_class, const SketchConfig& cfg) {
  std::vector<char> pos(labels.size()), rest(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    pos[i] = labels[i] == positive_class;
    rest[i] = !pos[i];
  }
  qsa.raw.push_back(class_sketch(parent, pos, cfg.bins));
  qsa.raw.push_back(class_sketch(parent, rest, cfg.bins));
  qsa.scaled.push_back(scale_column(qsa.raw[qsa.raw.size() - 2], cfg.scale_k));
  qsa.scaled.push_back(scale_column(qsa.raw[qsa.raw.size() - 1], cfg.scale_k));
}

void check_parent(const Eigen::VectorXd& parent, const std::vector<int>& labels) {
  if (parent.size() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("build_qsa: parent rows do not match labels");
}

}  // namespace

QuantileSketchArray build_qsa(const Eigen::VectorXd& parent, const std::vector<int>& labels,
                              int positive_class, const SketchConfig& cfg) {
  check_parent(parent, labels);
  QuantileSketchArray qsa;
  qsa.parent_arity = 1;
  qsa.positive_class = positive_class;
  append_parent(qsa, parent, labels, positive_class, cfg);
  return qsa;
}

QuantileSketchArray build_qsa(const Eigen::VectorXd& parent1, const Eigen::VectorXd& parent2,
                              const std::vector<int>& labels, int positive_class, const SketchConfig& cfg) {
  check_parent(parent1, labels);
  check_parent(parent2, labels);
  QuantileSketchArray qsa;
  qsa.parent_arity = 2;
  qsa.positive_class = positive_class;
  append_parent(qsa, parent1, labels, positive_class, cfg);
  append_parent(qsa, parent2, labels, positive_class, cfg);
  return qsa;
}

std::vector<Eigen::Index> crop_indices(Eigen::Index rows, double rate, std::uint64_t seed) {
  if (rate <= 0.0 || rate > 1.0) throw std::invalid_argument("crop rate must be in (0, 1]");
  const auto count = static_cast<Eigen::Index>(std::ceil(rate * static_cast<double>(rows)));
  if (count < 1) throw std::invalid_argument("crop produces an empty subset");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

std::pair<Eigen::VectorXd, std::vector<int>> crop_feature(const Eigen::VectorXd& values,
                                                          const std::vector<int>& labels, double rate,
                                                          std::uint64_t seed) {
  if (values.size() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("crop_feature: values/labels length mismatch");
  const auto idx = crop_indices(values.size(), rate, seed);
  Eigen::VectorXd v(static_cast<Eigen::Index>(idx.size()));
  std::vector<int> l(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = values[idx[i]];
    l[i] = labels[static_cast<std::size_t>(idx[i])];
  }
  return {std::move(v), std::move(l)};
}

std::vector<std::uint8_t> encode_reals(const Eigen::VectorXd& values, int float_width) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(values.size()) * static_cast<std::size_t>(float_width));
  if (float_width == 4) {
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const float f = static_cast<float>(values[i]);
      std::memcpy(out.data() + static_cast<std::size_t>(i) * 4, &f, 4);
    }
  } else if (float_width == 8) {
    for (Eigen::Index i = 0; i < values.size(); ++i)
      std::memcpy(out.data() + static_cast<std::size_t>(i) * 8, &values[i], 8);
  } else {
    throw std::invalid_argument("float_width must be 4 or 8");
  }
  return out;
}

Eigen::VectorXd decode_reals(std::span<const std::uint8_t> bytes, int float_width) {
  if (float_width != 4 && float_width != 8) throw std::invalid_argument("float_width must be 4 or 8");
  if (bytes.size() % static_cast<std::size_t>(float_width) != 0)
    throw std::invalid_argument("payload size is not a multiple of float_width");
  const auto n = static_cast<Eigen::Index>(bytes.size() / static_cast<std::size_t>(float_width));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (float_width == 4) {
      float f;
      std::memcpy(&f, bytes.data() + static_cast<std::size_t>(i) * 4, 4);
      out[i] = static_cast<double>(f);
    } else {
      std::memcpy(&out[i], bytes.data() + static_cast<std::size_t>(i) * 8, 8);
    }
  }
  return out;
}

}  // namespace flfe
