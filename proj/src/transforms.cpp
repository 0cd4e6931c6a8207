#include "flfe/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "flfe/rng.hpp"

namespace flfe {
namespace {

struct KindInfo {
  TransformKind kind;
  std::string_view name;
  int arity;
  MaskGroup group;
};

constexpr std::array<KindInfo, 14> kKinds{{
    {TransformKind::log, "log", 1, MaskGroup::none},
    {TransformKind::sqrt_abs, "sqrt_abs", 1, MaskGroup::none},
    {TransformKind::frequency, "frequency", 1, MaskGroup::none},
    {TransformKind::square, "square", 1, MaskGroup::none},
    {TransformKind::round, "round", 1, MaskGroup::none},
    {TransformKind::tanh, "tanh", 1, MaskGroup::none},
    {TransformKind::sigmoid, "sigmoid", 1, MaskGroup::none},
    {TransformKind::isotonic, "isotonic", 1, MaskGroup::none},
    {TransformKind::zscore, "zscore", 1, MaskGroup::none},
    {TransformKind::normalize, "normalize", 1, MaskGroup::none},
    {TransformKind::sum, "sum", 2, MaskGroup::additive},
    {TransformKind::subtraction, "subtraction", 2, MaskGroup::additive},
    {TransformKind::multiplication, "multiplication", 2, MaskGroup::multiplicative},
    {TransformKind::division, "division", 2, MaskGroup::multiplicative},
}};

const KindInfo& info(TransformKind kind) { return kKinds[static_cast<std::size_t>(kind)]; }

double guard_denominator(double d) {
  if (std::abs(d) >= kDivisionEpsilon) return d;
  return d < 0 ? -kDivisionEpsilon : kDivisionEpsilon;
}

/// Pool-adjacent-violators fit of the label against the feature sorted
/// ascending; points with equal feature value are pooled up front so they
/// receive a common fitted value.
Eigen::VectorXd isotonic_fit(const Eigen::VectorXd& f, const std::vector<int>& labels) {
  const Eigen::Index n = f.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (f[a] != f[b]) return f[a] < f[b];
    return a < b;
  });

  struct Block {
    double value;
    double weight;
    std::size_t first_group;
    std::size_t group_count;
  };
  struct Group {
    double feature;
    double target_sum;
    double weight;
  };

  std::vector<Group> groups;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    Group g{f[order[i]], 0.0, 0.0};
    while (j < order.size() && f[order[j]] == g.feature) {
      g.target_sum += labels[static_cast<std::size_t>(order[j])];
      g.weight += 1.0;
      ++j;
    }
    groups.push_back(g);
    i = j;
  }

  std::vector<Block> stack;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    Block b{groups[gi].target_sum / groups[gi].weight, groups[gi].weight, gi, 1};
    while (!stack.empty() && stack.back().value >= b.value) {
      const Block& top = stack.back();
      const double w = top.weight + b.weight;
      b.value = (top.value * top.weight + b.value * b.weight) / w;
      b.weight = w;
      b.first_group = top.first_group;
      b.group_count += top.group_count;
      stack.pop_back();
    }
    stack.push_back(b);
  }

  std::vector<double> fitted(groups.size());
  for (const Block& b : stack)
    for (std::size_t g = b.first_group; g < b.first_group + b.group_count; ++g) fitted[g] = b.value;

  Eigen::VectorXd out(n);
  std::size_t gi = 0, consumed = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (consumed == static_cast<std::size_t>(groups[gi].weight)) {
      ++gi;
      consumed = 0;
    }
    out[order[i]] = fitted[gi];
    ++consumed;
  }
  return out;
}

}  // namespace

int arity(TransformKind kind) { return info(kind).arity; }
MaskGroup mask_group(TransformKind kind) { return info(kind).group; }
std::string_view to_string(TransformKind kind) { return info(kind).name; }

std::optional<TransformKind> transform_from_string(std::string_view name) {
  for (const auto& k : kKinds)
    if (k.name == name) return k.kind;
  return std::nullopt;
}

const std::array<TransformKind, 14>& all_transforms() {
  static const std::array<TransformKind, 14> kinds = [] {
    std::array<TransformKind, 14> out{};
    for (std::size_t i = 0; i < kKinds.size(); ++i) out[i] = kKinds[i].kind;
    return out;
  }();
  return kinds;
}

const std::array<TransformKind, kUnaryKindCount>& unary_transforms() {
  static const std::array<TransformKind, kUnaryKindCount> kinds = [] {
    std::array<TransformKind, kUnaryKindCount> out{};
    std::size_t i = 0;
    for (const auto& k : kKinds)
      if (k.arity == 1) out[i++] = k.kind;
    return out;
  }();
  return kinds;
}

const std::array<TransformKind, kBinaryKindCount>& binary_transforms() {
  static const std::array<TransformKind, kBinaryKindCount> kinds = [] {
    std::array<TransformKind, kBinaryKindCount> out{};
    std::size_t i = 0;
    for (const auto& k : kKinds)
      if (k.arity == 2) out[i++] = k.kind;
    return out;
  }();
  return kinds;
}

bool commutative(TransformKind kind) {
  return kind == TransformKind::sum || kind == TransformKind::multiplication;
}

Eigen::VectorXd apply_unary(TransformKind kind, const Eigen::VectorXd& f, const std::vector<int>& labels) {
  if (arity(kind) != 1) throw std::invalid_argument("apply_unary: kind is not unary");
  const Eigen::Index n = f.size();
  switch (kind) {
    case TransformKind::log:
      return (f.array().abs() + 1.0).log();
    case TransformKind::sqrt_abs:
      return f.array().abs().sqrt();
    case TransformKind::frequency: {
      std::map<double, double> counts;
      for (Eigen::Index i = 0; i < n; ++i) counts[f[i]] += 1.0;
      Eigen::VectorXd out(n);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = counts[f[i]];
      return out;
    }
    case TransformKind::square:
      return f.array().square();
    case TransformKind::round:
      return f.array().round();  // half away from zero
    case TransformKind::tanh:
      return f.array().tanh();
    case TransformKind::sigmoid:
      return (1.0 / (1.0 + (-f.array()).exp()));
    case TransformKind::isotonic:
      if (static_cast<Eigen::Index>(labels.size()) != n)
        throw std::invalid_argument("isotonic: labels length mismatch");
      return isotonic_fit(f, labels);
    case TransformKind::zscore: {
      if (f.minCoeff() == f.maxCoeff()) return Eigen::VectorXd::Zero(n);
      const double mean = f.mean();
      const double var = (f.array() - mean).square().mean();
      return (f.array() - mean) / std::sqrt(var);
    }
    case TransformKind::normalize: {
      const double lo = f.minCoeff(), hi = f.maxCoeff();
      if (lo == hi) return Eigen::VectorXd::Zero(n);
      return -1.0 + 2.0 * (f.array() - lo) / (hi - lo);
    }
    default:
      throw std::invalid_argument("apply_unary: unknown kind");
  }
}

Eigen::VectorXd apply_binary(TransformKind kind, const Eigen::VectorXd& f1, const Eigen::VectorXd& f2) {
  if (arity(kind) != 2) throw std::invalid_argument("apply_binary: kind is not binary");
  if (f1.size() != f2.size()) throw std::invalid_argument("apply_binary: length mismatch");
  switch (kind) {
    case TransformKind::sum:
      return f1 + f2;
    case TransformKind::subtraction:
      return f1 - f2;
    case TransformKind::multiplication:
      return f1.cwiseProduct(f2);
    case TransformKind::division: {
      Eigen::VectorXd out(f1.size());
      for (Eigen::Index i = 0; i < f1.size(); ++i) out[i] = f1[i] / guard_denominator(f2[i]);
      return out;
    }
    default:
      throw std::invalid_argument("apply_binary: unknown kind");
  }
}

double additive_mask_scale(const Eigen::VectorXd& f) {
  return 10.0 * (1.0 + (f.size() > 0 ? f.array().abs().maxCoeff() : 0.0));
}

MaskVector sample_mask(MaskGroup group, Eigen::Index len, std::uint64_t seed, double additive_scale) {
  if (len < 1) throw std::invalid_argument("sample_mask: len must be positive");
  if (group == MaskGroup::none) throw std::invalid_argument("sample_mask: group must be additive or multiplicative");
  Rng rng(seed);
  MaskVector mask;
  mask.group = group;
  mask.values.resize(len);
  if (group == MaskGroup::additive) {
    for (Eigen::Index i = 0; i < len; ++i) {
      const double v = rng.uniform(-additive_scale, additive_scale);
      mask.values[i] = std::ldexp(std::nearbyint(std::ldexp(v, 16)), -16);
    }
  } else {
    for (Eigen::Index i = 0; i < len; ++i) {
      const double magnitude = rng.uniform(0.5, 2.0);
      mask.values[i] = rng.bernoulli(0.5) ? -magnitude : magnitude;
    }
  }
  return mask;
}

namespace {

void check_mask(TransformKind kind, const Eigen::VectorXd& f, const MaskVector& mask) {
  if (arity(kind) != 2) throw std::invalid_argument("mask algebra applies to binary kinds only");
  if (mask.group != mask_group(kind)) throw std::invalid_argument("mask group does not match transform");
  if (mask.values.size() != f.size()) throw std::invalid_argument("mask length mismatch");
}

}  // namespace

Eigen::VectorXd mask_encrypt(TransformKind kind, const Eigen::VectorXd& f, const MaskVector& mask) {
  check_mask(kind, f, mask);
  return apply_binary(kind, f, mask.values);
}

Eigen::VectorXd mask_decrypt(TransformKind kind, const Eigen::VectorXd& g, const MaskVector& mask) {
  check_mask(kind, g, mask);
  switch (kind) {
    case TransformKind::sum:
      return g - mask.values;
    case TransformKind::subtraction:
      return g + mask.values;
    case TransformKind::multiplication:
      return g.cwiseQuotient(mask.values);
    case TransformKind::division:
      return g.cwiseProduct(mask.values);
    default:
      throw std::invalid_argument("mask_decrypt: unknown kind");
  }
}

}  // namespace flfe
