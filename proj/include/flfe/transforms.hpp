#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "flfe/common.hpp"

namespace flfe {

/// The transformation vocabulary: 10 unary kinds and 4 binary kinds.
/// The string names are the canonical identifiers used in model files,
/// corpus files and CLI flags.
enum class TransformKind {
  log,
  sqrt_abs,
  frequency,
  square,
  round,
  tanh,
  sigmoid,
  isotonic,
  zscore,
  normalize,
  sum,
  subtraction,
  multiplication,
  division,
};

enum class MaskGroup { none, additive, multiplicative };

constexpr int kUnaryKindCount = 10;
constexpr int kBinaryKindCount = 4;

int arity(TransformKind kind);
MaskGroup mask_group(TransformKind kind);
std::string_view to_string(TransformKind kind);
std::optional<TransformKind> transform_from_string(std::string_view name);

const std::array<TransformKind, 14>& all_transforms();
const std::array<TransformKind, kUnaryKindCount>& unary_transforms();
const std::array<TransformKind, kBinaryKindCount>& binary_transforms();

/// True for binary kinds where T(a,b) == T(b,a) (sum, multiplication).
bool commutative(TransformKind kind);

/// Denominators with |d| < kDivisionEpsilon are replaced by
/// sign(d) * kDivisionEpsilon (sign(0) = +1) before dividing.
constexpr double kDivisionEpsilon = 1e-6;

/// Elementwise or whole-column unary transform. Labels are consulted only
/// by `isotonic`. Constant columns map to all zeros under zscore and
/// normalize.
Eigen::VectorXd apply_unary(TransformKind kind, const Eigen::VectorXd& f, const std::vector<int>& labels);

/// Elementwise binary transform with the division guard above.
Eigen::VectorXd apply_binary(TransformKind kind, const Eigen::VectorXd& f1, const Eigen::VectorXd& f2);

/// Random per-loop mask enabling encrypt/decrypt that commutes with the
/// chosen binary transformation.
struct MaskVector {
  Eigen::VectorXd values;
  MaskGroup group = MaskGroup::additive;
};

/// Additive mask scale convention: 10 * (1 + max|f|), so masked values do
/// not reveal the magnitude of the feature being hidden.
double additive_mask_scale(const Eigen::VectorXd& f);

/// Samples a mask. Additive masks are uniform on [-scale, scale], snapped
/// to an integer multiple of 2^-16 so that unmasking grid-aligned data is
/// bit-exact. Multiplicative masks have magnitude uniform in [0.5, 2] and
/// random sign.
MaskVector sample_mask(MaskGroup group, Eigen::Index len, std::uint64_t seed, double additive_scale = 0.0);

/// encrypt(f, m) = T(f, m): sum -> f+m, subtraction -> f-m,
/// multiplication -> f*m, division -> f/m.
Eigen::VectorXd mask_encrypt(TransformKind kind, const Eigen::VectorXd& f, const MaskVector& mask);

/// Inverse of mask_encrypt under the same mask: sum -> g-m,
/// subtraction -> g+m, multiplication -> g/m, division -> g*m.
Eigen::VectorXd mask_decrypt(TransformKind kind, const Eigen::VectorXd& g, const MaskVector& mask);

}  // namespace flfe
