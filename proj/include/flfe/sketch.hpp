#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "flfe/common.hpp"

namespace flfe {

struct SketchConfig {
  int bins = 200;       ///< m, bins per class column
  double scale_k = 1.0; ///< class columns are rescaled to [-k, k]
  int float_width = 4;  ///< serialized element width in bytes (4 or 8)
};

/// Per-class histogram representation of one or two parent features.
/// Each parent contributes two columns of `bins` counts: the positive
/// class and everything else. Raw columns hold counts; scaled columns
/// hold the affine rescale of each raw column to [-k, k].
struct QuantileSketchArray {
  int parent_arity = 1;
  int positive_class = 0;
  std::vector<Eigen::VectorXi> raw;     // parent-major: [p0 pos, p0 rest, p1 pos, p1 rest]
  std::vector<Eigen::VectorXd> scaled;

  /// Scaled columns concatenated in storage order; length = arity * 2 * bins.
  Eigen::VectorXd flatten() const;
};

/// Histogram bin for `value` over [lo, hi] with m equal bins. The top of
/// the range maps to the last bin; a degenerate range (hi == lo) maps
/// everything to bin 0.
int bin_index(double value, double lo, double hi, int m);

/// Bin counts of the masked subset of `values`, with the bin range taken
/// over that subset. An empty subset yields the all-zero column.
Eigen::VectorXi class_sketch(const Eigen::VectorXd& values, const std::vector<char>& in_class, int m);

/// Affine rescale sending min(raw) to -k and max(raw) to +k; an all-equal
/// column becomes all zeros.
Eigen::VectorXd scale_column(const Eigen::VectorXi& raw, double k);

QuantileSketchArray build_qsa(const Eigen::VectorXd& parent, const std::vector<int>& labels,
                              int positive_class, const SketchConfig& cfg);
QuantileSketchArray build_qsa(const Eigen::VectorXd& parent1, const Eigen::VectorXd& parent2,
                              const std::vector<int>& labels, int positive_class, const SketchConfig& cfg);

/// Sorted row subset of size ceil(rate * rows), sampled without
/// replacement. Deterministic per seed.
std::vector<Eigen::Index> crop_indices(Eigen::Index rows, double rate, std::uint64_t seed);

/// Aligned (values, labels) subset at the given crop rate, original order
/// preserved.
std::pair<Eigen::VectorXd, std::vector<int>> crop_feature(const Eigen::VectorXd& values,
                                                          const std::vector<int>& labels, double rate,
                                                          std::uint64_t seed);

/// Wire codec for real-valued payloads: consecutive IEEE-754 values of
/// `float_width` bytes (4 = binary32, 8 = binary64).
std::vector<std::uint8_t> encode_reals(const Eigen::VectorXd& values, int float_width);
Eigen::VectorXd decode_reals(std::span<const std::uint8_t> bytes, int float_width);

}  // namespace flfe
