#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace flfe {

/// Synthetic minority oversampling: each synthetic point is a + u*(b - a)
/// with u uniform in [0, 1], a a random minority point and b one of its
/// k_nn nearest minority neighbors (Euclidean). Deterministic per seed.
std::vector<Eigen::VectorXd> smote(const std::vector<Eigen::VectorXd>& minority, int n_new, int k_nn,
                                   std::uint64_t seed);

}  // namespace flfe
