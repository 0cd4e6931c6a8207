#include "flfe/smote.hpp"

#include <algorithm>
#include <stdexcept>

#include "flfe/rng.hpp"

namespace flfe {

std::vector<Eigen::VectorXd> smote(const std::vector<Eigen::VectorXd>& minority, int n_new, int k_nn,
                                   std::uint64_t seed) {
  if (minority.size() < 2) throw std::invalid_argument("smote: need at least 2 minority points");
  if (k_nn < 1) throw std::invalid_argument("smote: k_nn must be positive");
  if (n_new <= 0) return {};

  const std::size_t n = minority.size();
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(k_nn), n - 1);

  // neighbor lists by (distance, index) so ties are deterministic
  std::vector<std::vector<std::size_t>> neighbors(n);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back((minority[i] - minority[j]).norm(), j);
    }
    std::sort(dist.begin(), dist.end());
    for (std::size_t j = 0; j < k; ++j) neighbors[i].push_back(dist[j].second);
  }

  Rng rng(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n_new));
  for (int s = 0; s < n_new; ++s) {
    const std::size_t a = rng.index(n);
    const std::size_t b = neighbors[a][rng.index(neighbors[a].size())];
    const double u = rng.next_unit();
    out.push_back(minority[a] + u * (minority[b] - minority[a]));
  }
  return out;
}

}  // namespace flfe
