#pragma once

#include <span>
#include <vector>

#include "sigman/tensor.hpp"

namespace sigman {

/// Exact k-nearest-neighbor lists over latent rows. Row i never lists
/// itself; lists are sorted by ascending distance, ties toward lower index.
struct NeighborGraph {
  Index k = 0;
  std::vector<std::vector<Index>> index;
  std::vector<std::vector<float>> distance;

  bool empty() const { return index.empty(); }
  Index size() const { return static_cast<Index>(index.size()); }
  /// Mean over all stored neighbor distances.
  double mean_distance() const;
};

/// Brute-force Euclidean kNN (distances accumulated in double).
/// Throws ConfigError when rows <= k.
NeighborGraph refresh_neighbors(const Tensor<float>& latents, Index k);

/// The `k` rows of `table` nearest to `query` (1 x n), skipping `exclude`
/// (pass -1 to skip nothing).
std::vector<Index> nearest_rows(const Tensor<float>& table, const Tensor<float>& query, Index k,
                                Index exclude = -1, std::vector<float>* distances = nullptr);

}  // namespace sigman
