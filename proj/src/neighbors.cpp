#include "sigman/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sigman/errors.hpp"

namespace sigman {

namespace {

double squared_distance(const Tensor<float>& a, Index ra, const Tensor<float>& b, Index rb) {
  double acc = 0.0;
  for (Index c = 0; c < a.cols(); ++c) {
    const double d = static_cast<double>(a(ra, c)) - static_cast<double>(b(rb, c));
    acc += d * d;
  }
  return acc;
}

std::vector<Index> k_smallest(const std::vector<double>& d, Index k, Index exclude, std::vector<float>* out_dist) {
  std::vector<Index> order;
  order.reserve(d.size());
  for (Index i = 0; i < static_cast<Index>(d.size()); ++i) {
    if (i != exclude) order.push_back(i);
  }
  const auto by_distance = [&](Index x, Index y) { return d[x] < d[y] || (d[x] == d[y] && x < y); };
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(), by_distance);
  order.resize(kk);
  if (out_dist) {
    out_dist->clear();
    for (Index i : order) out_dist->push_back(static_cast<float>(std::sqrt(d[i])));
  }
  return order;
}

}  // namespace

double NeighborGraph::mean_distance() const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& row : distance) {
    for (float v : row) acc += v, ++n;
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

NeighborGraph refresh_neighbors(const Tensor<float>& latents, Index k) {
  const Index n = latents.rows();
  if (k < 1) throw ConfigError("neighbors: k must be >= 1");
  if (n <= k) {
    throw ConfigError("neighbors: need more than k = " + std::to_string(k) + " latents, have " + std::to_string(n));
  }
  NeighborGraph g;
  g.k = k;
  g.index.resize(static_cast<std::size_t>(n));
  g.distance.resize(static_cast<std::size_t>(n));
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) d[static_cast<std::size_t>(j)] = squared_distance(latents, i, latents, j);
    g.index[static_cast<std::size_t>(i)] = k_smallest(d, k, i, &g.distance[static_cast<std::size_t>(i)]);
  }
  return g;
}

std::vector<Index> nearest_rows(const Tensor<float>& table, const Tensor<float>& query, Index k, Index exclude,
                                std::vector<float>* distances) {
  if (query.rows() != 1 || query.cols() != table.cols()) {
    throw ShapeError("nearest_rows: query " + shape_str(query) + " vs table " + shape_str(table));
  }
  std::vector<double> d(static_cast<std::size_t>(table.rows()));
  for (Index j = 0; j < table.rows(); ++j) d[static_cast<std::size_t>(j)] = squared_distance(query, 0, table, j);
  return k_smallest(d, k, exclude, distances);
}

}  // namespace sigman
