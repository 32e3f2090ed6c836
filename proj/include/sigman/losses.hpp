#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <tuple>
#include <vector>

#include "sigman/field.hpp"
#include "sigman/lle.hpp"
#include "sigman/tape.hpp"

namespace sigman {

struct LossConfig {
  bool use_lle = true;
  bool use_iso = true;
  LleOptions lle;
  double negative_weight_penalty = 1.0;
  double iso_alpha = 100.0;
  double iso_quantile = 0.25;
};

/// Per-signal targets: targets[row][modality] is P_m x channels_m.
template <typename Scalar>
using BatchTargets = std::vector<std::vector<Tensor<Scalar>>>;

template <typename Scalar>
Var<Scalar> mse(Var<Scalar> prediction, const Tensor<Scalar>& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw ShapeError("mse: prediction " + shape_str(prediction.value()) + " vs target " + shape_str(target));
  }
  return mean(square(prediction - prediction.tape()->constant(target)));
}

/// Mean over rows of the summed per-modality MSE between the decoded field of
/// each latent row and its targets. `embedded[m]` is the embedded coordinate
/// batch shared by all rows for modality m; modalities whose embedding is an
/// invalid Var are skipped (unobserved).
template <typename Scalar>
Var<Scalar> reconstruction_loss(const HypernetVars<Scalar>& h, Var<Scalar> latents,
                                std::span<const Var<Scalar>> embedded, const BatchTargets<Scalar>& targets) {
  if (static_cast<std::size_t>(latents.rows()) != targets.size()) {
    throw ShapeError("rec_loss: " + std::to_string(latents.rows()) + " latents for " +
                     std::to_string(targets.size()) + " signals");
  }
  if (embedded.size() != h.heads.size()) throw ShapeError("rec_loss: one embedding per modality is required");
  auto features = hyper_features(h, latents);
  std::vector<Var<Scalar>> terms;
  for (std::size_t m = 0; m < h.heads.size(); ++m) {
    if (!embedded[m].valid()) continue;
    auto head_out = head_output(h, features, m);
    for (Index row = 0; row < latents.rows(); ++row) {
      auto field = field_from_head(h, head_out, row, m);
      terms.push_back(mse(eval_field(field, embedded[m]), targets[static_cast<std::size_t>(row)].at(m)));
    }
  }
  if (terms.empty()) throw DataError("rec_loss: no observed modality");
  Var<Scalar> total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  return scale(total, Scalar(1) / static_cast<Scalar>(latents.rows()));
}

/// Projections of every latent row onto its neighbors' affine hull plus the
/// L1 penalty on negative weights (summed over neighbors, averaged over rows).
template <typename Scalar>
struct LleBatch {
  Var<Scalar> projections;  // B x n
  Var<Scalar> penalty;      // 1 x 1
  std::vector<LleVars<Scalar>> solutions;
};

template <typename Scalar>
LleBatch<Scalar> lle_project(Var<Scalar> latents, std::span<const Var<Scalar>> neighbors, const LossConfig& cfg) {
  if (static_cast<std::size_t>(latents.rows()) != neighbors.size()) {
    throw ShapeError("lle_loss: one neighbor set per latent row is required");
  }
  LleBatch<Scalar> out;
  std::vector<Var<Scalar>> rows;
  std::vector<Var<Scalar>> penalties;
  for (Index r = 0; r < latents.rows(); ++r) {
    const Index idx[] = {r};
    auto z = latents.rows() == 1 ? latents : gather_rows(latents, std::span<const Index>(idx));
    auto sol = solve_lle(z, neighbors[static_cast<std::size_t>(r)], cfg.lle);
    rows.push_back(sol.projection);
    penalties.push_back(sum(relu(-sol.weights)));
    out.solutions.push_back(sol);
  }
  out.projections = rows.size() == 1 ? rows[0] : concat_rows(std::span<const Var<Scalar>>(rows));
  Var<Scalar> p = penalties[0];
  for (std::size_t i = 1; i < penalties.size(); ++i) p = p + penalties[i];
  out.penalty = scale(p, static_cast<Scalar>(cfg.negative_weight_penalty) / static_cast<Scalar>(latents.rows()));
  return out;
}

/// Reconstruction at the LLE projections plus the negative-weight penalty.
template <typename Scalar>
Var<Scalar> lle_loss(const HypernetVars<Scalar>& h, Var<Scalar> latents, std::span<const Var<Scalar>> neighbors,
                     std::span<const Var<Scalar>> embedded, const BatchTargets<Scalar>& targets,
                     const LossConfig& cfg) {
  auto batch = lle_project(latents, neighbors, cfg);
  return reconstruction_loss(h, batch.projections, embedded, targets) + batch.penalty;
}

struct IsoPair {
  Index a = 0;  // batch positions
  Index b = 0;
  double signal_distance = 0.0;
};

/// Euclidean distances between the sampled targets of every pair of batch
/// rows, concatenating all modalities.
template <typename Scalar>
Eigen::MatrixXd signal_distances(const BatchTargets<Scalar>& targets) {
  const Index n = static_cast<Index>(targets.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t m = 0; m < targets[i].size(); ++m) {
        acc += (targets[i][m].template cast<double>() - targets[j][m].template cast<double>()).squaredNorm();
      }
      d(i, j) = d(j, i) = std::sqrt(acc);
    }
  }
  return d;
}

/// Pairs whose signal distance lies in the lowest `quantile` of all
/// batch pairs: ceil(quantile * B(B-1)/2) of them. Ties are ordered by the
/// pair's dataset ids, so the selection does not depend on batch order.
inline std::vector<IsoPair> select_iso_pairs(const Eigen::MatrixXd& dist, std::span<const Index> ids,
                                             double quantile = 0.25) {
  const Index n = dist.rows();
  if (static_cast<Index>(ids.size()) != n) throw ShapeError("iso: id count does not match distance matrix");
  struct Cand {
    double d;
    Index lo, hi;  // ids
    IsoPair pair;
  };
  std::vector<Cand> all;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const bool swap = ids[j] < ids[i];
      const Index a = swap ? j : i, b = swap ? i : j;
      all.push_back({dist(i, j), ids[a], ids[b], IsoPair{a, b, dist(i, j)}});
    }
  }
  if (all.empty()) return {};
  const auto count = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(all.size()) - 1e-12));
  std::sort(all.begin(), all.end(),
            [](const Cand& x, const Cand& y) { return std::tie(x.d, x.lo, x.hi) < std::tie(y.d, y.lo, y.hi); });
  std::vector<IsoPair> out;
  for (std::size_t k = 0; k < std::min(count, all.size()); ++k) out.push_back(all[k].pair);
  return out;
}

/// Mean over `pairs` of | alpha * |z_a - z_b| - signal_distance |. Zero when
/// there are no pairs.
template <typename Scalar>
Var<Scalar> iso_loss(Var<Scalar> latents, std::span<const IsoPair> pairs, double alpha) {
  auto& tape = *latents.tape();
  if (pairs.empty()) return tape.constant(scalar_tensor(Scalar(0)));
  std::vector<Index> ia, ib;
  Tensor<Scalar> target(static_cast<Index>(pairs.size()), 1);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    ia.push_back(pairs[k].a);
    ib.push_back(pairs[k].b);
    target(static_cast<Index>(k), 0) = static_cast<Scalar>(pairs[k].signal_distance);
  }
  auto diff = gather_rows(latents, std::span<const Index>(ia)) - gather_rows(latents, std::span<const Index>(ib));
  auto latent_dist = sqrt(row_sum(square(diff)));
  return mean(abs(scale(latent_dist, static_cast<Scalar>(alpha)) - tape.constant(target)));
}

/// Unit-weighted sum of the enabled terms.
template <typename Scalar>
Var<Scalar> total_loss(Var<Scalar> rec, Var<Scalar> lle, Var<Scalar> iso, const LossConfig& cfg) {
  Var<Scalar> total = rec;
  if (cfg.use_lle) total = total + lle;
  if (cfg.use_iso) total = total + iso;
  return total;
}

inline double total_loss(double rec, double lle, double iso, const LossConfig& cfg) {
  return rec + (cfg.use_lle ? lle : 0.0) + (cfg.use_iso ? iso : 0.0);
}

}  // namespace sigman
