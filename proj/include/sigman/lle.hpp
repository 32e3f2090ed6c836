#pragma once

#include <vector>

#include "sigman/tape.hpp"
#include "sigman/tensor.hpp"

namespace sigman {

struct LleOptions {
  /// Ridge added to the Gram matrix, relative to its mean diagonal.
  double reg = 1e-3;
  /// Proximal refinements after the ridge solve. They remove the ridge bias
  /// along well-conditioned directions only.
  int refine_steps = 2;

  /// Settings for double-precision geometry where the projection has to be
  /// exact to ~1e-8 (generation, residual checks). Too stiff for training.
  static LleOptions tight() { return {1e-10, 2}; }
};

/// Sum-to-one reconstruction weights of a latent from its neighbors.
template <typename Scalar>
struct LleVars {
  Var<Scalar> weights;     // J x 1, sums to 1
  Var<Scalar> projection;  // 1 x n, weights^T * neighbors
  Var<Scalar> residual;    // 1 x 1, |z - projection|
};

/// Projects `z` (1 x n) onto the affine hull of `neighbors` (J x n) by
/// minimizing w^T G w subject to sum(w) = 1, where G_jl = (z - z_j).(z - z_l).
/// The system is G + mu*I with mu = reg * tr(G) / J, followed by
/// `refine_steps` proximal iterations
///   w <- argmin w^T G w + mu |w - w_prev|^2  s.t. sum(w) = 1,
/// which drive the solution to the unregularized constrained minimizer even
/// when G is rank deficient. Every step is on the tape, so gradients reach
/// both `z` and `neighbors`.
template <typename Scalar>
LleVars<Scalar> solve_lle(Var<Scalar> z, Var<Scalar> neighbors, const LleOptions& opts = {}) {
  auto& tape = *detail::same_tape("solve_lle", z, neighbors);
  if (z.rows() != 1 || z.cols() != neighbors.cols()) {
    throw ShapeError("solve_lle: latent " + shape_str(z.value()) + " vs neighbors " + shape_str(neighbors.value()));
  }
  const Index j = neighbors.rows();
  if (j < 1) throw ShapeError("solve_lle: need at least one neighbor");

  auto ones = tape.constant(Tensor<Scalar>::Ones(j, 1));
  auto diffs = matmul(ones, z) - neighbors;  // rows k_j = z - z_j
  auto gram = matmul_nt(diffs, diffs);
  auto mu = scale(sum(square(diffs)), static_cast<Scalar>(opts.reg) / static_cast<Scalar>(j));
  auto system = gram + mul_scalar(tape.constant(Tensor<Scalar>::Identity(j, j)), mu);

  auto u = solve(system, ones);
  auto u_sum = sum(u);
  auto w = div_scalar(u, u_sum);
  auto one = tape.constant(scalar_tensor(Scalar(1)));
  for (int step = 0; step < opts.refine_steps; ++step) {
    auto a = solve(system, mul_scalar(w, mu));
    auto c = div_scalar(one - sum(a), u_sum);
    w = a + mul_scalar(u, c);
  }
  w = div_scalar(w, sum(w));

  auto projection = matmul(transpose(w), neighbors);
  auto residual = sqrt(sum(square(z - projection)));
  return {w, projection, residual};
}

template <typename Scalar>
struct LleSolution {
  Tensor<Scalar> weights;     // J x 1
  Tensor<Scalar> projection;  // 1 x n
  Scalar residual = Scalar(0);
};

template <typename Scalar>
LleSolution<Scalar> solve_lle(const Tensor<Scalar>& z, const Tensor<Scalar>& neighbors, const LleOptions& opts = {}) {
  Tape<Scalar> tape;
  auto s = solve_lle(tape.constant(z), tape.constant(neighbors), opts);
  return {s.weights.value(), s.projection.value(), s.residual.item()};
}

}  // namespace sigman
