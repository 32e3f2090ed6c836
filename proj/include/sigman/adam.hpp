#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigman/errors.hpp"
#include "sigman/tensor.hpp"

namespace sigman {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
struct AdamMoments {
  Tensor<Scalar> m;
  Tensor<Scalar> v;

  static AdamMoments zeros_like(const Tensor<Scalar>& p) {
    return {Tensor<Scalar>::Zero(p.rows(), p.cols()), Tensor<Scalar>::Zero(p.rows(), p.cols())};
  }
};

/// Shared step counter plus per-parameter moments (aligned by position with
/// the parameter list the caller steps).
template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::int64_t t = 0;
  std::vector<AdamMoments<Scalar>> moments;
};

namespace detail {

template <typename Scalar>
void check_grad(std::string_view name, const Tensor<Scalar>& p, const Tensor<Scalar>& g) {
  if (p.rows() != g.rows() || p.cols() != g.cols()) {
    throw ShapeError("adam: gradient " + shape_str(g) + " does not match parameter '" + std::string(name) +
                     "' " + shape_str(p));
  }
  if (!g.allFinite()) throw NumericError("adam: non-finite gradient for parameter '" + std::string(name) + "'");
}

}  // namespace detail

/// Applies one bias-corrected Adam update to `p` using step count `t` (already
/// incremented for this step).
template <typename Scalar>
void adam_update(const AdamConfig& cfg, std::int64_t t, std::string_view name, Tensor<Scalar>& p,
                 const Tensor<Scalar>& g, AdamMoments<Scalar>& mom) {
  detail::check_grad(name, p, g);
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  const Scalar lr = static_cast<Scalar>(cfg.lr);
  const Scalar eps = static_cast<Scalar>(cfg.eps);
  mom.m = b1 * mom.m + (Scalar(1) - b1) * g;
  mom.v = b2 * mom.v + (Scalar(1) - b2) * g.cwiseAbs2();
  p.array() -= lr * (mom.m.array() / c1) / ((mom.v.array() / c2).sqrt() + eps);
}

/// Row-sparse variant: only `rows` of `p` and its moments change.
template <typename Scalar>
void adam_update_rows(const AdamConfig& cfg, std::int64_t t, std::string_view name, Tensor<Scalar>& p,
                      const Tensor<Scalar>& g, AdamMoments<Scalar>& mom, std::span<const Index> rows) {
  detail::check_grad(name, p, g);
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  const Scalar lr = static_cast<Scalar>(cfg.lr);
  const Scalar eps = static_cast<Scalar>(cfg.eps);
  for (Index r : rows) {
    mom.m.row(r) = b1 * mom.m.row(r) + (Scalar(1) - b1) * g.row(r);
    mom.v.row(r) = b2 * mom.v.row(r) + (Scalar(1) - b2) * g.row(r).cwiseAbs2();
    p.row(r).array() -= lr * (mom.m.row(r).array() / c1) / ((mom.v.row(r).array() / c2).sqrt() + eps);
  }
}

/// One dense Adam step over a parameter list. Moments are created on first
/// use; `state.t` advances by one.
template <typename Scalar>
void adam_step(std::span<Tensor<Scalar>> params, std::span<const Tensor<Scalar>> grads, AdamState<Scalar>& state,
               std::span<const std::string> names = {}) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter and gradient counts differ");
  if (state.moments.empty()) {
    for (const auto& p : params) state.moments.push_back(AdamMoments<Scalar>::zeros_like(p));
  }
  if (state.moments.size() != params.size()) throw ShapeError("adam_step: state holds a different parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    detail::check_grad(i < names.size() ? names[i] : "#" + std::to_string(i), params[i], grads[i]);
  }
  ++state.t;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = i < names.size() ? names[i] : "#" + std::to_string(i);
    adam_update(state.config, state.t, name, params[i], grads[i], state.moments[i]);
  }
}

}  // namespace sigman
