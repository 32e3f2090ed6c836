#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "sigman/tape.hpp"
#include "sigman/tensor.hpp"

namespace sigman::test {

using Rng = std::mt19937_64;

template <typename Scalar = double>
Tensor<Scalar> random_tensor(Rng& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<Scalar> t(rows, cols);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(u(rng));
  return t;
}

template <typename Scalar = double>
Tensor<Scalar> zeros(Index rows, Index cols) {
  return Tensor<Scalar>::Zero(rows, cols);
}

inline Index random_int(Rng& rng, Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); }

/// Scalar-valued function of one tensor, built on a fresh tape.
using ScalarFn = std::function<Var<double>(Tape<double>&, Var<double>)>;

/// Reverse-mode gradient of `f` at `x`.
inline Tensor<double> tape_grad(const ScalarFn& f, const Tensor<double>& x) {
  Tape<double> tape;
  auto v = tape.leaf(x);
  auto out = f(tape, v);
  tape.backward(out);
  return tape.grad(v);
}

/// Central finite differences.
inline Tensor<double> fd_grad(const ScalarFn& f, const Tensor<double>& x, double h = 1e-6) {
  Tensor<double> g(x.rows(), x.cols());
  for (Index i = 0; i < x.size(); ++i) {
    Tensor<double> xp = x, xm = x;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    Tape<double> tp, tm;
    const double fp = f(tp, tp.constant(xp)).item();
    const double fm = f(tm, tm.constant(xm)).item();
    g.data()[i] = (fp - fm) / (2 * h);
  }
  return g;
}

/// |a - b| / max(|a|, |b|, floor) in the Frobenius norm.
inline double rel_error(const Tensor<double>& a, const Tensor<double>& b, double floor = 1e-8) {
  const double scale = std::max({a.norm(), b.norm(), floor});
  return (a - b).norm() / scale;
}

inline double grad_check(const ScalarFn& f, const Tensor<double>& x) { return rel_error(tape_grad(f, x), fd_grad(f, x)); }

/// Fresh empty directory under the test working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sigman::test
