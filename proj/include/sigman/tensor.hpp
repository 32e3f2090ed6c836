#pragma once

#include <Eigen/Core>

#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sigman/errors.hpp"

namespace sigman {

/// Dense row-major storage used for every value in the library. Rank-1 data
/// is stored as a single row; scalars are 1x1.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

template <typename Scalar>
std::vector<Index> shape_of(const Tensor<Scalar>& t) {
  return {t.rows(), t.cols()};
}

inline std::string shape_str(Index rows, Index cols) {
  std::ostringstream os;
  os << '[' << rows << 'x' << cols << ']';
  return os.str();
}

template <typename Scalar>
std::string shape_str(const Tensor<Scalar>& t) {
  return shape_str(t.rows(), t.cols());
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Builds a tensor from an extent list (rank 0, 1 or 2) and a flat row-major
/// payload. Rejects size mismatches and non-finite entries.
template <typename Scalar>
Tensor<Scalar> make_tensor(std::span<const Index> shape, std::span<const Scalar> data) {
  if (shape.size() > 2) throw ShapeError("make_tensor: rank " + std::to_string(shape.size()) + " > 2");
  Index rows = 1, cols = 1;
  if (shape.size() == 1) cols = shape[0];
  if (shape.size() == 2) rows = shape[0], cols = shape[1];
  if (rows < 0 || cols < 0 || rows * cols != static_cast<Index>(data.size())) {
    throw ShapeError("make_tensor: shape " + shape_str(rows, cols) + " does not hold " +
                     std::to_string(data.size()) + " values");
  }
  Tensor<Scalar> t(rows, cols);
  std::copy(data.begin(), data.end(), t.data());
  if (!t.allFinite()) throw NumericError("make_tensor: non-finite entry");
  return t;
}

template <typename Scalar>
Tensor<Scalar> make_tensor(std::initializer_list<Index> shape, std::initializer_list<Scalar> data) {
  return make_tensor<Scalar>(std::span<const Index>(shape.begin(), shape.size()),
                             std::span<const Scalar>(data.begin(), data.size()));
}

template <typename Scalar>
Tensor<Scalar> scalar_tensor(Scalar v) {
  Tensor<Scalar> t(1, 1);
  t(0, 0) = v;
  return t;
}

}  // namespace sigman
