#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sigman/errors.hpp"
#include "sigman/tensor.hpp"

// Debug builds screen every op output for NaN/Inf.
#if !defined(NDEBUG) && !defined(SIGMAN_NO_FINITE_CHECKS)
#define SIGMAN_CHECK_FINITE 1
#endif

namespace sigman {

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  MatMulNT,
  Transpose,
  Add,
  Sub,
  Mul,
  Scale,
  MulScalar,
  DivScalar,
  AddRow,
  Sigmoid,
  Sin,
  Cos,
  Relu,
  Square,
  Sqrt,
  Abs,
  Sum,
  RowSum,
  GatherRows,
  SliceCols,
  Reshape,
  ConcatRows,
  ConcatCols,
  Solve,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::MatMul: return "matmul";
    case Op::MatMulNT: return "matmul_nt";
    case Op::Transpose: return "transpose";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::MulScalar: return "mul_scalar";
    case Op::DivScalar: return "div_scalar";
    case Op::AddRow: return "add_row";
    case Op::Sigmoid: return "sigmoid";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Relu: return "relu";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Sum: return "sum";
    case Op::RowSum: return "row_sum";
    case Op::GatherRows: return "gather_rows";
    case Op::SliceCols: return "slice_cols";
    case Op::Reshape: return "reshape";
    case Op::ConcatRows: return "concat_rows";
    case Op::ConcatCols: return "concat_cols";
    case Op::Solve: return "solve";
  }
  return "?";
}

template <typename Scalar>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  const Tensor<Scalar>& value() const { return tape_->value(id_); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Index size() const { return value().size(); }
  Scalar item() const;

  int id() const { return id_; }
  Tape<Scalar>* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr && id_ >= 0; }

 private:
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

/// Records primitive ops in topological order and runs reverse-mode
/// differentiation over them. Nodes are appended only, so the record order is
/// always a valid topological order. Single writer.
template <typename Scalar>
class Tape {
 public:
  using Mat = Tensor<Scalar>;

  struct Aux {
    Scalar scalar = Scalar(0);
    Index a = 0;
    Index b = 0;
    std::vector<Index> indices;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input. Rejects non-finite values.
  Var<Scalar> leaf(Mat value) {
    if (!value.allFinite()) throw NumericError("leaf: non-finite entry");
    return append(Op::Leaf, std::move(value), {}, {}, true);
  }

  /// Non-differentiable input.
  Var<Scalar> constant(Mat value) {
    if (!value.allFinite()) throw NumericError("constant: non-finite entry");
    return append(Op::Constant, std::move(value), {}, {}, false);
  }

  /// Used by the op functions below.
  Var<Scalar> push(Op op, Mat value, std::initializer_list<int> inputs, Aux aux = {}) {
    return push(op, std::move(value), std::vector<int>(inputs), std::move(aux));
  }

  Var<Scalar> push(Op op, Mat value, std::vector<int> inputs, Aux aux = {}) {
    bool needs = false;
    for (int in : inputs) needs = needs || nodes_[in].needs_grad;
#ifdef SIGMAN_CHECK_FINITE
    if (!value.allFinite()) {
      throw NumericError(std::string(op_name(op)) + ": produced non-finite values " + shape_str(value));
    }
#endif
    return append(op, std::move(value), std::move(inputs), std::move(aux), needs);
  }

  const Mat& value(int id) const { return nodes_.at(id).value; }
  Op op(int id) const { return nodes_.at(id).op; }
  const std::vector<int>& inputs(int id) const { return nodes_.at(id).inputs; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep seeded with d(output)/d(output) = 1. Output must be 1x1.
  void backward(Var<Scalar> output);

  /// Gradient of the last backward() output w.r.t. `v`. Zero when `v` was not
  /// on any path to the output.
  Mat grad(Var<Scalar> v) const {
    const auto& n = nodes_.at(v.id());
    if (grads_.size() > static_cast<std::size_t>(v.id()) && grads_[v.id()].size() != 0) return grads_[v.id()];
    return Mat::Zero(n.value.rows(), n.value.cols());
  }

 private:
  struct Node {
    Op op;
    Mat value;
    std::vector<int> inputs;
    Aux aux;
    bool needs_grad;
  };

  Var<Scalar> append(Op op, Mat value, std::vector<int> inputs, Aux aux, bool needs) {
    nodes_.push_back(Node{op, std::move(value), std::move(inputs), std::move(aux), needs});
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  Mat& grad_ref(int id) {
    auto& g = grads_[id];
    if (g.size() == 0) g = Mat::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
    return g;
  }

  bool wants(int id) const { return nodes_[id].needs_grad; }

  void backprop(int id);

  std::vector<Node> nodes_;
  std::vector<Mat> grads_;
};

template <typename Scalar>
Scalar Var<Scalar>::item() const {
  const auto& v = value();
  if (v.size() != 1) throw ShapeError("item: expected 1x1, got " + shape_str(v));
  return v(0, 0);
}

template <typename Scalar>
void Tape<Scalar>::backward(Var<Scalar> output) {
  if (output.tape() != this) throw ShapeError("backward: variable belongs to another tape");
  const auto& out = nodes_.at(output.id()).value;
  if (out.size() != 1) throw ShapeError("backward: output must be scalar, got " + shape_str(out));
  grads_.assign(nodes_.size(), Mat());
  grad_ref(output.id()).setConstant(Scalar(1));
  for (int id = output.id(); id >= 0; --id) {
    if (grads_[id].size() == 0 || !nodes_[id].needs_grad) continue;
    backprop(id);
  }
}

template <typename Scalar>
void Tape<Scalar>::backprop(int id) {
  const Node& n = nodes_[id];
  const Mat& g = grads_[id];
  const auto& in = n.inputs;
  switch (n.op) {
    case Op::Leaf:
    case Op::Constant:
      break;
    case Op::MatMul: {
      const Mat& a = nodes_[in[0]].value;
      const Mat& b = nodes_[in[1]].value;
      if (wants(in[0])) grad_ref(in[0]).noalias() += g * b.transpose();
      if (wants(in[1])) grad_ref(in[1]).noalias() += a.transpose() * g;
      break;
    }
    case Op::MatMulNT: {
      const Mat& a = nodes_[in[0]].value;
      const Mat& b = nodes_[in[1]].value;
      if (wants(in[0])) grad_ref(in[0]).noalias() += g * b;
      if (wants(in[1])) grad_ref(in[1]).noalias() += g.transpose() * a;
      break;
    }
    case Op::Transpose:
      if (wants(in[0])) grad_ref(in[0]) += g.transpose();
      break;
    case Op::Add:
      if (wants(in[0])) grad_ref(in[0]) += g;
      if (wants(in[1])) grad_ref(in[1]) += g;
      break;
    case Op::Sub:
      if (wants(in[0])) grad_ref(in[0]) += g;
      if (wants(in[1])) grad_ref(in[1]) -= g;
      break;
    case Op::Mul:
      if (wants(in[0])) grad_ref(in[0]) += g.cwiseProduct(nodes_[in[1]].value);
      if (wants(in[1])) grad_ref(in[1]) += g.cwiseProduct(nodes_[in[0]].value);
      break;
    case Op::Scale:
      if (wants(in[0])) grad_ref(in[0]) += n.aux.scalar * g;
      break;
    case Op::MulScalar: {
      const Scalar s = nodes_[in[1]].value(0, 0);
      if (wants(in[0])) grad_ref(in[0]) += s * g;
      if (wants(in[1])) grad_ref(in[1])(0, 0) += g.cwiseProduct(nodes_[in[0]].value).sum();
      break;
    }
    case Op::DivScalar: {
      const Scalar s = nodes_[in[1]].value(0, 0);
      if (wants(in[0])) grad_ref(in[0]) += g / s;
      if (wants(in[1])) grad_ref(in[1])(0, 0) -= g.cwiseProduct(nodes_[in[0]].value).sum() / (s * s);
      break;
    }
    case Op::AddRow:
      if (wants(in[0])) grad_ref(in[0]) += g;
      if (wants(in[1])) grad_ref(in[1]) += g.colwise().sum();
      break;
    case Op::Sigmoid:
      grad_ref(in[0]).array() += g.array() * n.value.array() * (Scalar(1) - n.value.array());
      break;
    case Op::Sin:
      grad_ref(in[0]).array() += g.array() * nodes_[in[0]].value.array().cos();
      break;
    case Op::Cos:
      grad_ref(in[0]).array() -= g.array() * nodes_[in[0]].value.array().sin();
      break;
    case Op::Relu:
      grad_ref(in[0]).array() +=
          (nodes_[in[0]].value.array() > Scalar(0)).select(g.array(), Scalar(0));
      break;
    case Op::Square:
      grad_ref(in[0]).array() += Scalar(2) * g.array() * nodes_[in[0]].value.array();
      break;
    case Op::Sqrt:
      // Subgradient 0 at the origin.
      grad_ref(in[0]).array() +=
          (n.value.array() > Scalar(0)).select(g.array() / (Scalar(2) * n.value.array()), Scalar(0));
      break;
    case Op::Abs:
      grad_ref(in[0]).array() += g.array() * nodes_[in[0]].value.array().sign();
      break;
    case Op::Sum:
      grad_ref(in[0]).array() += g(0, 0);
      break;
    case Op::RowSum:
      grad_ref(in[0]).colwise() += g.col(0);
      break;
    case Op::GatherRows: {
      auto& ga = grad_ref(in[0]);
      for (std::size_t k = 0; k < n.aux.indices.size(); ++k) ga.row(n.aux.indices[k]) += g.row(k);
      break;
    }
    case Op::SliceCols:
      grad_ref(in[0]).middleCols(n.aux.a, n.aux.b) += g;
      break;
    case Op::Reshape: {
      auto& ga = grad_ref(in[0]);
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> flat(g.data(), g.size());
      Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(ga.data(), ga.size()) += flat;
      break;
    }
    case Op::ConcatRows: {
      Index offset = 0;
      for (int src : in) {
        const Index r = nodes_[src].value.rows();
        if (wants(src)) grad_ref(src) += g.middleRows(offset, r);
        offset += r;
      }
      break;
    }
    case Op::ConcatCols: {
      Index offset = 0;
      for (int src : in) {
        const Index c = nodes_[src].value.cols();
        if (wants(src)) grad_ref(src) += g.middleCols(offset, c);
        offset += c;
      }
      break;
    }
    case Op::Solve: {
      // X = A^{-1} B  =>  gB = A^{-T} gX,  gA = -gB X^T
      const Mat& a = nodes_[in[0]].value;
      Mat gb = a.transpose().partialPivLu().solve(g);
      if (wants(in[1])) grad_ref(in[1]) += gb;
      if (wants(in[0])) grad_ref(in[0]).noalias() -= gb * n.value.transpose();
      break;
    }
  }
}

namespace detail {

template <typename Scalar>
Tape<Scalar>* same_tape(const char* op, Var<Scalar> a, Var<Scalar> b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw ShapeError(std::string(op) + ": operands are not on the same tape");
  }
  return a.tape();
}

template <typename Scalar>
void require_same_shape(const char* op, Var<Scalar> a, Var<Scalar> b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  }
}

template <typename Scalar>
void require_scalar(const char* op, Var<Scalar> s) {
  if (s.size() != 1) throw ShapeError(std::string(op) + ": expected 1x1 operand, got " + shape_str(s.value()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitive ops
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  auto* t = detail::same_tape("matmul", a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner extents differ " + shape_str(a.value()) + " x " + shape_str(b.value()));
  }
  Tensor<Scalar> out = a.value() * b.value();
  return t->push(Op::MatMul, std::move(out), {a.id(), b.id()});
}

/// a * b^T without materializing the transpose.
template <typename Scalar>
Var<Scalar> matmul_nt(Var<Scalar> a, Var<Scalar> b) {
  auto* t = detail::same_tape("matmul_nt", a, b);
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: inner extents differ " + shape_str(a.value()) + " x " + shape_str(b.value()) + "^T");
  }
  Tensor<Scalar> out = a.value() * b.value().transpose();
  return t->push(Op::MatMulNT, std::move(out), {a.id(), b.id()});
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  Tensor<Scalar> out = a.value().transpose();
  return a.tape()->push(Op::Transpose, std::move(out), {a.id()});
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  auto* t = detail::same_tape("add", a, b);
  detail::require_same_shape("add", a, b);
  Tensor<Scalar> out = a.value() + b.value();
  return t->push(Op::Add, std::move(out), {a.id(), b.id()});
}

template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) {
  auto* t = detail::same_tape("sub", a, b);
  detail::require_same_shape("sub", a, b);
  Tensor<Scalar> out = a.value() - b.value();
  return t->push(Op::Sub, std::move(out), {a.id(), b.id()});
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> hadamard(Var<Scalar> a, Var<Scalar> b) {
  auto* t = detail::same_tape("mul", a, b);
  detail::require_same_shape("mul", a, b);
  Tensor<Scalar> out = a.value().cwiseProduct(b.value());
  return t->push(Op::Mul, std::move(out), {a.id(), b.id()});
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar c) {
  typename Tape<Scalar>::Aux aux;
  aux.scalar = c;
  Tensor<Scalar> out = c * a.value();
  return a.tape()->push(Op::Scale, std::move(out), {a.id()}, std::move(aux));
}

template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a) {
  return scale(a, Scalar(-1));
}

template <typename Scalar>
Var<Scalar> operator*(Var<Scalar> a, Scalar c) {
  return scale(a, c);
}

template <typename Scalar>
Var<Scalar> operator*(Scalar c, Var<Scalar> a) {
  return scale(a, c);
}

/// a * s where s is a 1x1 node.
template <typename Scalar>
Var<Scalar> mul_scalar(Var<Scalar> a, Var<Scalar> s) {
  auto* t = detail::same_tape("mul_scalar", a, s);
  detail::require_scalar("mul_scalar", s);
  Tensor<Scalar> out = a.value() * s.value()(0, 0);
  return t->push(Op::MulScalar, std::move(out), {a.id(), s.id()});
}

/// a / s where s is a 1x1 node.
template <typename Scalar>
Var<Scalar> div_scalar(Var<Scalar> a, Var<Scalar> s) {
  auto* t = detail::same_tape("div_scalar", a, s);
  detail::require_scalar("div_scalar", s);
  Tensor<Scalar> out = a.value() / s.value()(0, 0);
  return t->push(Op::DivScalar, std::move(out), {a.id(), s.id()});
}

/// Adds the 1xC row `bias` to every row of the RxC matrix `a`.
template <typename Scalar>
Var<Scalar> add_row(Var<Scalar> a, Var<Scalar> bias) {
  auto* t = detail::same_tape("add_row", a, bias);
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw ShapeError("add_row: bias " + shape_str(bias.value()) + " does not fit " + shape_str(a.value()));
  }
  Tensor<Scalar> out = a.value().rowwise() + bias.value().row(0);
  return t->push(Op::AddRow, std::move(out), {a.id(), bias.id()});
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  Tensor<Scalar> out = (Scalar(1) + (-a.value().array()).exp()).inverse().matrix();
  return a.tape()->push(Op::Sigmoid, std::move(out), {a.id()});
}

template <typename Scalar>
Var<Scalar> sin(Var<Scalar> a) {
  Tensor<Scalar> out = a.value().array().sin().matrix();
  return a.tape()->push(Op::Sin, std::move(out), {a.id()});
}

template <typename Scalar>
Var<Scalar> cos(Var<Scalar> a) {
  Tensor<Scalar> out = a.value().array().cos().matrix();
  return a.tape()->push(Op::Cos, std::move(out), {a.id()});
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a) {
  Tensor<Scalar> out = a.value().cwiseMax(Scalar(0));
  return a.tape()->push(Op::Relu, std::move(out), {a.id()});
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> a) {
  Tensor<Scalar> out = a.value().array().square().matrix();
  return a.tape()->push(Op::Square, std::move(out), {a.id()});
}

template <typename Scalar>
Var<Scalar> sqrt(Var<Scalar> a) {
  if ((a.value().array() < Scalar(0)).any()) throw NumericError("sqrt: negative input");
  Tensor<Scalar> out = a.value().array().sqrt().matrix();
  return a.tape()->push(Op::Sqrt, std::move(out), {a.id()});
}

template <typename Scalar>
Var<Scalar> abs(Var<Scalar> a) {
  Tensor<Scalar> out = a.value().cwiseAbs();
  return a.tape()->push(Op::Abs, std::move(out), {a.id()});
}

/// Sum of all entries, 1x1.
template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  return a.tape()->push(Op::Sum, scalar_tensor(a.value().sum()), {a.id()});
}

/// Per-row sum, Rx1.
template <typename Scalar>
Var<Scalar> row_sum(Var<Scalar> a) {
  Tensor<Scalar> out = a.value().rowwise().sum();
  return a.tape()->push(Op::RowSum, std::move(out), {a.id()});
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> a) {
  return scale(sum(a), Scalar(1) / static_cast<Scalar>(a.size()));
}

/// Selects rows of `a` by index; repeated indices are allowed.
template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> a, std::span<const Index> rows) {
  Tensor<Scalar> out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= a.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(rows[k]) + " outside " + shape_str(a.value()));
    }
    out.row(static_cast<Index>(k)) = a.value().row(rows[k]);
  }
  typename Tape<Scalar>::Aux aux;
  aux.indices.assign(rows.begin(), rows.end());
  return a.tape()->push(Op::GatherRows, std::move(out), {a.id()}, std::move(aux));
}

template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> a, std::initializer_list<Index> rows) {
  return gather_rows(a, std::span<const Index>(rows.begin(), rows.size()));
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside " + shape_str(a.value()));
  }
  typename Tape<Scalar>::Aux aux;
  aux.a = begin;
  aux.b = count;
  Tensor<Scalar> out = a.value().middleCols(begin, count);
  return a.tape()->push(Op::SliceCols, std::move(out), {a.id()}, std::move(aux));
}

/// Row-major reinterpretation with a new shape.
template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> a, Index rows, Index cols) {
  if (rows * cols != a.size()) {
    throw ShapeError("reshape: " + shape_str(a.value()) + " -> " + shape_str(rows, cols));
  }
  Tensor<Scalar> out = Eigen::Map<const Tensor<Scalar>>(a.value().data(), rows, cols);
  return a.tape()->push(Op::Reshape, std::move(out), {a.id()});
}

template <typename Scalar>
Var<Scalar> concat_rows(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Index rows = 0;
  const Index cols = parts[0].cols();
  std::vector<int> ids;
  for (const auto& p : parts) {
    detail::same_tape("concat_rows", parts[0], p);
    if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch " + shape_str(p.value()));
    rows += p.rows();
    ids.push_back(p.id());
  }
  Tensor<Scalar> out(rows, cols);
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  return parts[0].tape()->push(Op::ConcatRows, std::move(out), std::move(ids));
}

template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Index cols = 0;
  const Index rows = parts[0].rows();
  std::vector<int> ids;
  for (const auto& p : parts) {
    detail::same_tape("concat_cols", parts[0], p);
    if (p.rows() != rows) throw ShapeError("concat_cols: row mismatch " + shape_str(p.value()));
    cols += p.cols();
    ids.push_back(p.id());
  }
  Tensor<Scalar> out(rows, cols);
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return parts[0].tape()->push(Op::ConcatCols, std::move(out), std::move(ids));
}

/// Solves a * x = b for square `a`. Throws NumericError with the reciprocal
/// condition estimate when `a` is numerically singular.
template <typename Scalar>
Var<Scalar> solve(Var<Scalar> a, Var<Scalar> b) {
  auto* t = detail::same_tape("solve", a, b);
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw ShapeError("solve: " + shape_str(a.value()) + " \\ " + shape_str(b.value()));
  }
  const Scalar norm = a.value().cwiseAbs().colwise().sum().maxCoeff();
  Eigen::PartialPivLU<Tensor<Scalar>> lu(a.value());
  const Scalar rcond = norm > Scalar(0) ? lu.rcond() : Scalar(0);
  if (!(rcond > std::numeric_limits<Scalar>::epsilon())) {
    throw NumericError("solve: singular system, reciprocal condition estimate " + std::to_string(rcond));
  }
  Tensor<Scalar> out = lu.solve(b.value());
  return t->push(Op::Solve, std::move(out), {a.id(), b.id()});
}

}  // namespace sigman
