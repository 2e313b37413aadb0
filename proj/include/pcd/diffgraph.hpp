#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pcd/types.hpp"

namespace pcd::ad {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while the tape is
// alive and has not been reset.
class Value {
 public:
  Value() = default;

  const Matrix& data() const;
  // Zeros until backward() reaches this node.
  const Matrix& grad() const;
  Eigen::Index rows() const { return data().rows(); }
  Eigen::Index cols() const { return data().cols(); }
  bool requires_grad() const;
  // Value of a 1 x 1 node.
  double item() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Value(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Ordered record of executed primitives. Nodes are appended in creation
// order, so every input precedes its consumers; backward() walks the record
// in exact reverse order.
class Tape {
 public:
  // Receives the gradient flowing into the node's output and accumulates
  // into its inputs through Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Trainable leaf: gradients are accumulated into it.
  Value leaf(Matrix data);
  // Non-differentiable input.
  Value constant(Matrix data);

  // Appends an operation node. `backward` is dropped when no input
  // requires a gradient.
  Value record(Matrix data, std::span<const Value> inputs, BackwardFn backward);

  // Gradient of a scalar `loss` into every leaf. Intermediate gradients are
  // cleared first; leaf gradients accumulate across calls until zero_grad().
  void backward(const Value& loss);

  void zero_grad();
  // Drops every node; outstanding Values become dangling.
  void reset();

  // Adds `g` into the gradient of `v` if `v` participates in differentiation.
  void accumulate(const Value& v, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Value;

  struct Node {
    Matrix data;
    mutable Matrix grad;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  const Node& node(const Value& v) const;
  Node& node(const Value& v);

  std::vector<Node> nodes_;
};

// --- primitives -----------------------------------------------------------
// Shapes are checked at construction; a mismatch throws a contract error.
// Binary elementwise ops accept equal shapes, or a 1 x C row / N x 1 column
// against an N x C matrix (second operand broadcast).

Value affine(const Value& x, const Value& w, const Value& b);  // x w + b, b is 1 x out
Value matmul(const Value& a, const Value& b);
Value relu(const Value& x);
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul_scalar(const Value& x, double s);
Value neg(const Value& x);
Value square(const Value& x);
Value exp(const Value& x);
Value sum(const Value& x);   // 1 x 1
Value mean(const Value& x);  // 1 x 1
Value row_select(const Value& x, std::span<const std::size_t> rows);
Value reshape(const Value& x, Eigen::Index rows, Eigen::Index cols);  // row-major order

// Sorts every column independently in descending order. Ties keep the
// original row order; backward scatters through the recorded permutation.
Value channelwise_sort_desc(const Value& x);
// 1 x C column maxima; ties go to the lowest row index.
Value channelwise_max(const Value& x);

// Row permutation that sorts each column descending with stable tie order.
// perm[c][r] is the source row of output row r in column c.
std::vector<std::vector<Eigen::Index>> sort_desc_permutation(const Matrix& x);

// --- finite-difference oracle -----------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_block = 0;
  Eigen::Index worst_index = 0;
  std::vector<Matrix> analytic;
  std::vector<Matrix> numeric;
};

// |a - n| / max(1e-12, |a| + |n|), maximized over entries.
double max_relative_error(const Matrix& analytic, const Matrix& numeric);

// f maps leaf blocks (created on the given tape) to a scalar Value.
using BlockFunction = std::function<Value(Tape&, std::span<const Value>)>;

// Compares reverse-mode gradients of `f` at `blocks` with central
// differences of step `h`.
GradCheckResult finite_diff_check(const BlockFunction& f, const std::vector<Matrix>& blocks,
                                  double h = 1e-5);

// Central differences of a plain scalar function.
Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& x,
                          double h = 1e-5);

}  // namespace pcd::ad
