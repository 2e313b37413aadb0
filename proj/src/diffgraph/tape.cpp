#include "pcd/diffgraph.hpp"
#include "pcd/error.hpp"

namespace pcd::ad {

const Matrix& Value::data() const { return tape_->node(*this).data; }

const Matrix& Value::grad() const {
  const auto& n = tape_->node(*this);
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.data.rows(), n.data.cols());
  return n.grad;
}

bool Value::requires_grad() const { return tape_->node(*this).requires_grad; }

double Value::item() const {
  const Matrix& d = data();
  require(d.rows() == 1 && d.cols() == 1, ErrorDomain::contract, "item() on a non-scalar value");
  return d(0, 0);
}

const Tape::Node& Tape::node(const Value& v) const {
  require(v.tape_ == this && v.id_ < nodes_.size(), ErrorDomain::contract,
          "value does not belong to this tape");
  return nodes_[v.id_];
}

Tape::Node& Tape::node(const Value& v) {
  require(v.tape_ == this && v.id_ < nodes_.size(), ErrorDomain::contract,
          "value does not belong to this tape");
  return nodes_[v.id_];
}

Value Tape::leaf(Matrix data) {
  require(data.allFinite(), ErrorDomain::contract, "leaf data must be finite");
  nodes_.push_back(Node{std::move(data), Matrix(), nullptr, true, true});
  return Value(this, nodes_.size() - 1);
}

Value Tape::constant(Matrix data) {
  nodes_.push_back(Node{std::move(data), Matrix(), nullptr, false, false});
  return Value(this, nodes_.size() - 1);
}

Value Tape::record(Matrix data, std::span<const Value> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Value& in : inputs) {
    require(in.tape_ == this, ErrorDomain::contract, "operands live on different tapes");
    needs = needs || nodes_[in.id_].requires_grad;
  }
  nodes_.push_back(Node{std::move(data), Matrix(), needs ? std::move(backward) : nullptr, needs, false});
  return Value(this, nodes_.size() - 1);
}

void Tape::accumulate(const Value& v, const Matrix& g) {
  Node& n = node(v);
  if (!n.requires_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(const Value& loss) {
  const Node& out = node(loss);
  require(out.data.rows() == 1 && out.data.cols() == 1, ErrorDomain::contract,
          "backward() needs a scalar loss");
  for (Node& n : nodes_)
    if (!n.is_leaf) n.grad.resize(0, 0);
  if (!out.requires_grad) return;
  accumulate(loss, Matrix::Ones(1, 1));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.is_leaf || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.resize(0, 0);
}

void Tape::reset() { nodes_.clear(); }

}  // namespace pcd::ad
