#include "stformer/tape.hpp"

#include <algorithm>

#include "stformer/error.hpp"

namespace stformer {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  value.set_requires_grad(false);
  nodes_.push_back(Node{std::move(value), {}, nullptr, nullptr, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor& t) {
  Var v = leaf(static_cast<const Tensor&>(t));
  nodes_[v.id()].sink = &t;
  return v;
}

Var Tape::leaf(const Tensor& t) {
  if (auto it = leaves_.find(&t); it != leaves_.end()) return Var(this, it->second);
  nodes_.push_back(Node{Tensor{}, {}, &t, nullptr, {}});
  leaves_.emplace(&t, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

std::span<const double> Tape::grad_of(const Tensor& t) const {
  auto it = leaves_.find(&t);
  if (it == leaves_.end()) return {};
  return nodes_[it->second].grad;
}

Var Tape::record(Tensor value, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, nullptr, std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw UsageError("backward: loss was recorded on a different tape");
  if (loss.value().numel() != 1) {
    throw UsageError("backward: loss must be scalar, got shape " +
                     shape_string(loss.value().shape()));
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) nodes_[i].grad.assign(value(i).numel(), 0.0);
  nodes_[loss.id()].grad[0] = 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
  for (auto& node : nodes_) {
    if (node.sink != nullptr && node.sink->requires_grad()) {
      node.sink->accumulate_grad(node.grad);
    }
  }
}

void backward(Var loss) { loss.tape().backward(loss); }

}  // namespace stformer
