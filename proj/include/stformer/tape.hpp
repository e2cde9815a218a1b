#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "stformer/tensor.hpp"

namespace stformer {

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run record of a computation.
///
/// Nodes are appended in evaluation order, so recording order is a topological
/// order; backward() walks it in exact reverse. A tape is confined to one
/// thread; separate tapes share nothing.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records a copy of `value` that gradients never reach.
  Var constant(Tensor value);

  /// Binds an externally owned tensor (typically a parameter) by reference; it
  /// must outlive the tape and stay unmodified until backward() returns.
  /// Binding the same tensor twice returns the same node. Gradients reach `t`
  /// on backward() iff t.requires_grad() is set.
  Var leaf(Tensor& t);

  /// Read-only binding: the node gradient is computed but stays on the tape;
  /// fetch it with grad_of().
  Var leaf(const Tensor& t);

  /// Node gradient of a bound tensor after backward(); empty if `t` is not bound.
  std::span<const double> grad_of(const Tensor& t) const;

  /// Appends an op result. `backward` reads grad(self) and adds into input grads.
  Var record(Tensor value, BackwardFn backward);

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.bound != nullptr ? *n.bound : n.value;
  }
  /// Gradient buffer of a node; only meaningful during/after backward().
  std::span<double> grad(std::size_t id) { return nodes_[id].grad; }
  std::span<const double> grad(std::size_t id) const { return nodes_[id].grad; }

  std::size_t size() const { return nodes_.size(); }

  /// Reverse-mode sweep from a single-element `loss`. Node gradients are reset
  /// first; gradients of bound tensors accumulate across calls (zero them
  /// between optimizer steps).
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    const Tensor* bound = nullptr;
    Tensor* sink = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> leaves_;
};

/// Free-function spelling of Tape::backward.
void backward(Var loss);

}  // namespace stformer
