#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <utility>

#include "liboost/tensor.hpp"

namespace liboost {

template <typename T>
class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid as long as the
// tape is alive.
template <typename T>
class Var {
 public:
  Var() = default;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  std::size_t id() const { return id_; }
  Tape<T>* tape() const { return tape_; }

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Computation record for reverse-mode differentiation. Nodes are appended in
// evaluation order, so walking them backwards is a valid topological order.
// One tape per logical thread; tapes share no state.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that gradients are never computed for (model weights in attacks,
  // data in training).
  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, {}); }

  // Leaf whose gradient backward() populates.
  Var<T> variable(Tensor<T> value) { return push(std::move(value), true, {}); }

  // Records an operation output. The node needs a gradient iff any input
  // does; `backward` is dropped otherwise.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs,
                BackwardFn backward) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || in.requires_grad();
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  // Seeds d(loss)/d(loss) = 1 and propagates to every node that requires a
  // gradient. The tape is consumed afterwards.
  void backward(Var<T> loss) {
    if (loss.tape() != this) throw Error("backward: variable from another tape");
    Node& root = nodes_.at(loss.id());
    if (root.value.size() != 1) {
      throw ShapeError("backward: loss must be scalar, got shape " +
                       shape_string(root.value.shape()));
    }
    if (!root.backward) {
      throw Error("backward: loss has no recorded history");
    }
    if (consumed_) throw Error("backward: tape already consumed");
    consumed_ = true;
    root.grad = Tensor<T>(root.value.shape(), T{1});
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& node = nodes_[id];
      if (node.backward && !node.grad.empty()) node.backward(*this, node.grad);
    }
  }

  // Gradient buffer of `v`, allocated as zeros on first use. Backward
  // functions accumulate into it.
  Tensor<T>& grad_buffer(Var<T> v) {
    Node& node = nodes_.at(v.id());
    if (node.grad.empty()) node.grad = Tensor<T>(node.value.shape(), T{0});
    return node.grad;
  }

  // Gradient of the last backward() with respect to `v`; zeros when nothing
  // flowed into it.
  Tensor<T> grad(Var<T> v) const {
    const Node& node = nodes_.at(v.id());
    if (node.grad.empty()) return Tensor<T>(node.value.shape(), T{0});
    return node.grad;
  }

  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, BackwardFn backward) {
    nodes_.push_back(Node{std::move(value), {}, requires_grad, std::move(backward)});
    return Var<T>(this, nodes_.size() - 1);
  }

  // deque keeps references to node values stable while the tape grows.
  std::deque<Node> nodes_;
  bool consumed_ = false;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape_->value(id_);
}

template <typename T>
bool Var<T>::requires_grad() const {
  return tape_->requires_grad(id_);
}

}  // namespace liboost
