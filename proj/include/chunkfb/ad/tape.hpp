#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chunkfb/ad/tensor.hpp"
#include "chunkfb/error.hpp"

namespace chunkfb::ad {

template <typename Scalar>
class Tape;

/// Handle to a value recorded on a tape.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<Scalar>& value() const { return tape->value(*this); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool needs_grad() const { return tape->needs_grad(*this); }
};

/// Records forward values in execution order; backward() replays the local
/// gradient rules once each, in reverse.
template <typename Scalar>
class Tape {
 public:
  using Mat = Tensor<Scalar>;
  using BackwardFn = std::function<void(Tape&, const Mat&)>;

  Tape() { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var<Scalar> variable(Mat value) { return push(std::move(value), true, nullptr); }

  /// Leaf that never receives a gradient.
  Var<Scalar> constant(Mat value) { return push(std::move(value), false, nullptr); }

  Var<Scalar> push(Mat value, bool needs_grad, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var<Scalar>{this, nodes_.size() - 1};
  }

  const Mat& value(Var<Scalar> v) const { return node(v).value; }
  bool needs_grad(Var<Scalar> v) const { return node(v).needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Adds `delta` into the gradient of `v`, allocating it on first use.
  template <typename Expr>
  void accumulate(Var<Scalar> v, const Expr& delta) {
    Node& n = nodes_[v.id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = delta;
    } else {
      n.grad += delta;
    }
  }

  /// Mutable gradient buffer of `v`, zero-initialized on first use.
  Mat& grad_buffer(Var<Scalar> v) {
    Node& n = nodes_[v.id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void backward(Var<Scalar> loss) {
    if (loss.tape != this || loss.id >= nodes_.size()) {
      throw Error("backward: loss is not recorded on this tape");
    }
    const Mat& lv = nodes_[loss.id].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw Error("backward: loss must be a scalar, got " + shape_string(lv));
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[loss.id].grad = Mat::Ones(1, 1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || !n.backward || n.grad.size() == 0) continue;
      // The rule may allocate gradients of earlier nodes, which never
      // invalidates this node's storage.
      n.backward(*this, n.grad);
    }
  }

  /// Gradient of the last backward() with respect to `v`; zeros when `v`
  /// did not influence the loss.
  Mat grad(Var<Scalar> v) const {
    const Node& n = node(v);
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  const Node& node(Var<Scalar> v) const {
    if (v.tape != this || v.id >= nodes_.size()) throw Error("variable is not recorded on this tape");
    return nodes_[v.id];
  }

  std::vector<Node> nodes_;
};

}  // namespace chunkfb::ad
