#ifndef LFSR_AUTODIFF_HPP
#define LFSR_AUTODIFF_HPP

#include "lfsr/tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace lfsr {

/// Named trainable tensor. Gradients accumulate into `grad` until cleared.
template <typename Scalar>
struct ParamTensor {
  std::string name;
  Tensor4<Scalar> value;
  Tensor4<Scalar> grad;
  bool trainable = true;

  ParamTensor(std::string n, const Shape4& shape)
      : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { grad.set_zero(); }
};

template <typename Scalar>
struct Node {
  Tensor4<Scalar> value;
  Tensor4<Scalar> grad;
  bool requires_grad = false;
  std::function<void(Node&)> backward;

  bool has_grad() const { return !grad.empty(); }
  Tensor4<Scalar>& grad_buffer() {
    if (grad.empty()) grad = Tensor4<Scalar>(value.shape());
    return grad;
  }
};

template <typename Scalar>
using Var = std::shared_ptr<Node<Scalar>>;

/// Reverse-mode tape.
///
/// With recording off, operations only compute values and no closures or
/// intermediate nodes are retained.
template <typename Scalar>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  Var<Scalar> constant(Tensor4<Scalar> value) const {
    auto n = std::make_shared<Node<Scalar>>();
    n->value = std::move(value);
    return n;
  }

  /// Leaf whose gradient is wanted (e.g. for gradient checks).
  Var<Scalar> input(Tensor4<Scalar> value) {
    auto n = constant(std::move(value));
    if (recording_) {
      n->requires_grad = true;
      nodes_.push_back(n);
    }
    return n;
  }

  /// Records an op result. The closure receives the output node, whose grad
  /// is populated, and must push gradients to its inputs.
  Var<Scalar> record(Tensor4<Scalar> value, bool requires_grad, std::function<void(Node<Scalar>&)> backward) {
    auto n = constant(std::move(value));
    if (recording_ && requires_grad) {
      n->requires_grad = true;
      n->backward = std::move(backward);
      nodes_.push_back(n);
    }
    return n;
  }

  /// True when an op consuming these operands must record a backward.
  bool wants_grad(std::initializer_list<const Var<Scalar>*> vars, bool uses_trainable = false) const {
    if (!recording_) return false;
    if (uses_trainable) return true;
    for (const auto* v : vars)
      if ((*v)->requires_grad) return true;
    return false;
  }

  void note_param_use(const ParamTensor<Scalar>* p) { param_uses_.push_back(p); }
  const std::vector<const ParamTensor<Scalar>*>& param_uses() const { return param_uses_; }

  /// Backpropagates from a scalar output.
  void backward(const Var<Scalar>& out) {
    if (out->value.size() != 1) throw Error("backward: output is not a scalar; pass a seed");
    backward(out, Tensor4<Scalar>::Constant(out->value.shape(), Scalar(1)));
  }

  /// Backpropagates the cotangent `seed` from `out`.
  void backward(const Var<Scalar>& out, const Tensor4<Scalar>& seed) {
    require_same_shape(out->value, seed, "backward seed");
    if (!out->requires_grad) return;
    out->grad_buffer().array() += seed.array();
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<Scalar>& n = **it;
      if (n.has_grad() && n.backward) n.backward(n);
    }
  }

  void clear() {
    nodes_.clear();
    param_uses_.clear();
  }

 private:
  bool recording_;
  std::vector<Var<Scalar>> nodes_;
  std::vector<const ParamTensor<Scalar>*> param_uses_;
};

}  // namespace lfsr

#endif  // LFSR_AUTODIFF_HPP
