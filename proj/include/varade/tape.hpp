#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "varade/ops.hpp"
#include "varade/tensor.hpp"

namespace varade {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Single-use record of executed operations for reverse-mode differentiation.
///
/// Values are appended in execution order; `backward` replays the recorded
/// adjoints in exact reverse order. Only values reachable from a parameter
/// carry gradients. A tape is owned by one training step on one thread.
template <typename Scalar>
class Tape {
 public:
  using TensorT = Tensor<Scalar>;
  using Adjoint = std::function<void(Tape&)>;

  Var constant(TensorT value) { return push(std::move(value), false); }
  Var parameter(TensorT value) { return push(std::move(value), true); }

  /// Records an op output. `adjoint` runs during backward only if the output
  /// requires a gradient.
  Var record(TensorT value, std::initializer_list<Var> inputs, Adjoint adjoint) {
    bool needs_grad = false;
    for (Var v : inputs) needs_grad = needs_grad || nodes_.at(v.id).requires_grad;
    Var out = push(std::move(value), needs_grad);
    if (needs_grad) ops_.push_back({out, std::move(adjoint)});
    return out;
  }

  const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient buffer of `v`; zero-filled for values not on any path to the loss.
  const TensorT& grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (!n.requires_grad) throw std::logic_error("tape: gradient requested for a constant");
    if (!has_grads_) throw std::logic_error("tape: backward has not run");
    return n.grad;
  }

  /// Mutable gradient accumulator, allocated on first touch. Used by adjoints.
  TensorT& grad_accumulator(Var v) {
    Node& n = nodes_.at(v.id);
    if (n.grad.empty()) n.grad = TensorT::zeros(n.value.shape());
    return n.grad;
  }

  void backward(Var loss) {
    Node& root = nodes_.at(loss.id);
    if (root.value.size() != 1)
      throw ShapeError("backward: loss must be a scalar, got " + to_string(root.value.shape()));
    if (has_grads_) throw std::logic_error("tape: backward already ran");
    for (Node& n : nodes_)
      if (n.requires_grad) n.grad = TensorT::zeros(n.value.shape());
    has_grads_ = true;
    if (!root.requires_grad) return;
    root.grad.flat().setOnes();
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      if (it->out.id > loss.id) continue;
      it->adjoint(*this);
      ++replayed_;
    }
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t replayed_ops() const { return replayed_; }

 private:
  struct Node {
    TensorT value;
    TensorT grad;
    bool requires_grad = false;
  };
  struct Op {
    Var out;
    Adjoint adjoint;
  };

  Var push(TensorT value, bool requires_grad) {
    nodes_.push_back({std::move(value), TensorT{}, requires_grad});
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<Op> ops_;
  bool has_grads_ = false;
  std::size_t replayed_ = 0;
};

template <typename Scalar>
Var conv1d(Tape<Scalar>& tape, Var x, Var weight, Var bias) {
  auto out = conv1d(tape.value(x), tape.value(weight), tape.value(bias));
  return tape.record(std::move(out), {x, weight, bias}, [x, weight, bias, y = Var{tape.size()}](Tape<Scalar>& t) {
    const auto dy = t.grad(y).matrix();
    const auto& xv = t.value(x);
    if (t.requires_grad(weight)) {
      auto dw = t.grad_accumulator(weight).matrix();
      dw.noalias() += dy * detail::pair_patches(xv).transpose();
    }
    if (t.requires_grad(bias)) t.grad_accumulator(bias).flat() += dy.rowwise().sum().transpose();
    if (t.requires_grad(x)) {
      RowMatrix<Scalar> dpatches = t.value(weight).matrix().transpose() * dy;
      detail::scatter_pair_patches(dpatches, t.grad_accumulator(x));
    }
  });
}

template <typename Scalar>
Var relu(Tape<Scalar>& tape, Var x) {
  return tape.record(relu(tape.value(x)), {x}, [x, y = Var{tape.size()}](Tape<Scalar>& t) {
    // Subgradient 0 at exactly 0.
    const auto& xv = t.value(x).flat();
    auto& dx = t.grad_accumulator(x).flat();
    dx.array() += (xv.array() > Scalar(0)).select(t.grad(y).flat().array(), Scalar(0));
  });
}

template <typename Scalar>
Var linear(Tape<Scalar>& tape, Var x, Var weight, Var bias) {
  auto out = linear(tape.value(x), tape.value(weight), tape.value(bias));
  return tape.record(std::move(out), {x, weight, bias},
                     [x, weight, bias, y = Var{tape.size()}](Tape<Scalar>& t) {
                       const auto& dy = t.grad(y);
                       const auto& xv = t.value(x);
                       const Index batch = xv.rank() == 1 ? 1 : xv.dim(1);
                       Eigen::Map<const RowMatrix<Scalar>> dym(dy.data(), dy.dim(0), batch);
                       Eigen::Map<const RowMatrix<Scalar>> xm(xv.data(), xv.dim(0), batch);
                       if (t.requires_grad(weight))
                         t.grad_accumulator(weight).matrix().noalias() += dym * xm.transpose();
                       if (t.requires_grad(bias))
                         t.grad_accumulator(bias).flat() += dym.rowwise().sum().transpose();
                       if (t.requires_grad(x)) {
                         auto& dx = t.grad_accumulator(x);
                         Eigen::Map<RowMatrix<Scalar>> dxm(dx.data(), xv.dim(0), batch);
                         dxm.noalias() += t.value(weight).matrix().transpose() * dym;
                       }
                     });
}

template <typename Scalar>
Var fold_windows(Tape<Scalar>& tape, Var x, Index width) {
  return tape.record(fold_windows(tape.value(x), width), {x},
                     [x, width, y = Var{tape.size()}](Tape<Scalar>& t) {
                       auto dx = t.grad_accumulator(x).matrix();
                       const auto dy = t.grad(y).matrix();
                       const Index batch = dy.cols();
                       for (Index c = 0; c < dx.rows(); ++c)
                         for (Index b = 0; b < batch; ++b)
                           for (Index k = 0; k < width; ++k)
                             dx(c, b * width + k) += dy(c * width + k, b);
                     });
}

/// Sum of all elements, as a scalar.
template <typename Scalar>
Var sum(Tape<Scalar>& tape, Var x) {
  Tensor<Scalar> out(Shape{});
  out[0] = tape.value(x).flat().sum();
  return tape.record(std::move(out), {x}, [x, y = Var{tape.size()}](Tape<Scalar>& t) {
    t.grad_accumulator(x).flat().array() += t.grad(y)[0];
  });
}

/// Elementwise square.
template <typename Scalar>
Var square(Tape<Scalar>& tape, Var x) {
  const auto& xv = tape.value(x);
  Tensor<Scalar> out(xv.shape(), xv.flat().array().square().matrix().eval());
  return tape.record(std::move(out), {x}, [x, y = Var{tape.size()}](Tape<Scalar>& t) {
    t.grad_accumulator(x).flat().array() +=
        Scalar(2) * t.value(x).flat().array() * t.grad(y).flat().array();
  });
}

}  // namespace varade
