#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "varade/tensor.hpp"

namespace varade {

template <typename Scalar>
struct AdamState {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor<Scalar>> m;
  std::vector<Tensor<Scalar>> v;
};

/// One bias-corrected Adam update. Gradients are validated before any
/// parameter is touched; a non-finite gradient throws NumericError and leaves
/// parameters and state unchanged.
template <typename Scalar>
void adam_step(std::span<Tensor<Scalar>* const> params, std::span<const Tensor<Scalar>* const> grads,
               AdamState<Scalar>& state) {
  if (params.size() != grads.size())
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params but " +
                     std::to_string(grads.size()) + " gradients");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(grads[i]->shape(), params[i]->shape(), "adam_step gradient");
    if (!grads[i]->all_finite())
      throw NumericError("adam_step: non-finite gradient in parameter " + std::to_string(i) +
                         " at step " + std::to_string(state.step + 1));
  }
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Tensor<Scalar>::zeros(p->shape()));
      state.v.push_back(Tensor<Scalar>::zeros(p->shape()));
    }
  } else if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks a different parameter set");
  }

  ++state.step;
  const auto t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  const auto m_corr = static_cast<Scalar>(1.0 - std::pow(state.beta1, t));
  const auto v_corr = static_cast<Scalar>(1.0 - std::pow(state.beta2, t));
  const auto lr = static_cast<Scalar>(state.lr);
  const auto eps = static_cast<Scalar>(state.eps);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.m[i].flat().array();
    auto v = state.v[i].flat().array();
    const auto g = grads[i]->flat().array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    params[i]->flat().array() -= lr * (m / m_corr) / ((v / v_corr).sqrt() + eps);
  }
}

}  // namespace varade
