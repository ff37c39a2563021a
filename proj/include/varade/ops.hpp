#pragma once

#include <string>

#include "varade/tensor.hpp"

// Forward kernels for the fixed-rank operations of the forecasting graph.
// Each function has a taped counterpart in tape.hpp sharing these kernels.
namespace varade {

namespace detail {

// Gathers stride-2 pairs into a (2*C) x (L/2) patch matrix:
// patches(2c + k, t) = x(c, 2t + k).
template <typename Scalar>
RowMatrix<Scalar> pair_patches(const Tensor<Scalar>& x) {
  const Index channels = x.dim(0);
  const Index half = x.dim(1) / 2;
  RowMatrix<Scalar> patches(2 * channels, half);
  for (Index c = 0; c < channels; ++c) {
    Eigen::Map<const Eigen::Matrix<Scalar, 2, Eigen::Dynamic>> pairs(x.data() + c * 2 * half, 2,
                                                                     half);
    patches.middleRows(2 * c, 2) = pairs;
  }
  return patches;
}

// Adjoint of pair_patches: accumulates patch gradients back into the input layout.
template <typename Scalar, typename Derived>
void scatter_pair_patches(const Eigen::MatrixBase<Derived>& patches_grad, Tensor<Scalar>& x_grad) {
  const Index channels = x_grad.dim(0);
  const Index half = x_grad.dim(1) / 2;
  for (Index c = 0; c < channels; ++c) {
    Eigen::Map<Eigen::Matrix<Scalar, 2, Eigen::Dynamic>> pairs(x_grad.data() + c * 2 * half, 2,
                                                               half);
    pairs += patches_grad.middleRows(2 * c, 2);
  }
}

inline void check_conv1d(const Shape& x, const Shape& w, const Shape& b) {
  if (x.size() != 2) throw ShapeError("conv1d: input must be [C_in x L], got " + to_string(x));
  if (x[1] % 2 != 0)
    throw ShapeError("conv1d: input length must be even, got " + std::to_string(x[1]));
  if (w.size() != 3 || w[1] != x[0] || w[2] != 2)
    throw ShapeError("conv1d: weight must be [C_out x " + std::to_string(x[0]) + " x 2], got " +
                     to_string(w));
  require_shape(b, Shape{w[0]}, "conv1d bias");
}

inline void check_linear(const Shape& x, const Shape& w, const Shape& b) {
  if (x.empty() || x.size() > 2)
    throw ShapeError("linear: input must be [F] or [F x B], got " + to_string(x));
  if (w.size() != 2 || w[1] != x[0])
    throw ShapeError("linear: weight must be [O x " + std::to_string(x[0]) + "], got " +
                     to_string(w));
  require_shape(b, Shape{w[0]}, "linear bias");
}

}  // namespace detail

/// Kernel-2, stride-2 convolution over [C_in x L]; returns [C_out x L/2].
///
/// The input length may be a concatenation of several equal even-length
/// windows: stride-2 pairs never straddle a window boundary, so a batch is
/// convolved in one GEMM.
template <typename Scalar>
Tensor<Scalar> conv1d(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias) {
  detail::check_conv1d(x.shape(), weight.shape(), bias.shape());
  const Index out_channels = weight.dim(0);
  Tensor<Scalar> out(Shape{out_channels, x.dim(1) / 2});
  out.matrix().noalias() = weight.matrix() * detail::pair_patches(x);
  out.matrix().colwise() += bias.flat();
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  return Tensor<Scalar>(x.shape(), x.flat().cwiseMax(Scalar(0)).eval());
}

/// Affine map over [F] (single vector) or [F x B] (one column per sample).
template <typename Scalar>
Tensor<Scalar> linear(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias) {
  detail::check_linear(x.shape(), weight.shape(), bias.shape());
  if (x.rank() == 1) {
    Vector<Scalar> out = bias.flat();
    out.noalias() += weight.matrix() * x.flat();
    return Tensor<Scalar>(Shape{weight.dim(0)}, std::move(out));
  }
  Tensor<Scalar> out(Shape{weight.dim(0), x.dim(1)});
  out.matrix().noalias() = weight.matrix() * x.matrix();
  out.matrix().colwise() += bias.flat();
  return out;
}

/// Flattens consecutive width-`width` time blocks into columns:
/// [C x (B*width)] -> [(C*width) x B], out(c*width + t, b) = x(c, b*width + t).
/// With B == 1 this is the row-major flatten of a [C x width] feature map.
template <typename Scalar>
Tensor<Scalar> fold_windows(const Tensor<Scalar>& x, Index width) {
  if (x.rank() != 2 || width <= 0 || x.dim(1) % width != 0)
    throw ShapeError("fold_windows: cannot fold " + to_string(x.shape()) + " by " +
                     std::to_string(width));
  const Index channels = x.dim(0);
  const Index batch = x.dim(1) / width;
  Tensor<Scalar> out(Shape{channels * width, batch});
  auto src = x.matrix();
  auto dst = out.matrix();
  for (Index c = 0; c < channels; ++c)
    for (Index b = 0; b < batch; ++b)
      for (Index t = 0; t < width; ++t) dst(c * width + t, b) = src(c, b * width + t);
  return out;
}

}  // namespace varade
