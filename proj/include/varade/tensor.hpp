#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "varade/errors.hpp"

namespace varade {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

inline Index element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

/// Dense row-major array with shape metadata.
///
/// Storage is a contiguous Eigen vector; `matrix()` exposes rank-1 and rank-2
/// tensors (and rank-3 tensors folded over their trailing extents) as Eigen
/// row-major maps so operations can be written as Eigen expressions.
template <typename Scalar>
class Tensor {
 public:
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;
  using VectorMap = Eigen::Map<Vector<Scalar>>;
  using ConstVectorMap = Eigen::Map<const Vector<Scalar>>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    check_extents();
    data_ = Vector<Scalar>::Zero(element_count(shape_));
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values) : shape_(std::move(shape)) {
    check_extents();
    if (static_cast<Index>(values.size()) != element_count(shape_))
      throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " +
                       to_string(shape_));
    data_.resize(static_cast<Index>(values.size()));
    std::copy(values.begin(), values.end(), data_.data());
  }

  Tensor(Shape shape, Vector<Scalar> values) : shape_(std::move(shape)), data_(std::move(values)) {
    check_extents();
    if (data_.size() != element_count(shape_))
      throw ShapeError("tensor: " + std::to_string(data_.size()) + " values for shape " +
                       to_string(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  Vector<Scalar>& flat() { return data_; }
  const Vector<Scalar>& flat() const { return data_; }

  /// Row-major view: first extent as rows, remaining extents folded into columns.
  MatrixMap matrix() { return MatrixMap(data_.data(), rows(), cols()); }
  ConstMatrixMap matrix() const { return ConstMatrixMap(data_.data(), rows(), cols()); }

  Tensor reshaped(Shape shape) const {
    if (element_count(shape) != size())
      throw ShapeError("reshape " + to_string(shape_) + " -> " + to_string(shape));
    return Tensor(std::move(shape), data_);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>().eval());
  }

  bool all_finite() const { return data_.allFinite(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Index rows() const { return shape_.empty() ? 1 : shape_.front(); }
  Index cols() const {
    return shape_.size() <= 1 ? 1
                              : std::accumulate(shape_.begin() + 1, shape_.end(), Index{1},
                                                std::multiplies<>());
  }

  void check_extents() const {
    for (Index e : shape_)
      if (e <= 0) throw ShapeError("tensor: non-positive extent in " + to_string(shape_));
  }

  Shape shape_;
  Vector<Scalar> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

inline void require_shape(const Shape& actual, const Shape& expected, const char* what) {
  if (actual != expected)
    throw ShapeError(std::string(what) + ": expected " + to_string(expected) + ", got " +
                     to_string(actual));
}

}  // namespace varade
