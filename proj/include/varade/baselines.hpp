#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "varade/tensor.hpp"

namespace varade {

/// Exact k-nearest-neighbour detector: the score of a query is its Euclidean
/// distance to the k-th nearest stored point.
class KnnIndex {
 public:
  static KnnIndex fit(RowMatrix<float> points, Index k = 5);

  double score(std::span<const float> query) const;

  Index k() const { return k_; }
  Index dimension() const { return points_.cols(); }
  const RowMatrix<float>& points() const { return points_; }

 private:
  KnnIndex(RowMatrix<float> points, Index k) : points_(std::move(points)), k_(k) {}

  RowMatrix<float> points_;
  Index k_;
};

/// Average path length of an unsuccessful BST search over `m` points,
/// c(m) = 2 H(m-1) - 2 (m-1) / m; c(0) = c(1) = 0.
double average_path_length(std::int64_t m);

/// Harmonic number H(m); exact summation up to 10^4, ln(m) + gamma beyond.
double harmonic_number(std::int64_t m);

struct IsoNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  float split = 0.0f;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t size = 0;   // points routed here during fitting
  std::int32_t depth = 0;
};

struct IsoTree {
  std::vector<IsoNode> nodes;  // nodes[0] is the root

  /// Leaf depth plus the unresolved-subtree adjustment c(size).
  double path_length(std::span<const float> x) const;
  std::int32_t depth() const;
};

struct IsoForestOptions {
  int trees = 100;
  Index subsample = 256;
  double contamination = 0.1;
  std::uint64_t seed = 0;
};

/// Isolation forest with a contamination-derived flagging threshold.
class IsoForest {
 public:
  static IsoForest fit(const RowMatrix<float>& points, const IsoForestOptions& options = {});
  static IsoForest from_parts(std::vector<IsoTree> trees, Index subsample, Index dimension,
                              double contamination, double threshold);

  /// s(x) = 2^(-E[h(x)] / c(subsample)), in (0, 1].
  double score(std::span<const float> x) const;
  double mean_path_length(std::span<const float> x) const;
  bool flags(double score) const { return score >= threshold_; }

  const std::vector<IsoTree>& trees() const { return trees_; }
  Index subsample() const { return subsample_; }
  Index dimension() const { return dimension_; }
  double contamination() const { return contamination_; }
  double threshold() const { return threshold_; }

 private:
  std::vector<IsoTree> trees_;
  Index subsample_ = 0;
  Index dimension_ = 0;
  double contamination_ = 0.1;
  double threshold_ = 1.0;
};

}  // namespace varade
