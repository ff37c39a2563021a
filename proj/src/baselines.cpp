#include "varade/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "varade/errors.hpp"

namespace varade {

KnnIndex KnnIndex::fit(RowMatrix<float> points, Index k) {
  if (k < 1) throw ConfigError("knn: k must be >= 1");
  if (points.rows() < k)
    throw ConfigError("knn: need at least k=" + std::to_string(k) + " points, got " +
                      std::to_string(points.rows()));
  return KnnIndex(std::move(points), k);
}

double KnnIndex::score(std::span<const float> query) const {
  if (static_cast<Index>(query.size()) != dimension())
    throw ShapeError("knn: query has " + std::to_string(query.size()) + " components, index " +
                     std::to_string(dimension()));
  std::vector<double> sq(static_cast<std::size_t>(points_.rows()));
  for (Index i = 0; i < points_.rows(); ++i) {
    const float* p = points_.row(i).data();
    double acc = 0.0;
    for (std::size_t c = 0; c < query.size(); ++c) {
      const double d = static_cast<double>(p[c]) - static_cast<double>(query[c]);
      acc += d * d;
    }
    sq[static_cast<std::size_t>(i)] = acc;
  }
  auto kth = sq.begin() + (k_ - 1);
  std::nth_element(sq.begin(), kth, sq.end());
  return std::sqrt(*kth);
}

double harmonic_number(std::int64_t m) {
  if (m <= 0) return 0.0;
  if (m > 10000) return std::log(static_cast<double>(m)) + std::numbers::egamma;
  double h = 0.0;
  for (std::int64_t i = 1; i <= m; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

double average_path_length(std::int64_t m) {
  if (m <= 1) return 0.0;
  const double md = static_cast<double>(m);
  return 2.0 * harmonic_number(m - 1) - 2.0 * (md - 1.0) / md;
}

double IsoTree::path_length(std::span<const float> x) const {
  std::int32_t i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(node.feature)] < node.split ? node.left : node.right;
  }
  const auto& leaf = nodes[static_cast<std::size_t>(i)];
  return static_cast<double>(leaf.depth) + average_path_length(leaf.size);
}

std::int32_t IsoTree::depth() const {
  std::int32_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const RowMatrix<float>& points, std::int32_t max_depth, std::mt19937_64& rng)
      : points_(points), max_depth_(max_depth), rng_(rng) {}

  IsoTree build(std::vector<Index> rows) {
    IsoTree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  std::int32_t grow(IsoTree& tree, std::vector<Index>& rows, std::int32_t depth) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0f, -1, -1, static_cast<std::int32_t>(rows.size()), depth});
    if (depth >= max_depth_ || rows.size() <= 1) return id;

    // Only features that vary among the routed points can split them.
    std::vector<std::pair<Index, std::pair<float, float>>> candidates;
    for (Index f = 0; f < points_.cols(); ++f) {
      float lo = points_(rows.front(), f), hi = lo;
      for (Index r : rows) {
        lo = std::min(lo, points_(r, f));
        hi = std::max(hi, points_(r, f));
      }
      if (hi > lo) candidates.push_back({f, {lo, hi}});
    }
    if (candidates.empty()) return id;

    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const auto [feature, range] = candidates[pick(rng_)];
    std::uniform_real_distribution<double> split_dist(range.first, range.second);
    float split = range.first;
    while (!(split > range.first && split <= range.second))
      split = static_cast<float>(split_dist(rng_));

    std::vector<Index> left, right;
    for (Index r : rows) (points_(r, feature) < split ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const auto l = grow(tree, left, depth + 1);
    const auto rr = grow(tree, right, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<std::int32_t>(feature);
    node.split = split;
    node.left = l;
    node.right = rr;
    return id;
  }

  const RowMatrix<float>& points_;
  std::int32_t max_depth_;
  std::mt19937_64& rng_;
};

}  // namespace

IsoForest IsoForest::fit(const RowMatrix<float>& points, const IsoForestOptions& options) {
  const Index n = points.rows();
  if (n < 2) throw ConfigError("iforest: need at least 2 points, got " + std::to_string(n));
  if (options.trees < 1 || options.subsample < 2)
    throw ConfigError("iforest: trees must be >= 1 and subsample >= 2");
  if (!(options.contamination > 0.0 && options.contamination <= 0.5))
    throw ConfigError("iforest: contamination must lie in (0, 0.5]");

  IsoForest forest;
  forest.subsample_ = std::min(options.subsample, n);
  forest.dimension_ = points.cols();
  forest.contamination_ = options.contamination;
  const auto max_depth =
      static_cast<std::int32_t>(std::ceil(std::log2(static_cast<double>(forest.subsample_))));

  std::mt19937_64 rng(options.seed);
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  TreeBuilder builder(points, max_depth, rng);
  for (int t = 0; t < options.trees; ++t) {
    std::vector<Index> sample;
    sample.reserve(static_cast<std::size_t>(forest.subsample_));
    std::sample(all.begin(), all.end(), std::back_inserter(sample), forest.subsample_, rng);
    forest.trees_.push_back(builder.build(std::move(sample)));
  }

  std::vector<double> scores(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    scores[static_cast<std::size_t>(i)] =
        forest.score({points.row(i).data(), static_cast<std::size_t>(points.cols())});
  const auto flagged = static_cast<std::size_t>(std::ceil(options.contamination * static_cast<double>(n)));
  std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(flagged - 1),
                   scores.end(), std::greater<>());
  forest.threshold_ = scores[flagged - 1];
  return forest;
}

IsoForest IsoForest::from_parts(std::vector<IsoTree> trees, Index subsample, Index dimension,
                                double contamination, double threshold) {
  if (trees.empty() || subsample < 2 || dimension < 1)
    throw FormatError("iforest: inconsistent forest description");
  IsoForest forest;
  forest.trees_ = std::move(trees);
  forest.subsample_ = subsample;
  forest.dimension_ = dimension;
  forest.contamination_ = contamination;
  forest.threshold_ = threshold;
  return forest;
}

double IsoForest::mean_path_length(std::span<const float> x) const {
  if (static_cast<Index>(x.size()) != dimension_)
    throw ShapeError("iforest: query has " + std::to_string(x.size()) + " components, forest " +
                     std::to_string(dimension_));
  double total = 0.0;
  for (const auto& tree : trees_) total += tree.path_length(x);
  return total / static_cast<double>(trees_.size());
}

double IsoForest::score(std::span<const float> x) const {
  return std::exp2(-mean_path_length(x) / average_path_length(subsample_));
}

}  // namespace varade
