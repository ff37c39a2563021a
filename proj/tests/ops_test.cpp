#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "varade/ops.hpp"

using namespace varade;

TEST(Tensor, ShapeAndStorage) {
  TensorF t(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rank(), 2);
  EXPECT_EQ(t.size(), 6);
  EXPECT_EQ(t.matrix()(1, 0), 4.0f);
  EXPECT_EQ(t.reshaped({3, 2}).matrix()(1, 0), 3.0f);
  EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
  EXPECT_THROW(TensorF(Shape{2, 0}), ShapeError);
  EXPECT_THROW(TensorF(Shape{2}, {1, 2, 3}), ShapeError);

  TensorF scalar(Shape{});
  EXPECT_EQ(scalar.size(), 1);
  EXPECT_FALSE(scalar.empty());
  EXPECT_TRUE(TensorF{}.empty());

  // rank-3 folds trailing extents into columns
  TensorF w(Shape{2, 3, 2});
  EXPECT_EQ(w.matrix().rows(), 2);
  EXPECT_EQ(w.matrix().cols(), 6);
}

TEST(Tensor, CastAndEquality) {
  TensorD d(Shape{3}, {0.5, -1.25, 3.0});
  const auto f = d.cast<float>();
  EXPECT_EQ(f.cast<double>(), d);
  TensorD bad = d;
  bad[1] = std::nan("");
  EXPECT_FALSE(bad.all_finite());
  EXPECT_TRUE(d.all_finite());
}

TEST(Conv1d, MatchesLoopOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> cin_d(1, 5), cout_d(1, 6), half_d(1, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const Index cin = cin_d(rng), cout = cout_d(rng), len = 2 * half_d(rng);
    auto x = oracle::random_tensor<double>({cin, len}, rng);
    auto w = oracle::random_tensor<double>({cout, cin, 2}, rng);
    auto b = oracle::random_tensor<double>({cout}, rng);
    const auto got = conv1d(x, w, b);
    const auto want = oracle::conv1d(x, w, b);
    ASSERT_EQ(got.shape(), want.shape());
    for (Index i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Conv1d, BatchedWindowsMatchIndividual) {
  std::mt19937_64 rng(3);
  const Index cin = 3, cout = 4, width = 8, batch = 5;
  auto w = oracle::random_tensor<float>({cout, cin, 2}, rng);
  auto b = oracle::random_tensor<float>({cout}, rng);
  auto x = oracle::random_tensor<float>({cin, batch * width}, rng);
  const auto all = conv1d(x, w, b);
  for (Index k = 0; k < batch; ++k) {
    TensorF one(Shape{cin, width});
    one.matrix() = x.matrix().middleCols(k * width, width);
    const auto part = conv1d(one, w, b);
    EXPECT_TRUE(part.matrix().isApprox(all.matrix().middleCols(k * width / 2, width / 2)));
  }
}

TEST(Conv1d, RejectsBadShapes) {
  const TensorF w(Shape{2, 3, 2}), b(Shape{2});
  EXPECT_THROW(conv1d(TensorF(Shape{3, 5}), w, b), ShapeError);  // odd length
  EXPECT_THROW(conv1d(TensorF(Shape{4, 6}), w, b), ShapeError);  // channel mismatch
  EXPECT_THROW(conv1d(TensorF(Shape{3, 6}), TensorF(Shape{2, 3, 3}), b), ShapeError);
  EXPECT_THROW(conv1d(TensorF(Shape{3, 6}), w, TensorF(Shape{3})), ShapeError);
}

TEST(Linear, VectorAndBatch) {
  std::mt19937_64 rng(11);
  auto w = oracle::random_tensor<double>({4, 6}, rng);
  auto b = oracle::random_tensor<double>({4}, rng);
  auto x = oracle::random_tensor<double>({6, 3}, rng);
  const auto batched = linear(x, w, b);
  ASSERT_EQ(batched.shape(), (Shape{4, 3}));
  for (Index col = 0; col < 3; ++col) {
    std::vector<double> xv(6);
    for (Index i = 0; i < 6; ++i) xv[static_cast<std::size_t>(i)] = x.matrix()(i, col);
    const auto want = oracle::linear(xv, w, b);
    TensorD single(Shape{6}, Vector<double>(Eigen::Map<Vector<double>>(xv.data(), 6)));
    const auto got = linear(single, w, b);
    for (Index o = 0; o < 4; ++o) {
      EXPECT_NEAR(got[o], want[static_cast<std::size_t>(o)], 1e-12);
      EXPECT_NEAR(batched.matrix()(o, col), want[static_cast<std::size_t>(o)], 1e-12);
    }
  }
  EXPECT_THROW(linear(TensorD(Shape{5}), w, b), ShapeError);
}

TEST(Relu, ClampsNegatives) {
  const TensorF x(Shape{4}, {-1.0f, 0.0f, 2.0f, -0.5f});
  EXPECT_EQ(relu(x), TensorF(Shape{4}, {0.0f, 0.0f, 2.0f, 0.0f}));
}

TEST(FoldWindows, FlattensEachWindowRowMajor) {
  // two windows of width 2 over 3 channels
  TensorF x(Shape{3, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  const auto y = fold_windows(x, 2);
  ASSERT_EQ(y.shape(), (Shape{6, 2}));
  const float col0[] = {1, 2, 5, 6, 9, 10};
  const float col1[] = {3, 4, 7, 8, 11, 12};
  for (Index i = 0; i < 6; ++i) {
    EXPECT_EQ(y.matrix()(i, 0), col0[i]);
    EXPECT_EQ(y.matrix()(i, 1), col1[i]);
  }
  EXPECT_THROW(fold_windows(x, 3), ShapeError);
}
