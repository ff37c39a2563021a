#include <gtest/gtest.h>

#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "varade/eval.hpp"

using namespace varade;

namespace {

std::vector<Label> labels(std::initializer_list<int> v) {
  std::vector<Label> out;
  for (int x : v) out.push_back(x ? Label::anomaly : Label::normal);
  return out;
}

struct Instance {
  std::vector<double> scores;
  std::vector<Label> labels;
};

// Random instance with both classes; scores drawn from a small integer grid so ties are common.
Instance random_instance(std::mt19937_64& rng, bool ties) {
  std::uniform_int_distribution<int> n_d(2, 200), grid(0, 9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Instance in;
  const int n = n_d(rng);
  for (int i = 0; i < n; ++i) {
    in.scores.push_back(ties ? grid(rng) : u(rng));
    in.labels.push_back(i == 0 ? Label::normal : i == 1 ? Label::anomaly : (grid(rng) < 3 ? Label::anomaly : Label::normal));
  }
  std::shuffle(in.labels.begin(), in.labels.end(), rng);
  return in;
}

}  // namespace

TEST(Auc, HandValues) {
  const auto l = labels({0, 0, 1, 1});
  EXPECT_EQ(auc_roc(std::vector<double>{1, 2, 3, 4}, l), 1.0);
  EXPECT_EQ(auc_roc(std::vector<double>{4, 3, 2, 1}, l), 0.0);
  EXPECT_EQ(auc_roc(std::vector<double>{1, 1, 1, 1}, l), 0.5);
  EXPECT_THROW(auc_roc(std::vector<double>{1, 2}, labels({0, 0})), ConfigError);
  EXPECT_THROW(auc_roc(std::vector<double>{1, 2}, labels({0})), ShapeError);
}

TEST(Auc, EqualsPairwiseOracle) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng, trial % 2 == 0);
    EXPECT_EQ(auc_roc(in.scores, in.labels), oracle::pairwise_auc(in.scores, in.labels));
  }
}

TEST(Auc, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng, trial % 2 == 0);
    const double base = auc_roc(in.scores, in.labels);
    std::vector<double> ex, affine, neg;
    for (double s : in.scores) {
      ex.push_back(std::exp(s));
      affine.push_back(3.0 * s - 7.0);
      neg.push_back(-s);
    }
    EXPECT_EQ(auc_roc(ex, in.labels), base);
    EXPECT_EQ(auc_roc(affine, in.labels), base);
    if (trial % 2 == 1) {
      EXPECT_DOUBLE_EQ(base + auc_roc(neg, in.labels), 1.0);
    }
  }
}

TEST(Evaluate, SummariesAndUnlabeledPoints) {
  std::vector<ScoredPoint> pts{{0, 1.0, Label::normal}, {1, 3.0, Label::normal}, {2, 5.0, Label::anomaly},
                               {3, 100.0, std::nullopt}};
  const auto r = evaluate(pts);
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.n_normal, 2);
  EXPECT_EQ(r.n_anomaly, 1);
  EXPECT_EQ(r.normal.mean, 2.0);
  EXPECT_EQ(r.normal.min, 1.0);
  EXPECT_EQ(r.anomaly.max, 5.0);
  EXPECT_NE(r.text().find("auc"), std::string::npos);
  EXPECT_NE(r.json().find("\"auc\":1.0"), std::string::npos) << r.json();
}

TEST(Bench, WarmupCallsAreExcludedFromMeasurement) {
  std::vector<std::int64_t> seen;
  std::int64_t calls = 0;
  const auto r = bench_throughput(
      [&](std::int64_t i) {
        ++calls;
        seen.push_back(i);
      },
      {100, 10, 1});
  EXPECT_EQ(calls, 110);
  EXPECT_EQ(r.measured, 100);
  EXPECT_EQ(r.warmup_excluded, 10);
  // warm-up consumes inputs 0..9, measured calls use 10..109
  for (std::int64_t i = 0; i < 110; ++i) EXPECT_EQ(seen[static_cast<std::size_t>(i)], i);
  EXPECT_GT(r.frequency_hz, 0.0);
  EXPECT_TRUE(std::isfinite(r.frequency_hz));
}

TEST(Bench, SingleIterationFrequencyIsInverseLatency) {
  const auto r = bench_throughput([](std::int64_t) { std::this_thread::sleep_for(std::chrono::milliseconds(20)); },
                                  {1, 0, 1});
  EXPECT_EQ(r.measured, 1);
  EXPECT_NEAR(r.frequency_hz, 1000.0 / r.p50_ms, 0.05 * r.frequency_hz);
  // sleep_for never returns early, so one 20 ms call cannot exceed 50 Hz
  EXPECT_LE(r.frequency_hz, 50.0);
  EXPECT_GT(r.frequency_hz, 5.0);
}

TEST(Bench, ThreadsShareIterations) {
  std::mutex mu;
  std::vector<std::int64_t> seen;
  const auto r = bench_throughput(
      [&](std::int64_t i) {
        std::lock_guard lock(mu);
        seen.push_back(i);
      },
      {40, 4, 3});
  EXPECT_EQ(r.threads, 3);
  EXPECT_EQ(r.measured, 40);
  std::sort(seen.begin(), seen.end());
  for (std::int64_t i = 0; i < 44; ++i) EXPECT_EQ(seen[static_cast<std::size_t>(i)], i);
  EXPECT_THROW(bench_throughput([](std::int64_t) {}, {0, 0, 1}), ConfigError);
}
