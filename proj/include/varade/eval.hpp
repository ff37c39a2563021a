#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varade/data.hpp"

namespace varade {

struct ScoredPoint {
  double timestamp = 0.0;
  double score = 0.0;
  std::optional<Label> label;
};

struct ScoreSummary {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct EvalReport {
  double auc = 0.0;
  std::int64_t n_normal = 0;
  std::int64_t n_anomaly = 0;
  ScoreSummary normal;
  ScoreSummary anomaly;

  std::string text() const;
  std::string json() const;
};

/// Probability that a random anomaly outscores a random normal point, ties
/// counted one half (Mann-Whitney U over average ranks). Throws ConfigError
/// unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const Label> labels);

/// Evaluates labeled points; points without a label are ignored.
EvalReport evaluate(std::span<const ScoredPoint> points);

struct BenchOptions {
  std::int64_t iterations = 100;
  std::int64_t warmup = 10;
  int threads = 1;
};

struct BenchReport {
  double frequency_hz = 0.0;
  double wall_seconds = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  std::int64_t measured = 0;
  std::int64_t warmup_excluded = 0;
  int threads = 1;

  std::string text() const;
  std::string json() const;
};

/// Times `infer(i)` calls on pre-built inputs. Warm-up calls run first and
/// are not measured. With several threads, each runs its share of the
/// iterations concurrently and the frequency is total completions over the
/// measured wall-clock.
BenchReport bench_throughput(const std::function<void(std::int64_t)>& infer,
                             const BenchOptions& options);

}  // namespace varade
