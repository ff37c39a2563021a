#include "varade/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "varade/errors.hpp"

namespace varade {

namespace {

ScoreSummary summarize(const std::vector<double>& v) {
  ScoreSummary s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(v.size()));
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

double percentile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

void add_summary(nlohmann::json& j, const std::string& prefix, const ScoreSummary& s) {
  j[prefix + "_mean"] = s.mean;
  j[prefix + "_std"] = s.stddev;
  j[prefix + "_min"] = s.min;
  j[prefix + "_max"] = s.max;
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size())
    throw ShapeError("auc_roc: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::int64_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == Label::anomaly) {
        positive_rank_sum += rank;
        ++positives;
      }
    i = j;
  }
  const auto negatives = static_cast<std::int64_t>(scores.size()) - positives;
  if (positives == 0 || negatives == 0)
    throw ConfigError("auc_roc: undefined without both normal and anomalous points");
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

EvalReport evaluate(std::span<const ScoredPoint> points) {
  std::vector<double> scores, normal, anomaly;
  std::vector<Label> labels;
  for (const auto& pt : points) {
    if (!pt.label) continue;
    scores.push_back(pt.score);
    labels.push_back(*pt.label);
    (*pt.label == Label::anomaly ? anomaly : normal).push_back(pt.score);
  }
  EvalReport report;
  report.auc = auc_roc(scores, labels);
  report.n_normal = static_cast<std::int64_t>(normal.size());
  report.n_anomaly = static_cast<std::int64_t>(anomaly.size());
  report.normal = summarize(normal);
  report.anomaly = summarize(anomaly);
  return report;
}

std::string EvalReport::text() const {
  std::ostringstream os;
  os << "auc " << auc << "\n"
     << "normal  n=" << n_normal << " mean=" << normal.mean << " std=" << normal.stddev
     << " min=" << normal.min << " max=" << normal.max << "\n"
     << "anomaly n=" << n_anomaly << " mean=" << anomaly.mean << " std=" << anomaly.stddev
     << " min=" << anomaly.min << " max=" << anomaly.max << "\n";
  return os.str();
}

std::string EvalReport::json() const {
  nlohmann::json j{{"auc", auc}, {"n_normal", n_normal}, {"n_anomaly", n_anomaly}};
  add_summary(j, "normal", normal);
  add_summary(j, "anomaly", anomaly);
  return j.dump();
}

BenchReport bench_throughput(const std::function<void(std::int64_t)>& infer,
                             const BenchOptions& options) {
  if (options.iterations < 1) throw ConfigError("bench: iterations must be >= 1");
  if (options.warmup < 0 || options.threads < 1) throw ConfigError("bench: invalid warm-up or threads");
  using Clock = std::chrono::steady_clock;

  for (std::int64_t i = 0; i < options.warmup; ++i) infer(i);

  const auto threads = static_cast<std::int64_t>(std::min<std::int64_t>(options.threads, options.iterations));
  std::vector<std::vector<double>> latencies(static_cast<std::size_t>(threads));
  auto worker = [&](std::int64_t tid) {
    auto& lat = latencies[static_cast<std::size_t>(tid)];
    for (std::int64_t i = tid; i < options.iterations; i += threads) {
      const auto start = Clock::now();
      infer(options.warmup + i);
      lat.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
    }
  };

  const auto start = Clock::now();
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::int64_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  }
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();

  std::vector<double> all;
  for (auto& l : latencies) all.insert(all.end(), l.begin(), l.end());
  std::sort(all.begin(), all.end());

  BenchReport report;
  report.measured = static_cast<std::int64_t>(all.size());
  report.warmup_excluded = options.warmup;
  report.threads = static_cast<int>(threads);
  report.wall_seconds = wall;
  report.frequency_hz = static_cast<double>(report.measured) / wall;
  report.p50_ms = percentile(all, 0.50);
  report.p95_ms = percentile(all, 0.95);
  report.p99_ms = percentile(all, 0.99);
  return report;
}

std::string BenchReport::text() const {
  std::ostringstream os;
  os << "inference frequency " << frequency_hz << " Hz\n"
     << "measured " << measured << " inferences in " << wall_seconds << " s on " << threads
     << " thread(s), " << warmup_excluded << " warm-up excluded\n"
     << "latency ms p50=" << p50_ms << " p95=" << p95_ms << " p99=" << p99_ms << "\n";
  return os.str();
}

std::string BenchReport::json() const {
  return nlohmann::json{{"frequency_hz", frequency_hz}, {"wall_seconds", wall_seconds},
                        {"p50_ms", p50_ms},             {"p95_ms", p95_ms},
                        {"p99_ms", p99_ms},             {"measured", measured},
                        {"warmup_excluded", warmup_excluded}, {"threads", threads}}
      .dump();
}

}  // namespace varade
