#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varade/data.hpp"
#include "varade/eval.hpp"
#include "varade/model.hpp"

namespace varade {

/// Fixed-capacity ring of C-dimensional samples.
class WindowBuffer {
 public:
  WindowBuffer(Index capacity, Index channels);

  void push(std::span<const float> sample);

  Index capacity() const { return capacity_; }
  Index channels() const { return storage_.rows(); }
  Index fill() const { return fill_; }
  bool full() const { return fill_ == capacity_; }

  /// The last min(fill, capacity) samples oldest to newest, as [C x fill].
  TensorF snapshot() const;
  /// Writes the snapshot into `out`, which must be [C x capacity]; requires full().
  void snapshot_into(TensorF& out) const;

 private:
  RowMatrix<float> storage_;  // C x capacity, column `head_` is the next write
  Index capacity_;
  Index head_ = 0;
  Index fill_ = 0;
};

/// Mean over channels of exp(logvar).
float variance_score(const TensorF& logvar);

/// Predicted variance for the buffered window; nullopt until the buffer is full.
std::optional<float> score(const ModelF& model, const WindowBuffer& buffer);

/// Scores one [C x window] input. Baselines use window length 1.
struct WindowScorer {
  Index window = 1;
  std::function<double(const TensorF&)> score;
};

WindowScorer varade_scorer(const ModelF& model);

struct SampleRecord {
  double timestamp = 0.0;
  std::vector<float> values;  // normalized
  std::optional<Label> label;
};

struct StreamStats {
  std::int64_t received = 0;
  std::int64_t scored = 0;
  std::int64_t dropped = 0;
  std::int64_t malformed = 0;
};

/// Single-consumer streaming detector.
///
/// `offer` appends a sample to the history; once the window is warm the sample
/// becomes pending. `poll` scores the oldest pending sample. If more than
/// `max_pending` samples wait, the oldest pending sample is dropped unscored.
class StreamDetector {
 public:
  StreamDetector(WindowScorer scorer, Index channels, Index max_pending = 1024);

  void offer(SampleRecord record);
  std::optional<ScoredPoint> poll();

  /// Offers each record and drains pending scores into `sink`.
  void run(const std::function<std::optional<SampleRecord>()>& source,
           const std::function<void(const ScoredPoint&)>& sink);

  const StreamStats& stats() const { return stats_; }
  StreamStats& stats() { return stats_; }
  Index pending() const { return static_cast<Index>(pending_.size()); }

 private:
  struct Pending {
    std::int64_t index;
    double timestamp;
    std::optional<Label> label;
  };

  WindowScorer scorer_;
  Index channels_;
  Index max_pending_;
  RowMatrix<float> history_;  // C x (window + max_pending) ring
  std::int64_t count_ = 0;
  std::deque<Pending> pending_;
  TensorF window_;
  StreamStats stats_;
};

/// Parses streaming text records into normalized samples.
///
/// Accepts either headerless `timestamp,v1,...,vC` lines or, if the first line
/// is a header, the CSV dialect produced by `write_csv` (labels are kept).
class RecordParser {
 public:
  RecordParser(const ChannelSchema& schema, const Normalizer& normalizer);

  /// nullopt for header lines and malformed records; `malformed()` counts the latter.
  std::optional<SampleRecord> parse(const std::string& line);
  std::int64_t malformed() const { return malformed_; }
  bool has_labels() const { return label_col_.has_value(); }

 private:
  const ChannelSchema& schema_;
  const Normalizer& normalizer_;
  bool first_ = true;
  std::vector<Index> target_;  // per column: channel index, or -1 / -2 / -3 for timestamp / label / unused
  std::optional<std::size_t> label_col_;
  std::vector<float> raw_;
  std::int64_t malformed_ = 0;
  std::int64_t line_ = 0;
};

void write_scored(std::ostream& out, const ScoredPoint& point);
/// Reads `timestamp,score[,label]` lines.
std::vector<ScoredPoint> read_scored(std::istream& in);

}  // namespace varade
