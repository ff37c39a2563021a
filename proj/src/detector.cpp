#include "varade/detector.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>
#include <system_error>

#include "varade/errors.hpp"

namespace varade {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_field(std::string_view field, T& value) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  return !field.empty() && ec == std::errc{} && ptr == field.data() + field.size() && std::isfinite(value);
}

std::optional<Label> parse_label(std::string_view f) {
  if (f == "0" || f == "normal") return Label::normal;
  if (f == "1" || f == "anomaly") return Label::anomaly;
  return std::nullopt;
}

constexpr Index kTimestampCol = -1;
constexpr Index kLabelCol = -2;

}  // namespace

WindowBuffer::WindowBuffer(Index capacity, Index channels)
    : storage_(RowMatrix<float>::Zero(channels, capacity)), capacity_(capacity) {
  if (capacity < 1 || channels < 1) throw ConfigError("window buffer: capacity and channels must be >= 1");
}

void WindowBuffer::push(std::span<const float> sample) {
  if (static_cast<Index>(sample.size()) != channels())
    throw ShapeError("window buffer: sample has " + std::to_string(sample.size()) +
                     " channels, expected " + std::to_string(channels()));
  storage_.col(head_) = Eigen::Map<const Vector<float>>(sample.data(), channels());
  head_ = (head_ + 1) % capacity_;
  fill_ = std::min(fill_ + 1, capacity_);
}

TensorF WindowBuffer::snapshot() const {
  if (fill_ == 0) return {};
  TensorF out(Shape{channels(), fill_});
  auto m = out.matrix();
  const Index oldest = (head_ - fill_ + capacity_) % capacity_;
  for (Index i = 0; i < fill_; ++i) m.col(i) = storage_.col((oldest + i) % capacity_);
  return out;
}

void WindowBuffer::snapshot_into(TensorF& out) const {
  if (!full()) throw std::logic_error("window buffer: snapshot_into requires a full buffer");
  require_shape(out.shape(), Shape{channels(), capacity_}, "window snapshot");
  auto m = out.matrix();
  const Index tail = capacity_ - head_;
  m.leftCols(tail) = storage_.rightCols(tail);
  if (head_ > 0) m.rightCols(head_) = storage_.leftCols(head_);
}

float variance_score(const TensorF& logvar) { return logvar.flat().array().exp().mean(); }

std::optional<float> score(const ModelF& model, const WindowBuffer& buffer) {
  if (!buffer.full()) return std::nullopt;
  TensorF window(Shape{buffer.channels(), buffer.capacity()});
  buffer.snapshot_into(window);
  return variance_score(forward(model, window).logvar);
}

WindowScorer varade_scorer(const ModelF& model) {
  return {model.config.window,
          [&model](const TensorF& window) { return static_cast<double>(variance_score(forward(model, window).logvar)); }};
}

StreamDetector::StreamDetector(WindowScorer scorer, Index channels, Index max_pending)
    : scorer_(std::move(scorer)),
      channels_(channels),
      max_pending_(max_pending),
      history_(RowMatrix<float>::Zero(channels, scorer_.window + max_pending)),
      window_(Shape{channels, scorer_.window}) {
  if (max_pending < 1) throw ConfigError("stream detector: max_pending must be >= 1");
}

void StreamDetector::offer(SampleRecord record) {
  if (static_cast<Index>(record.values.size()) != channels_) {
    ++stats_.malformed;
    return;
  }
  ++stats_.received;
  const Index ring = history_.cols();
  history_.col(count_ % ring) = Eigen::Map<const Vector<float>>(record.values.data(), channels_);
  ++count_;
  if (count_ < scorer_.window) return;
  pending_.push_back({count_ - 1, record.timestamp, record.label});
  if (static_cast<Index>(pending_.size()) > max_pending_) {
    pending_.pop_front();
    ++stats_.dropped;
  }
}

std::optional<ScoredPoint> StreamDetector::poll() {
  if (pending_.empty()) return std::nullopt;
  const Pending p = pending_.front();
  pending_.pop_front();
  const Index ring = history_.cols();
  auto w = window_.matrix();
  const std::int64_t first = p.index - scorer_.window + 1;
  for (Index i = 0; i < scorer_.window; ++i) w.col(i) = history_.col((first + i) % ring);
  ++stats_.scored;
  return ScoredPoint{p.timestamp, scorer_.score(window_), p.label};
}

void StreamDetector::run(const std::function<std::optional<SampleRecord>()>& source,
                         const std::function<void(const ScoredPoint&)>& sink) {
  while (auto record = source()) {
    offer(std::move(*record));
    while (auto point = poll()) sink(*point);
  }
}

RecordParser::RecordParser(const ChannelSchema& schema, const Normalizer& normalizer)
    : schema_(schema), normalizer_(normalizer), raw_(static_cast<std::size_t>(schema.size())) {
  if (normalizer.channels() != schema.size())
    throw ConfigError("record parser: normalizer has " + std::to_string(normalizer.channels()) +
                      " channels, schema " + std::to_string(schema.size()));
}

std::optional<SampleRecord> RecordParser::parse(const std::string& line) {
  ++line_;
  if (line.empty() || line == "\r") return std::nullopt;
  const auto fields = split(line);
  const Index channels = schema_.size();

  if (first_) {
    first_ = false;
    double probe = 0.0;
    if (!parse_field(fields.front(), probe)) {
      // Header row: map columns by name.
      target_.assign(fields.size(), -3);
      std::vector<bool> seen(static_cast<std::size_t>(channels), false);
      for (std::size_t col = 0; col < fields.size(); ++col) {
        if (fields[col] == "timestamp") {
          target_[col] = kTimestampCol;
        } else if (fields[col] == "label") {
          target_[col] = kLabelCol;
          label_col_ = col;
        } else if (auto idx = schema_.index_of(fields[col])) {
          target_[col] = *idx;
          seen[static_cast<std::size_t>(*idx)] = true;
        } else {
          throw FormatError("stream: unknown column '" + std::string(fields[col]) + "'");
        }
      }
      for (Index c = 0; c < channels; ++c)
        if (!seen[static_cast<std::size_t>(c)])
          throw FormatError("stream: header lacks channel '" +
                            schema_.names()[static_cast<std::size_t>(c)] + "'");
      return std::nullopt;
    }
    target_.assign(static_cast<std::size_t>(channels + 1), 0);
    target_[0] = kTimestampCol;
    for (Index c = 0; c < channels; ++c) target_[static_cast<std::size_t>(c + 1)] = c;
  }

  if (fields.size() != target_.size()) {
    ++malformed_;
    return std::nullopt;
  }
  SampleRecord record;
  record.timestamp = static_cast<double>(line_);
  for (std::size_t col = 0; col < fields.size(); ++col) {
    const Index t = target_[col];
    bool ok = true;
    if (t == kTimestampCol) {
      ok = parse_field(fields[col], record.timestamp);
    } else if (t == kLabelCol) {
      record.label = parse_label(fields[col]);
      ok = record.label.has_value();
    } else if (t >= 0) {
      ok = parse_field(fields[col], raw_[static_cast<std::size_t>(t)]);
    }
    if (!ok) {
      ++malformed_;
      return std::nullopt;
    }
  }
  record.values.resize(raw_.size());
  normalizer_.apply(raw_, record.values);
  return record;
}

void write_scored(std::ostream& out, const ScoredPoint& point) {
  out << format_number(point.timestamp) << ',' << format_number(point.score);
  if (point.label) out << ',' << (*point.label == Label::anomaly ? 1 : 0);
  out << '\n';
}

std::vector<ScoredPoint> read_scored(std::istream& in) {
  std::vector<ScoredPoint> points;
  std::string line;
  std::int64_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    ScoredPoint p;
    if (row == 1 && !parse_field(fields.front(), p.timestamp)) continue;  // header
    if (fields.size() < 2 || fields.size() > 3 || !parse_field(fields[0], p.timestamp) ||
        !parse_field(fields[1], p.score))
      throw FormatError("scores: malformed line " + std::to_string(row));
    if (fields.size() == 3) {
      p.label = parse_label(fields[2]);
      if (!p.label) throw FormatError("scores: invalid label on line " + std::to_string(row));
    }
    points.push_back(p);
  }
  return points;
}

}  // namespace varade
