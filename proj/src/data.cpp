#include "varade/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "varade/errors.hpp"

namespace varade {

namespace {

constexpr std::string_view kJointComponentNames[] = {"AccX",  "AccY", "AccZ", "GyroX",
                                                     "GyroY", "GyroZ", "q1",  "q2",
                                                     "q3",    "q4",   "temp"};
constexpr std::string_view kMeterNames[] = {"current",      "frequency",      "phase_angle",
                                            "power",        "power_factor",   "reactive_power",
                                            "voltage",      "import_energy"};

std::vector<std::string> robot_channel_names() {
  std::vector<std::string> names{"action_id"};
  for (int j = 0; j < ChannelSchema::kJoints; ++j)
    for (auto component : kJointComponentNames)
      names.push_back("sensor_id_" + std::to_string(j) + "_" + std::string(component));
  for (auto meter : kMeterNames) names.emplace_back(meter);
  return names;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
std::optional<T> parse_number(std::string_view field) {
  T value{};
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) return std::nullopt;
  return value;
}

std::optional<Label> parse_label(std::string_view field) {
  if (field == "0" || field == "normal") return Label::normal;
  if (field == "1" || field == "anomaly") return Label::anomaly;
  return std::nullopt;
}

template <typename T>
std::string shortest(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace

ChannelSchema::ChannelSchema(std::vector<std::string> names) : names_(std::move(names)) {}

const ChannelSchema& ChannelSchema::robot() {
  static const ChannelSchema schema(robot_channel_names());
  return schema;
}

std::optional<Index> ChannelSchema::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<Index>(it - names_.begin());
}

Index ChannelSchema::joint_channel(int joint, std::string_view component) {
  const auto it = std::find(std::begin(kJointComponentNames), std::end(kJointComponentNames), component);
  if (joint < 0 || joint >= kJoints || it == std::end(kJointComponentNames))
    throw std::out_of_range("joint_channel: no channel for joint " + std::to_string(joint) + " " +
                            std::string(component));
  return 1 + joint * kJointComponents + (it - std::begin(kJointComponentNames));
}

Index ChannelSchema::meter_channel(std::string_view name) {
  const auto it = std::find(std::begin(kMeterNames), std::end(kMeterNames), name);
  if (it == std::end(kMeterNames))
    throw std::out_of_range("meter_channel: unknown meter quantity " + std::string(name));
  return 1 + kJoints * kJointComponents + (it - std::begin(kMeterNames));
}

Index LabeledStream::anomaly_count() const {
  return std::count(labels.begin(), labels.end(), Label::anomaly);
}

Normalizer::Normalizer(Vector<float> min, Vector<float> max)
    : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) throw ShapeError("normalizer: min/max length mismatch");
  if ((min_.array() > max_.array()).any()) throw FormatError("normalizer: min exceeds max");
}

Normalizer Normalizer::fit(const RowMatrix<float>& samples) {
  if (samples.rows() < 1) throw FormatError("normalizer: fit needs at least one sample");
  return Normalizer(samples.colwise().minCoeff().transpose(),
                    samples.colwise().maxCoeff().transpose());
}

void Normalizer::apply(std::span<const float> raw, std::span<float> out) const {
  const auto n = static_cast<std::size_t>(channels());
  if (raw.size() != n || out.size() != n)
    throw ShapeError("normalizer: expected " + std::to_string(n) + " channels, got " +
                     std::to_string(raw.size()));
  for (std::size_t c = 0; c < n; ++c) {
    const float lo = min_[static_cast<Index>(c)];
    const float hi = max_[static_cast<Index>(c)];
    if (!(hi > lo)) {
      out[c] = 0.0f;
      continue;
    }
    const float scaled = 2.0f * (raw[c] - lo) / (hi - lo) - 1.0f;
    out[c] = std::clamp(scaled, -1.0f, 1.0f);
  }
}

RowMatrix<float> Normalizer::apply(const RowMatrix<float>& samples) const {
  RowMatrix<float> out(samples.rows(), samples.cols());
  for (Index r = 0; r < samples.rows(); ++r)
    apply(std::span<const float>(samples.row(r).data(), static_cast<std::size_t>(samples.cols())),
          std::span<float>(out.row(r).data(), static_cast<std::size_t>(out.cols())));
  return out;
}

Quaternion euler_to_quaternion(double roll_deg, double pitch_deg, double yaw_deg) {
  constexpr double kHalfDegToRad = M_PI / 360.0;
  const double cr = std::cos(roll_deg * kHalfDegToRad), sr = std::sin(roll_deg * kHalfDegToRad);
  const double cp = std::cos(pitch_deg * kHalfDegToRad), sp = std::sin(pitch_deg * kHalfDegToRad);
  const double cy = std::cos(yaw_deg * kHalfDegToRad), sy = std::sin(yaw_deg * kHalfDegToRad);
  return {cr * cp * cy + sr * sp * sy, sr * cp * cy - cr * sp * sy, cr * sp * cy + sr * cp * sy,
          cr * cp * sy - sr * sp * cy};
}

LabeledStream read_csv(std::istream& in, const ChannelSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: empty input, expected a header row");
  const auto header = split_fields(line);
  const Index channels = schema.size();

  std::vector<Index> target(header.size(), -1);  // schema index per column
  std::optional<std::size_t> timestamp_col, label_col;
  std::vector<bool> seen(static_cast<std::size_t>(channels), false);
  for (std::size_t col = 0; col < header.size(); ++col) {
    const auto name = header[col];
    if (name == "timestamp") {
      timestamp_col = col;
    } else if (name == "label") {
      label_col = col;
    } else if (auto idx = schema.index_of(name)) {
      if (seen[static_cast<std::size_t>(*idx)])
        throw FormatError("csv: duplicate channel column '" + std::string(name) + "'");
      seen[static_cast<std::size_t>(*idx)] = true;
      target[col] = *idx;
    } else {
      throw FormatError("csv: unknown channel column '" + std::string(name) + "'");
    }
  }
  for (Index c = 0; c < channels; ++c)
    if (!seen[static_cast<std::size_t>(c)])
      throw FormatError("csv: missing channel column '" + schema.names()[static_cast<std::size_t>(c)] + "'");

  LabeledStream stream;
  std::vector<float> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw FormatError("csv: row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(header.size()));
    const auto base = values.size();
    values.resize(base + static_cast<std::size_t>(channels));
    double timestamp = static_cast<double>(row - 1);
    Label label = Label::normal;
    for (std::size_t col = 0; col < fields.size(); ++col) {
      const auto cell_error = [&](const char* what) {
        return FormatError("csv: row " + std::to_string(row) + ", column '" + std::string(header[col]) +
                           "': " + what + " '" + std::string(fields[col]) + "'");
      };
      if (timestamp_col && col == *timestamp_col) {
        auto v = parse_number<double>(fields[col]);
        if (!v || !std::isfinite(*v)) throw cell_error("non-numeric timestamp");
        timestamp = *v;
      } else if (label_col && col == *label_col) {
        auto l = parse_label(fields[col]);
        if (!l) throw cell_error("invalid label");
        label = *l;
      } else {
        auto v = parse_number<float>(fields[col]);
        if (!v || !std::isfinite(*v)) throw cell_error("non-numeric value");
        values[base + static_cast<std::size_t>(target[col])] = *v;
      }
    }
    if (!stream.timestamps.empty() && !(timestamp > stream.timestamps.back()))
      throw FormatError("csv: row " + std::to_string(row) + ": timestamps must be strictly increasing");
    stream.timestamps.push_back(timestamp);
    stream.labels.push_back(label);
  }
  stream.values = Eigen::Map<RowMatrix<float>>(values.data(), stream.size(), channels);
  return stream;
}

LabeledStream load_csv(const std::filesystem::path& path, const ChannelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw FormatError("csv: cannot open " + path.string());
  return read_csv(in, schema);
}

std::string format_number(double value) { return shortest(value); }
std::string format_number(float value) { return shortest(value); }

void write_csv(std::ostream& out, const LabeledStream& stream, const ChannelSchema& schema) {
  if (stream.channels() != schema.size())
    throw ShapeError("csv: stream has " + std::to_string(stream.channels()) + " channels, schema " +
                     std::to_string(schema.size()));
  out << "timestamp";
  for (const auto& name : schema.names()) out << ',' << name;
  out << ",label\n";
  std::string line;
  for (Index r = 0; r < stream.size(); ++r) {
    line = shortest(stream.timestamps[static_cast<std::size_t>(r)]);
    for (Index c = 0; c < stream.channels(); ++c) {
      line += ',';
      line += shortest(stream.values(r, c));
    }
    line += stream.labels[static_cast<std::size_t>(r)] == Label::anomaly ? ",1\n" : ",0\n";
    out << line;
  }
}

void save_csv(const std::filesystem::path& path, const LabeledStream& stream,
              const ChannelSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("csv: cannot write " + path.string());
  write_csv(out, stream, schema);
}

}  // namespace varade
