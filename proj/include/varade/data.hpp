#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varade/tensor.hpp"

namespace varade {

enum class Label : std::uint8_t { normal = 0, anomaly = 1 };

/// Ordered channel names of the robot-arm stream: action ID, 7 joints x 11
/// IMU components, 8 energy-meter quantities.
class ChannelSchema {
 public:
  explicit ChannelSchema(std::vector<std::string> names);

  /// The 86-channel robot schema.
  static const ChannelSchema& robot();

  static constexpr int kJoints = 7;
  static constexpr int kJointComponents = 11;

  const std::vector<std::string>& names() const { return names_; }
  Index size() const { return static_cast<Index>(names_.size()); }
  std::optional<Index> index_of(std::string_view name) const;

  /// Column of component `component` (e.g. "AccX", "q1") of joint `joint`.
  static Index joint_channel(int joint, std::string_view component);
  static Index meter_channel(std::string_view name);

 private:
  std::vector<std::string> names_;
};

/// Timestamped multichannel samples with per-sample labels.
/// `values` holds one row per sample in schema order.
struct LabeledStream {
  std::vector<double> timestamps;
  RowMatrix<float> values;
  std::vector<Label> labels;

  Index size() const { return static_cast<Index>(timestamps.size()); }
  Index channels() const { return values.cols(); }
  Index anomaly_count() const;
};

/// Per-channel min-max scaling into [-1, 1].
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(Vector<float> min, Vector<float> max);

  static Normalizer fit(const RowMatrix<float>& samples);

  const Vector<float>& min() const { return min_; }
  const Vector<float>& max() const { return max_; }
  Index channels() const { return min_.size(); }

  /// 2 * (x - min) / (max - min) - 1, clamped to [-1, 1]; constant channels map to 0.
  void apply(std::span<const float> raw, std::span<float> out) const;
  RowMatrix<float> apply(const RowMatrix<float>& samples) const;

  friend bool operator==(const Normalizer&, const Normalizer&) = default;

 private:
  Vector<float> min_;
  Vector<float> max_;
};

struct Quaternion {
  double w = 1, x = 0, y = 0, z = 0;
};

/// Intrinsic Z-Y-X (yaw, then pitch, then roll) Euler angles in degrees to a
/// unit quaternion (w, x, y, z).
Quaternion euler_to_quaternion(double roll_deg, double pitch_deg, double yaw_deg);

/// Reads a header-driven CSV. Columns: optional `timestamp`, every schema
/// channel (any order), optional `label`. Missing labels mean all-normal.
LabeledStream load_csv(const std::filesystem::path& path,
                       const ChannelSchema& schema = ChannelSchema::robot());
LabeledStream read_csv(std::istream& in, const ChannelSchema& schema = ChannelSchema::robot());

/// Writes `timestamp,<channels...>,label`.
void write_csv(std::ostream& out, const LabeledStream& stream,
               const ChannelSchema& schema = ChannelSchema::robot());
void save_csv(const std::filesystem::path& path, const LabeledStream& stream,
              const ChannelSchema& schema = ChannelSchema::robot());

std::string format_number(double value);
std::string format_number(float value);

}  // namespace varade
