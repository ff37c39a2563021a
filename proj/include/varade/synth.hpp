#pragma once

#include <cstdint>

#include "varade/data.hpp"

namespace varade {

/// Synthetic robot-arm stream: cycles through 30 actions with smooth joint
/// trajectories, and optionally injects collision bursts.
///
/// The robot program (trajectory shapes, per-action noise levels) depends only
/// on `program_seed`, so streams generated with different `seed`s replay the
/// same program with fresh sensor noise and anomaly placement.
struct SynthConfig {
  int cycles = 1;
  double sample_rate = 200.0;  // Hz
  double action_seconds = 4.0;
  int anomalies = 0;
  double burst_min_seconds = 0.25;
  double burst_max_seconds = 1.0;
  /// Collision ringing level, in multiples of the base IMU vibration level.
  double burst_amplitude = 1.5;
  /// Lag-one correlation of the ringing; negative values alternate in sign.
  double burst_correlation = -0.6;
  /// Correlation time range of normal IMU vibration, redrawn every few seconds.
  double vibration_min_seconds = 0.1;
  double vibration_max_seconds = 5.0;
  /// Minimum anomaly-free gap before the first burst and between bursts.
  double guard_seconds = 2.0;
  double meter_rate = 5.0;  // Hz; meter readings are held between updates
  std::uint64_t seed = 0;
  std::uint64_t program_seed = 0x0bad5eed;
};

struct SynthResult {
  LabeledStream stream;
  /// [start, end) sample ranges of the injected bursts, in stream order.
  std::vector<std::pair<Index, Index>> bursts;
  double anomaly_fraction = 0.0;
};

inline constexpr int kActions = 30;

SynthResult synth_generate(const SynthConfig& config);

}  // namespace varade
