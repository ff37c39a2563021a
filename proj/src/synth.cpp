#include "varade/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "varade/errors.hpp"

namespace varade {

namespace {

constexpr int kHarmonics = 3;
constexpr double kGravity = 9.81;
constexpr double kDegToRad = std::numbers::pi / 180.0;
// Base standard deviations of the colored IMU vibration noise.
constexpr double kAccNoise = 1.5;    // m/s^2
constexpr double kGyroNoise = 15.0;  // deg/s

// Smooth per-joint Euler trajectory for one action: each axis is the joint's
// home angle plus sine harmonics vanishing at both ends of the action, so
// consecutive actions join continuously at the home pose.
struct JointMotion {
  std::array<std::array<double, kHarmonics>, 3> amplitude{};  // degrees, [axis][harmonic]
};

struct RobotProgram {
  std::array<std::array<double, 3>, ChannelSchema::kJoints> home{};
  std::array<std::array<JointMotion, ChannelSchema::kJoints>, kActions> motion{};
  std::array<double, kActions> noise_scale{};
};

RobotProgram make_program(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RobotProgram program;
  for (auto& home : program.home)
    for (double& angle : home) angle = -60.0 + 120.0 * unit(rng);
  for (int a = 0; a < kActions; ++a) {
    program.noise_scale[static_cast<std::size_t>(a)] = 0.5 + 2.0 * unit(rng);
    for (auto& joint : program.motion[static_cast<std::size_t>(a)]) {
      const bool idle = unit(rng) < 0.25;
      for (auto& axis : joint.amplitude)
        for (int k = 0; k < kHarmonics; ++k)
          axis[static_cast<std::size_t>(k)] =
              idle ? 0.0 : (-40.0 + 80.0 * unit(rng)) / static_cast<double>(k + 1);
    }
  }
  return program;
}

struct JointKinematics {
  std::array<double, 3> angle{};  // degrees
  std::array<double, 3> rate{};   // deg/s
  std::array<double, 3> accel{};  // deg/s^2
};

JointKinematics evaluate(const JointMotion& motion, const std::array<double, 3>& home,
                         double phase, double duration) {
  JointKinematics out;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    out.angle[axis] = home[axis];
    for (int k = 0; k < kHarmonics; ++k) {
      const double a = motion.amplitude[axis][static_cast<std::size_t>(k)];
      const double w = std::numbers::pi * (k + 1);
      out.angle[axis] += a * std::sin(w * phase);
      out.rate[axis] += a * (w / duration) * std::cos(w * phase);
      out.accel[axis] -= a * (w / duration) * (w / duration) * std::sin(w * phase);
    }
  }
  return out;
}

// Gravity expressed in the sensor frame for Z-Y-X Euler angles.
std::array<double, 3> gravity_in_sensor(double roll, double pitch) {
  const double r = roll * kDegToRad, p = pitch * kDegToRad;
  return {-kGravity * std::sin(p), kGravity * std::sin(r) * std::cos(p),
          kGravity * std::cos(r) * std::cos(p)};
}

struct Burst {
  Index start = 0;
  Index length = 0;
  std::array<double, ChannelSchema::kJoints> level{};  // ringing level per joint, 0 if not struck
  double current_spike = 0.0;
};

}  // namespace

SynthResult synth_generate(const SynthConfig& config) {
  if (config.cycles < 1) throw ConfigError("synth: cycles must be >= 1");
  if (!(config.sample_rate > 0.0) || !(config.action_seconds > 0.0) || !(config.meter_rate > 0.0))
    throw ConfigError("synth: rates and durations must be positive");
  if (config.anomalies < 0) throw ConfigError("synth: anomaly count must be >= 0");
  if (!(config.burst_amplitude >= 0.0) || !(std::abs(config.burst_correlation) < 1.0))
    throw ConfigError("synth: burst amplitude must be >= 0 and |burst correlation| < 1");
  if (!(config.vibration_min_seconds > 0.0) || config.vibration_max_seconds < config.vibration_min_seconds)
    throw ConfigError("synth: invalid vibration time range");
  if (!(config.burst_min_seconds > 0.0) || config.burst_max_seconds < config.burst_min_seconds)
    throw ConfigError("synth: invalid burst duration range");

  const RobotProgram program = make_program(config.program_seed);
  const double fs = config.sample_rate;
  const auto per_action = std::max<Index>(1, std::llround(config.action_seconds * fs));
  const Index n = per_action * kActions * config.cycles;
  const Index channels = ChannelSchema::robot().size();

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Burst placement: draw lengths, then spread the free samples uniformly so
  // bursts never overlap and keep at least `guard` samples between them.
  std::vector<Burst> bursts(static_cast<std::size_t>(config.anomalies));
  const auto guard = std::llround(config.guard_seconds * fs);
  Index required = 0;
  for (auto& b : bursts) {
    const double seconds = config.burst_min_seconds +
                           (config.burst_max_seconds - config.burst_min_seconds) * unit(rng);
    b.length = std::max<Index>(1, std::llround(seconds * fs));
    required += b.length + guard;
  }
  if (required > n)
    throw ConfigError("synth: cannot place " + std::to_string(config.anomalies) +
                      " non-overlapping anomalies in " + std::to_string(n) + " samples");
  {
    std::uniform_int_distribution<Index> offset(0, n - required);
    std::vector<Index> offsets(bursts.size());
    for (auto& o : offsets) o = offset(rng);
    std::sort(offsets.begin(), offsets.end());
    Index consumed = 0;
    for (std::size_t i = 0; i < bursts.size(); ++i) {
      consumed += guard;
      bursts[i].start = offsets[i] + consumed;
      consumed += bursts[i].length;
    }
  }
  for (auto& b : bursts) {
    const int struck = 1 + std::min(2, static_cast<int>(unit(rng) * 3.0));
    std::array<int, ChannelSchema::kJoints> joints{0, 1, 2, 3, 4, 5, 6};
    std::shuffle(joints.begin(), joints.end(), rng);
    for (int k = 0; k < struck; ++k)
      b.level[static_cast<std::size_t>(joints[static_cast<std::size_t>(k)])] = config.burst_amplitude * (1.0 + unit(rng));
    b.current_spike = 0.02 + 0.04 * unit(rng);
  }

  SynthResult result;
  LabeledStream& stream = result.stream;
  stream.timestamps.resize(static_cast<std::size_t>(n));
  stream.labels.assign(static_cast<std::size_t>(n), Label::normal);
  stream.values = RowMatrix<float>::Zero(n, channels);

  std::vector<Index> burst_of(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < bursts.size(); ++i)
    for (Index t = bursts[i].start; t < bursts[i].start + bursts[i].length; ++t) {
      burst_of[static_cast<std::size_t>(t)] = static_cast<Index>(i);
      stream.labels[static_cast<std::size_t>(t)] = Label::anomaly;
    }

  const Index meter_period = std::max<Index>(1, std::llround(fs / config.meter_rate));
  std::array<double, 8> meter{};
  const Index meter_base = ChannelSchema::meter_channel("current");

  // IMU vibration: stationary AR(1) noise per IMU channel. Its level and
  // correlation time follow a piecewise-constant random regime independent of
  // the program. Collisions switch the struck joints to sign-alternating ringing.
  auto log_uniform = [&](double lo, double hi) { return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * unit(rng)); };
  std::array<std::array<double, 6>, ChannelSchema::kJoints> vibration{};
  double level = 1.0, rho = 0.0;
  Index regime_left = 0;

  for (Index t = 0; t < n; ++t) {
    if (regime_left-- <= 0) {
      level = log_uniform(0.7, 1.4);
      rho = std::exp(-1.0 / (log_uniform(config.vibration_min_seconds, config.vibration_max_seconds) * fs));
      regime_left = std::llround((1.0 + 7.0 * unit(rng)) * fs);
    }
    const double time = static_cast<double>(t) / fs;
    const Index action = (t / per_action) % kActions;
    const double phase = static_cast<double>(t % per_action) / static_cast<double>(per_action);
    const double noise = program.noise_scale[static_cast<std::size_t>(action)];
    const Index burst = burst_of[static_cast<std::size_t>(t)];
    auto row = stream.values.row(t);

    stream.timestamps[static_cast<std::size_t>(t)] = time;
    row(0) = static_cast<float>(action);

    double motion = 0.0;
    for (int j = 0; j < ChannelSchema::kJoints; ++j) {
      const auto kin = evaluate(program.motion[static_cast<std::size_t>(action)][static_cast<std::size_t>(j)],
                                program.home[static_cast<std::size_t>(j)], phase, config.action_seconds);
      std::array<double, 3> angle{};
      for (std::size_t a = 0; a < 3; ++a) angle[a] = kin.angle[a] + 0.2 * noise * gauss(rng);
      const auto g = gravity_in_sensor(angle[0], angle[1]);

      std::array<double, 6> imu{};
      double joint_level = level, joint_rho = rho;
      if (burst >= 0) {
        const auto& b = bursts[static_cast<std::size_t>(burst)];
        if (b.level[static_cast<std::size_t>(j)] > 0.0) {
          joint_level = b.level[static_cast<std::size_t>(j)];
          joint_rho = config.burst_correlation;
        }
      }
      const double innovation = std::sqrt(1.0 - joint_rho * joint_rho);
      auto& vib = vibration[static_cast<std::size_t>(j)];
      for (double& v : vib) v = joint_rho * v + innovation * joint_level * gauss(rng);
      for (std::size_t a = 0; a < 3; ++a) {
        imu[a] = g[a] + 0.004 * kin.accel[a] + kAccNoise * vib[a] + 0.01 * noise * gauss(rng);
        imu[3 + a] = kin.rate[a] + kGyroNoise * vib[3 + a] + 0.1 * noise * gauss(rng);
        motion += std::abs(kin.rate[a]);
      }

      const auto q = euler_to_quaternion(angle[0], angle[1], angle[2]);
      const double temp = 35.0 + j + 2.0 * std::sin(2.0 * std::numbers::pi * time / 1800.0 + j) +
                          0.05 * gauss(rng);
      const std::array<double, 11> values{imu[0], imu[1], imu[2], imu[3], imu[4], imu[5],
                                          q.w,    q.x,    q.y,    q.z,    temp};
      const Index base = ChannelSchema::joint_channel(j, "AccX");
      for (std::size_t c = 0; c < values.size(); ++c)
        row(base + static_cast<Index>(c)) = static_cast<float>(values[c]);
    }

    if (t % meter_period == 0) {
      double current = 0.8 + 0.002 * motion + 0.005 * gauss(rng);
      if (burst >= 0) current += bursts[static_cast<std::size_t>(burst)].current_spike;
      const double voltage = 230.0 + 2.0 * std::sin(2.0 * std::numbers::pi * time / 600.0) -
                             0.5 * current + 0.05 * gauss(rng);
      const double frequency = 50.0 + 0.05 * std::sin(2.0 * std::numbers::pi * time / 300.0) + 0.002 * gauss(rng);
      const double pf = std::clamp(0.85 + 0.05 * std::tanh(motion / 200.0) + 0.001 * gauss(rng), 0.0, 1.0);
      const double phase_angle = std::acos(pf) / kDegToRad;
      const double power = voltage * current * pf;
      const double reactive = voltage * current * std::sin(phase_angle * kDegToRad);
      const double energy_wh = power / config.meter_rate / 3600.0;
      meter = {current, frequency, phase_angle, power, pf, reactive, voltage, energy_wh};
    }
    for (std::size_t m = 0; m < meter.size(); ++m)
      row(meter_base + static_cast<Index>(m)) = static_cast<float>(meter[m]);
  }

  Index anomalous = 0;
  for (const auto& b : bursts) {
    result.bursts.emplace_back(b.start, b.start + b.length);
    anomalous += b.length;
  }
  result.anomaly_fraction = static_cast<double>(anomalous) / static_cast<double>(n);
  return result;
}

}  // namespace varade
