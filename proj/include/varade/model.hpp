#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "varade/ops.hpp"
#include "varade/tape.hpp"
#include "varade/tensor.hpp"

namespace varade {

struct VaradeConfig {
  Index window = 512;
  Index channels = 86;
  Index base_maps = 128;
  double lambda = 1.0;
  double logvar_min = -10.0;
  double logvar_max = 10.0;

  void validate() const {
    if (window < 4 || !std::has_single_bit(static_cast<std::uint64_t>(window)))
      throw ConfigError("window must be a power of two >= 4, got " + std::to_string(window));
    if (channels < 1) throw ConfigError("channels must be >= 1");
    if (base_maps < 1) throw ConfigError("base_maps must be >= 1");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
    if (!(logvar_min < logvar_max)) throw ConfigError("logvar clamp bounds must be increasing");
  }

  /// Conv layers halve time until two positions remain: log2(window) - 1.
  Index conv_layers() const {
    return static_cast<Index>(std::bit_width(static_cast<std::uint64_t>(window))) - 2;
  }

  /// Feature maps of conv layer `layer` (0-based); doubles every two layers.
  Index feature_maps(Index layer) const { return base_maps << (layer / 2); }

  Index head_inputs() const { return 2 * feature_maps(conv_layers() - 1); }
  Index head_outputs() const { return 2 * channels; }

  friend bool operator==(const VaradeConfig&, const VaradeConfig&) = default;
};

template <typename Scalar>
struct AffineLayer {
  Tensor<Scalar> weight;
  Tensor<Scalar> bias;
};

/// Strided conv stack plus linear head. Predicts per-channel mean and
/// log-variance of the sample following a [C x T] window.
template <typename Scalar>
struct VaradeModel {
  VaradeConfig config;
  std::vector<AffineLayer<Scalar>> convs;
  AffineLayer<Scalar> head;

  /// Parameters in build order: conv weights/biases by layer, then the head.
  std::vector<Tensor<Scalar>*> parameters() {
    std::vector<Tensor<Scalar>*> out;
    for (auto& layer : convs) {
      out.push_back(&layer.weight);
      out.push_back(&layer.bias);
    }
    out.push_back(&head.weight);
    out.push_back(&head.bias);
    return out;
  }
  std::vector<const Tensor<Scalar>*> parameters() const {
    std::vector<const Tensor<Scalar>*> out;
    for (auto* p : const_cast<VaradeModel*>(this)->parameters()) out.push_back(p);
    return out;
  }

  template <typename Other>
  VaradeModel<Other> cast() const {
    VaradeModel<Other> out{config, {}, {head.weight.template cast<Other>(), head.bias.template cast<Other>()}};
    for (const auto& layer : convs)
      out.convs.push_back({layer.weight.template cast<Other>(), layer.bias.template cast<Other>()});
    return out;
  }

  friend bool operator==(const VaradeModel& a, const VaradeModel& b) {
    if (!(a.config == b.config) || a.convs.size() != b.convs.size()) return false;
    for (std::size_t i = 0; i < a.convs.size(); ++i)
      if (!(a.convs[i].weight == b.convs[i].weight && a.convs[i].bias == b.convs[i].bias))
        return false;
    return a.head.weight == b.head.weight && a.head.bias == b.head.bias;
  }
};

template <typename Scalar>
struct Prediction {
  Tensor<Scalar> mu;
  Tensor<Scalar> logvar;
};

/// Zero-initialized model with the geometry implied by `config`.
template <typename Scalar>
VaradeModel<Scalar> build_zero(const VaradeConfig& config) {
  config.validate();
  VaradeModel<Scalar> model;
  model.config = config;
  Index in_maps = config.channels;
  for (Index i = 0; i < config.conv_layers(); ++i) {
    const Index out_maps = config.feature_maps(i);
    model.convs.push_back({Tensor<Scalar>(Shape{out_maps, in_maps, 2}), Tensor<Scalar>(Shape{out_maps})});
    in_maps = out_maps;
  }
  model.head = {Tensor<Scalar>(Shape{config.head_outputs(), config.head_inputs()}),
                Tensor<Scalar>(Shape{config.head_outputs()})};
  return model;
}

/// Weights uniform in +-sqrt(1/fan_in), biases zero; reproducible from `seed`.
template <typename Scalar>
VaradeModel<Scalar> build(const VaradeConfig& config, std::uint64_t seed) {
  auto model = build_zero<Scalar>(config);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Tensor<Scalar>& w, Index fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < w.size(); ++i) w[i] = static_cast<Scalar>(dist(rng));
  };
  for (auto& layer : model.convs) fill(layer.weight, layer.weight.dim(1) * 2);
  fill(model.head.weight, model.head.weight.dim(1));
  return model;
}

template <typename Scalar>
std::size_t parameter_count(const VaradeModel<Scalar>& model) {
  std::size_t n = 0;
  for (const auto* p : model.parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

/// Raw head output for a batch of windows concatenated along time,
/// [C x (B*T)] -> [2C x B]. Log-variances are not clamped here.
template <typename Scalar>
Tensor<Scalar> forward_head(const VaradeModel<Scalar>& model, const Tensor<Scalar>& windows) {
  const auto& cfg = model.config;
  if (windows.rank() != 2 || windows.dim(0) != cfg.channels || windows.dim(1) % cfg.window != 0)
    throw ShapeError("forward: expected [" + std::to_string(cfg.channels) + " x k*" +
                     std::to_string(cfg.window) + "], got " + to_string(windows.shape()));
  Tensor<Scalar> x = windows;
  for (const auto& layer : model.convs) x = relu(conv1d(x, layer.weight, layer.bias));
  return linear(fold_windows(x, 2), model.head.weight, model.head.bias);
}

/// Mean and clamped log-variance for one [C x T] window.
template <typename Scalar>
Prediction<Scalar> forward(const VaradeModel<Scalar>& model, const Tensor<Scalar>& window) {
  const auto& cfg = model.config;
  require_shape(window.shape(), Shape{cfg.channels, cfg.window}, "forward window");
  const auto head = forward_head(model, window);
  const Index c = cfg.channels;
  Vector<Scalar> mu = head.flat().head(c);
  Vector<Scalar> logvar = head.flat()
                              .tail(c)
                              .cwiseMax(static_cast<Scalar>(cfg.logvar_min))
                              .cwiseMin(static_cast<Scalar>(cfg.logvar_max));
  return {Tensor<Scalar>(Shape{c}, std::move(mu)), Tensor<Scalar>(Shape{c}, std::move(logvar))};
}

/// Model parameters registered on a tape, in build order.
struct BoundModel {
  std::vector<Var> params;
};

template <typename Scalar>
BoundModel bind(Tape<Scalar>& tape, const VaradeModel<Scalar>& model) {
  BoundModel bound;
  for (const auto* p : model.parameters()) bound.params.push_back(tape.parameter(*p));
  return bound;
}

/// Taped counterpart of forward_head.
template <typename Scalar>
Var forward_head(Tape<Scalar>& tape, const BoundModel& bound, const VaradeConfig& cfg, Var windows) {
  const auto& wv = tape.value(windows);
  if (wv.rank() != 2 || wv.dim(0) != cfg.channels || wv.dim(1) % cfg.window != 0)
    throw ShapeError("forward: bad window batch " + to_string(wv.shape()));
  Var x = windows;
  const auto layers = static_cast<std::size_t>(cfg.conv_layers());
  for (std::size_t i = 0; i < layers; ++i)
    x = relu(tape, conv1d(tape, x, bound.params[2 * i], bound.params[2 * i + 1]));
  return linear(tape, fold_windows(tape, x, 2), bound.params[2 * layers],
                bound.params[2 * layers + 1]);
}

using ModelF = VaradeModel<float>;

}  // namespace varade
