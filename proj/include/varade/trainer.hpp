#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "varade/adam.hpp"
#include "varade/loss.hpp"
#include "varade/model.hpp"

namespace varade {

/// A normalized series laid out channel-major, [C x N]; window `s` covers
/// samples [s, s+T) and its target is sample s+T.
template <typename Scalar>
using Series = RowMatrix<Scalar>;

struct TrainOptions {
  std::int64_t steps = 2000;
  Index batch = 64;
  double lr = 1e-5;
  std::uint64_t seed = 0;
  /// Called after every step with (step, loss); may be empty.
  std::function<void(std::int64_t, const LossBreakdown<double>&)> on_step;
};

struct TrainResult {
  LossBreakdown<double> first;
  LossBreakdown<double> last;
  std::int64_t steps = 0;
};

/// Concatenates windows starting at `starts` into [C x (B*T)] and gathers
/// their next-sample targets into [C x B].
template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> gather_batch(const Series<Scalar>& series,
                                                       const std::vector<Index>& starts,
                                                       Index window) {
  const Index channels = series.rows();
  const auto batch = static_cast<Index>(starts.size());
  Tensor<Scalar> x(Shape{channels, batch * window});
  Tensor<Scalar> y(Shape{channels, batch});
  auto xm = x.matrix();
  auto ym = y.matrix();
  for (Index b = 0; b < batch; ++b) {
    const Index s = starts[static_cast<std::size_t>(b)];
    xm.middleCols(b * window, window) = series.middleCols(s, window);
    ym.col(b) = series.col(s + window);
  }
  return {std::move(x), std::move(y)};
}

/// Loss and parameter gradients (build order) for one batch.
template <typename Scalar>
std::pair<LossBreakdown<Scalar>, std::vector<Tensor<Scalar>>> loss_and_gradients(
    const VaradeModel<Scalar>& model, const Tensor<Scalar>& windows, const Tensor<Scalar>& targets) {
  const auto& cfg = model.config;
  Tape<Scalar> tape;
  const auto bound = bind(tape, model);
  const Var x = tape.constant(windows);
  const Var y = tape.constant(targets);
  const Var head = forward_head(tape, bound, cfg, x);
  const auto loss = variational_loss(tape, head, y, static_cast<Scalar>(cfg.lambda),
                                     static_cast<Scalar>(cfg.logvar_min),
                                     static_cast<Scalar>(cfg.logvar_max));
  tape.backward(loss.total);
  std::vector<Tensor<Scalar>> grads;
  grads.reserve(bound.params.size());
  for (Var p : bound.params) grads.push_back(tape.grad(p));
  return {loss.breakdown, std::move(grads)};
}

/// Adam training on uniformly sampled windows. Aborts with NumericError on a
/// non-finite loss or gradient.
template <typename Scalar>
TrainResult train(VaradeModel<Scalar>& model, const Series<Scalar>& series, const TrainOptions& options,
                  AdamState<Scalar>& state) {
  const auto& cfg = model.config;
  if (series.rows() != cfg.channels)
    throw ShapeError("train: series has " + std::to_string(series.rows()) + " channels, model " +
                     std::to_string(cfg.channels));
  const Index windows = series.cols() - cfg.window;
  if (windows < 1)
    throw ConfigError("train: need more than " + std::to_string(cfg.window) + " samples, got " +
                      std::to_string(series.cols()));
  if (options.batch < 1) throw ConfigError("train: batch must be >= 1");

  state.lr = options.lr;
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<Index> pick(0, windows - 1);
  std::vector<Index> starts(static_cast<std::size_t>(options.batch));

  TrainResult result;
  auto params = model.parameters();
  std::vector<const Tensor<Scalar>*> grad_ptrs(params.size());
  for (std::int64_t step = 0; step < options.steps; ++step) {
    for (auto& s : starts) s = pick(rng);
    const auto [x, y] = gather_batch(series, starts, cfg.window);
    auto [loss, grads] = loss_and_gradients(model, x, y);
    const LossBreakdown<double> l{loss.recon, loss.kl, loss.total};
    if (!std::isfinite(l.total))
      throw NumericError("train: non-finite loss at step " + std::to_string(step + 1) +
                         " (recon " + std::to_string(l.recon) + ", kl " + std::to_string(l.kl) + ")");
    for (std::size_t i = 0; i < grads.size(); ++i) grad_ptrs[i] = &grads[i];
    adam_step<Scalar>(params, grad_ptrs, state);
    if (step == 0) result.first = l;
    result.last = l;
    result.steps = step + 1;
    if (options.on_step) options.on_step(step + 1, l);
  }
  return result;
}

}  // namespace varade
