#pragma once

#include <cmath>
#include <utility>

#include "varade/tape.hpp"
#include "varade/tensor.hpp"

namespace varade {

template <typename Scalar>
struct LossBreakdown {
  Scalar recon = 0;
  Scalar kl = 0;
  Scalar total = 0;
};

namespace detail {

template <typename Scalar>
void check_same(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* what) {
  require_shape(b.shape(), a.shape(), what);
}

template <typename Scalar>
LossBreakdown<Scalar> combine(Scalar recon, Scalar kl, Scalar lambda) {
  return {recon, kl, recon + lambda * kl};
}

}  // namespace detail

/// Gaussian negative log-likelihood without the log(2*pi) constant, averaged
/// over channels: mean(0.5 * (logvar + (y - mu)^2 * exp(-logvar))).
template <typename Scalar>
Scalar gaussian_nll(const Tensor<Scalar>& y, const Tensor<Scalar>& mu,
                    const Tensor<Scalar>& logvar) {
  detail::check_same(y, mu, "gaussian_nll mu");
  detail::check_same(y, logvar, "gaussian_nll logvar");
  const auto lv = logvar.flat().array();
  const auto diff = y.flat().array() - mu.flat().array();
  return (Scalar(0.5) * (lv + diff.square() * (-lv).exp())).mean();
}

/// KL divergence of N(mu, exp(logvar)) from N(0, 1), averaged over channels.
template <typename Scalar>
Scalar kl_std_normal(const Tensor<Scalar>& mu, const Tensor<Scalar>& logvar) {
  detail::check_same(mu, logvar, "kl_std_normal logvar");
  const auto lv = logvar.flat().array();
  const auto m = mu.flat().array();
  return (Scalar(-0.5) * (Scalar(1) + lv - m.square() - lv.exp())).mean();
}

template <typename Scalar>
LossBreakdown<Scalar> total_loss(const Tensor<Scalar>& y, const Tensor<Scalar>& mu,
                                 const Tensor<Scalar>& logvar, Scalar lambda) {
  if (!(lambda >= Scalar(0))) throw ConfigError("total_loss: lambda must be nonnegative");
  return detail::combine(gaussian_nll(y, mu, logvar), kl_std_normal(mu, logvar), lambda);
}

template <typename Scalar>
struct TapedLoss {
  Var total;
  LossBreakdown<Scalar> breakdown;
};

/// Variational objective on a head output of [2C] or [2C x B] (means in the
/// first C rows, raw log-variances in the last C) against targets [C] or
/// [C x B]. Log-variances are clamped to [logvar_min, logvar_max] with zero
/// gradient outside the interval. Averages over channels and batch.
template <typename Scalar>
TapedLoss<Scalar> variational_loss(Tape<Scalar>& tape, Var head, Var target, Scalar lambda,
                                   Scalar logvar_min, Scalar logvar_max) {
  if (!(lambda >= Scalar(0))) throw ConfigError("variational_loss: lambda must be nonnegative");
  const auto& hv = tape.value(head);
  const auto& yv = tape.value(target);
  const Index channels = yv.dim(0);
  const Index batch = yv.rank() == 1 ? 1 : yv.dim(1);
  if (hv.size() != 2 * channels * batch || hv.dim(0) != 2 * channels)
    throw ShapeError("variational_loss: head " + to_string(hv.shape()) + " vs target " +
                     to_string(yv.shape()));

  using Map = Eigen::Map<const RowMatrix<Scalar>>;
  const Map h(hv.data(), 2 * channels, batch);
  const Map y(yv.data(), channels, batch);
  const auto mu = h.topRows(channels).array();
  const auto raw = h.bottomRows(channels).array();
  const auto lv = raw.cwiseMax(logvar_min).cwiseMin(logvar_max);
  const Scalar count = static_cast<Scalar>(channels * batch);

  const Scalar recon = (Scalar(0.5) * (lv + (y.array() - mu).square() * (-lv).exp())).sum() / count;
  const Scalar kl = (Scalar(-0.5) * (Scalar(1) + lv - mu.square() - lv.exp())).sum() / count;
  const auto breakdown = detail::combine(recon, kl, lambda);

  Tensor<Scalar> out(Shape{});
  out[0] = breakdown.total;
  Var total = tape.record(
      std::move(out), {head, target},
      [=, loss = Var{tape.size()}](Tape<Scalar>& t) {
        const Scalar upstream = t.grad(loss)[0] / count;
        const auto& hv2 = t.value(head);
        const Map h2(hv2.data(), 2 * channels, batch);
        const Map y2(t.value(target).data(), channels, batch);
        const auto m = h2.topRows(channels).array();
        const auto r = h2.bottomRows(channels).array();
        const auto l = r.cwiseMax(logvar_min).cwiseMin(logvar_max);
        const auto inv_var = (-l).exp();
        const auto diff = y2.array() - m;

        if (t.requires_grad(head)) {
          auto& gh = t.grad_accumulator(head);
          Eigen::Map<RowMatrix<Scalar>> g(gh.data(), 2 * channels, batch);
          g.topRows(channels).array() += upstream * (-diff * inv_var + lambda * m);
          const auto inside = (r >= logvar_min && r <= logvar_max);
          const auto dlv = Scalar(0.5) * (Scalar(1) - diff.square() * inv_var) +
                           lambda * Scalar(0.5) * (l.exp() - Scalar(1));
          g.bottomRows(channels).array() += inside.select(upstream * dlv, Scalar(0));
        }
        if (t.requires_grad(target)) {
          auto& gy = t.grad_accumulator(target);
          Eigen::Map<RowMatrix<Scalar>> g(gy.data(), channels, batch);
          g.array() += upstream * diff * inv_var;
        }
      });
  return {total, breakdown};
}

}  // namespace varade
