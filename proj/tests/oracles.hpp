#pragma once

// Reference implementations used only by the tests. They are written as plain
// loops over indices and deliberately share no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "varade/data.hpp"
#include "varade/model.hpp"

namespace oracle {

using varade::Index;
using varade::Label;

// y(o, t) = b(o) + sum_i sum_k w(o, i, k) * x(i, 2t + k)
template <typename S>
varade::Tensor<S> conv1d(const varade::Tensor<S>& x, const varade::Tensor<S>& w,
                         const varade::Tensor<S>& b) {
  const Index cin = x.dim(0), len = x.dim(1), cout = w.dim(0);
  varade::Tensor<S> y(varade::Shape{cout, len / 2});
  for (Index o = 0; o < cout; ++o)
    for (Index t = 0; t < len / 2; ++t) {
      long double acc = b[o];
      for (Index i = 0; i < cin; ++i)
        for (Index k = 0; k < 2; ++k)
          acc += static_cast<long double>(w[(o * cin + i) * 2 + k]) * x[i * len + 2 * t + k];
      y[o * (len / 2) + t] = static_cast<S>(acc);
    }
  return y;
}

template <typename S>
std::vector<S> linear(const std::vector<S>& x, const varade::Tensor<S>& w, const varade::Tensor<S>& b) {
  const Index out = w.dim(0), in = w.dim(1);
  std::vector<S> y(static_cast<std::size_t>(out));
  for (Index o = 0; o < out; ++o) {
    long double acc = b[o];
    for (Index i = 0; i < in; ++i) acc += static_cast<long double>(w[o * in + i]) * x[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(o)] = static_cast<S>(acc);
  }
  return y;
}

// Straight-line model forward for one [C x T] window: conv/ReLU stack,
// row-major flatten of the final [maps x 2] feature map, linear head.
// Returns the raw head output (mu then unclamped logvar).
template <typename S>
std::vector<S> model_head(const varade::VaradeModel<S>& m, const varade::Tensor<S>& window) {
  varade::Tensor<S> x = window;
  for (const auto& layer : m.convs) {
    x = oracle::conv1d(x, layer.weight, layer.bias);
    for (Index i = 0; i < x.size(); ++i) x[i] = std::max(x[i], S(0));
  }
  std::vector<S> flat(x.data(), x.data() + x.size());
  return linear(flat, m.head.weight, m.head.bias);
}

// Elementwise loss terms averaged over every element, accumulated in long double.
struct Loss {
  long double recon = 0, kl = 0;
};

inline Loss loss(const std::vector<double>& y, const std::vector<double>& mu, const std::vector<double>& lv) {
  Loss out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const long double d = y[i] - mu[i];
    out.recon += 0.5L * (lv[i] + d * d / std::exp(static_cast<long double>(lv[i])));
    out.kl += 0.5L * (mu[i] * static_cast<long double>(mu[i]) + std::exp(static_cast<long double>(lv[i])) - 1.0L - lv[i]);
  }
  out.recon /= static_cast<long double>(y.size());
  out.kl /= static_cast<long double>(y.size());
  return out;
}

// O(n^2) AUC: fraction of (anomaly, normal) pairs ordered correctly, ties 1/2.
// Counts are kept as integers (doubled) so the result is exact.
inline double pairwise_auc(const std::vector<double>& s, const std::vector<Label>& l) {
  long long twice = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (l[i] != Label::anomaly) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j] != Label::normal) continue;
      ++pairs;
      twice += s[i] > s[j] ? 2 : s[i] == s[j] ? 1 : 0;
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pairs));
}

// Distance to the k-th nearest point after sorting every distance.
inline double knn(const varade::RowMatrix<float>& pts, const std::vector<float>& q, Index k) {
  std::vector<double> d;
  for (Index r = 0; r < pts.rows(); ++r) {
    double acc = 0;
    for (Index c = 0; c < pts.cols(); ++c) {
      const double diff = static_cast<double>(pts(r, c)) - q[static_cast<std::size_t>(c)];
      acc += diff * diff;
    }
    d.push_back(acc);
  }
  std::sort(d.begin(), d.end());
  return std::sqrt(d[static_cast<std::size_t>(k - 1)]);
}

// Rotation matrix R = Rz(yaw) Ry(pitch) Rx(roll), then Shepperd's method.
inline varade::Quaternion quaternion_via_matrix(double roll_deg, double pitch_deg, double yaw_deg) {
  const double d = M_PI / 180.0;
  const double r = roll_deg * d, p = pitch_deg * d, y = yaw_deg * d;
  using M = std::array<std::array<double, 3>, 3>;
  const M rx{{{1, 0, 0}, {0, std::cos(r), -std::sin(r)}, {0, std::sin(r), std::cos(r)}}};
  const M ry{{{std::cos(p), 0, std::sin(p)}, {0, 1, 0}, {-std::sin(p), 0, std::cos(p)}}};
  const M rz{{{std::cos(y), -std::sin(y), 0}, {std::sin(y), std::cos(y), 0}, {0, 0, 1}}};
  auto mul = [](const M& a, const M& b) {
    M c{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
  };
  const M m = mul(rz, mul(ry, rx));
  varade::Quaternion q;
  const double tr = m[0][0] + m[1][1] + m[2][2];
  if (tr > 0) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    q = {0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s};
  } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]);
    q = {(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s};
  } else if (m[1][1] > m[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]);
    q = {(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]);
    q = {(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s};
  }
  return q;
}

// Central difference of f with respect to every element of `x`.
template <typename S>
std::vector<double> numeric_gradient(varade::Tensor<S>& x, const std::function<double()>& f, double h) {
  std::vector<double> g(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) {
    const S saved = x[i];
    x[i] = saved + static_cast<S>(h);
    const double up = f();
    x[i] = saved - static_cast<S>(h);
    const double down = f();
    x[i] = saved;
    g[static_cast<std::size_t>(i)] = (up - down) / (2.0 * h);
  }
  return g;
}

template <typename S>
varade::Tensor<S> random_tensor(varade::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  varade::Tensor<S> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<S>(u(rng));
  return t;
}

}  // namespace oracle
