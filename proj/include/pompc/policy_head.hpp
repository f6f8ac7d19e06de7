// SPDX-License-Identifier: Apache-2.0
#pragma once

// Gaussian policy network shared by the sampling policy and the adaptive
// prior: an MLP trunk emitting (pre-tanh mean, raw log-std) per action dim.
// The log-std is soft-clamped into [log_std_min, log_std_max] with a tanh,
// so a zero output maps to the midpoint of the clamp interval.

#include <cmath>

#include "pompc/dists.hpp"
#include "pompc/nnet.hpp"

namespace pompc {

struct GaussianPolicyNet {
  Mlp trunk;
  int action_dim = 0;
  double log_std_min = std::log(0.05);
  double log_std_max = std::log(2.0);

  double log_std_mid() const { return 0.5 * (log_std_min + log_std_max); }
};

inline GaussianPolicyNet make_policy_net(int latent_dim, int action_dim, int hidden, int depth, Activation act,
                                         double log_std_min, double log_std_max, Rng& rng) {
  MlpSpec spec;
  spec.widths.push_back(latent_dim);
  for (int i = 0; i < depth; ++i) spec.widths.push_back(hidden);
  spec.widths.push_back(2 * action_dim);
  spec.hidden = act;
  GaussianPolicyNet net{make_mlp(spec, rng), action_dim, log_std_min, log_std_max};
  return net;
}

namespace detail {

inline GaussianBatch head_transform(const GaussianPolicyNet& net, const Mat& raw) {
  const int a = net.action_dim;
  if (raw.rows() != 2 * a) throw ShapeError("policy trunk output must be 2 * action_dim");
  GaussianBatch d;
  d.mean = raw.topRows(a).array().tanh();
  const double half = 0.5 * (net.log_std_max - net.log_std_min);
  Mat log_std = net.log_std_min + half * (raw.bottomRows(a).array().tanh() + 1.0);
  d.std = log_std.array().exp();
  return d;
}

}  // namespace detail

/// Inference-only forward pass.
inline GaussianBatch gaussian_forward(const GaussianPolicyNet& net, const Mat& z) {
  return detail::head_transform(net, infer(net.trunk, z));
}

/// Forward pass retaining what is needed for backpropagation.
struct GaussianTape {
  GaussianBatch dist;
  Mat raw;
  MlpTape trunk;
};

inline GaussianTape gaussian_forward_train(const GaussianPolicyNet& net, const Mat& z) {
  ForwardResult f = forward(net.trunk, z, false, nullptr);
  GaussianTape t;
  t.dist = detail::head_transform(net, f.output);
  t.raw = std::move(f.output);
  t.trunk = std::move(f.tape);
  return t;
}

/// Chain gradients w.r.t. (mean, std) into trunk parameter gradients.
inline Mlp gaussian_backward(const GaussianPolicyNet& net, const GaussianTape& tape, const Mat& d_mean,
                             const Mat& d_std) {
  const int a = net.action_dim;
  const double half = 0.5 * (net.log_std_max - net.log_std_min);
  Mat d_raw(2 * a, tape.raw.cols());
  d_raw.topRows(a) = d_mean.array() * (1.0 - tape.dist.mean.array().square());
  const auto t = tape.raw.bottomRows(a).array().tanh();
  d_raw.bottomRows(a) = d_std.array() * tape.dist.std.array() * half * (1.0 - t.square());
  return backward(tape.trunk, d_raw).grads;
}

/// Action for environment interaction: the mean, or a sample clipped to [-1, 1].
inline Vec act(const GaussianPolicyNet& net, const Vec& z, bool deterministic, Rng& rng) {
  const GaussianBatch d = gaussian_forward(net, z);
  if (deterministic) return d.mean.col(0);
  Vec noise(net.action_dim);
  for (int i = 0; i < net.action_dim; ++i) noise[i] = rng.normal();
  return sample(d.col(0), noise).cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace pompc
