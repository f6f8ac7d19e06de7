// SPDX-License-Identifier: Apache-2.0
#pragma once

// Sampling-policy update: KL-regularized value maximization with an entropy
// bonus. lambda = 0 is pure value maximization; lambda = INF switches to the
// KL-only loss.

#include <charconv>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pompc/dists.hpp"
#include "pompc/policy_head.hpp"
#include "pompc/value.hpp"

namespace pompc {

/// KL regularization strength; INF is a distinct value, not a large number.
struct KlWeight {
  double value = 1.0;
  bool infinite = false;

  static KlWeight finite(double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("lambda must be finite and >= 0");
    return {v, false};
  }
  static KlWeight inf() { return {std::numeric_limits<double>::infinity(), true}; }

  static KlWeight parse(const std::string& s) {
    if (s == "inf" || s == "INF" || s == "infinity") return inf();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("malformed lambda '" + s + "'");
    return finite(v);
  }

  std::string str() const;
};

inline std::string KlWeight::str() const {
  if (infinite) return "inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, r.ptr);
}

struct PolicyLossConfig {
  KlWeight lambda{};
  double alpha = 1e-4;
  double rho = 0.5;
};

struct PolicyLossResult {
  double loss = 0.0;
  double kl_term = 0.0;       // weighted, scaled contributions
  double q_term = 0.0;
  double entropy_term = 0.0;
  GradBundle grads;
  std::vector<double> kl_observations;  // unscaled KL(pi_s || pi_p) per sample
  std::vector<double> q_observations;   // unscaled Q~ per sample
};

namespace detail {

/// Mean-over-heads Q~ at (z, a) in inference mode, plus dQ/da.
inline std::pair<Vec, Mat> q_mean_and_action_grad(const QEnsemble& e, const Mat& z, const Mat& a) {
  const Mat in = vstack(z, a);
  const int latent = static_cast<int>(z.rows());
  const double nh = static_cast<double>(e.size());
  Vec q = Vec::Zero(z.cols());
  Mat dq_da = Mat::Zero(a.rows(), a.cols());
  for (const auto& head : e.heads) {
    ForwardResult f = forward(head, in, false, nullptr);
    const DecodedBatch d = two_hot_decode(e.grid, f.output);
    q += d.value / nh;
    BackwardResult b = backward(f.tape, two_hot_decode_grad(e.grid, d) / nh);
    dq_da += b.input_grad.bottomRows(in.rows() - latent);
  }
  return {q, dq_da};
}

}  // namespace detail

/// Per step t: lambda * KL(pi_s(z_t) || pi_p(z_t)) / max(1, S_KL)
///             - Q~(z_t, a~) / max(1, S_Q) - alpha * H(pi_s(z_t)),
/// a~ reparameterized from pi_s and clipped to the action box, weighted by
/// rho^t / H and averaged over the batch. Q~ and the prior are constants.
inline PolicyLossResult policy_loss(const GaussianPolicyNet& pi, std::span<const Mat> z,
                                    std::span<const GaussianBatch> prior, const QEnsemble& q_tilde,
                                    double kl_divisor, double q_divisor, const PolicyLossConfig& cfg, Rng& rng) {
  if (cfg.lambda.infinite) throw std::invalid_argument("policy_loss needs a finite lambda; use kl_only_loss");
  const int H = static_cast<int>(z.size());
  if (prior.size() < z.size()) throw ShapeError("policy_loss: missing prior per step");
  const bool use_kl = cfg.lambda.value != 0.0;
  PolicyLossResult res;
  res.grads.nets.push_back(zeros_like(pi.trunk));
  for (int t = 0; t < H; ++t) {
    const double B = static_cast<double>(z[t].cols());
    const double f = rho_weight(cfg.rho, t, H) / B;
    GaussianTape tape = gaussian_forward_train(pi, z[t]);
    const GaussianBatch& d = tape.dist;
    Mat noise;
    const Mat a = sample_clipped(d, rng, &noise);
    const Mat raw = d.mean + d.std.cwiseProduct(noise);
    const Mat inside = (raw.array().abs() < 1.0).cast<double>();
    auto [qv, dq_da] = detail::q_mean_and_action_grad(q_tilde, z[t], a);
    const Vec ent = entropy(d);

    const Mat d_a = (-f / q_divisor) * dq_da.cwiseProduct(inside);
    Mat d_mean = d_a;
    Mat d_std = d_a.cwiseProduct(noise) + (-cfg.alpha * f) * d.std.cwiseInverse();

    res.q_term += (-f / q_divisor) * qv.sum();
    res.entropy_term += (-cfg.alpha * f) * ent.sum();
    for (Eigen::Index b = 0; b < qv.size(); ++b) res.q_observations.push_back(qv[b]);

    const Vec klv = kl(d, prior[t]);
    for (Eigen::Index b = 0; b < klv.size(); ++b) res.kl_observations.push_back(klv[b]);
    if (use_kl) {
      const double c = cfg.lambda.value * f / kl_divisor;
      const KlGrad g = kl_grad(d, prior[t]);
      res.kl_term += c * klv.sum();
      d_mean += c * g.mean_p;
      d_std += c * g.std_p;
    }
    accumulate(res.grads.nets[0], gaussian_backward(pi, tape, d_mean, d_std));
  }
  res.loss = res.q_term + res.entropy_term;
  if (use_kl) res.loss += res.kl_term;
  if (!std::isfinite(res.loss)) throw NumericError("policy loss is not finite");
  return res;
}

/// lambda = INF: sum_t rho^t / H * KL(pi_s(z_t) || pi_p(z_t)) / max(1, S_KL);
/// no value and no entropy term.
inline PolicyLossResult kl_only_loss(const GaussianPolicyNet& pi, std::span<const Mat> z,
                                     std::span<const GaussianBatch> prior, double kl_divisor, double rho) {
  const int H = static_cast<int>(z.size());
  if (prior.size() < z.size()) throw ShapeError("kl_only_loss: missing prior per step");
  PolicyLossResult res;
  res.grads.nets.push_back(zeros_like(pi.trunk));
  for (int t = 0; t < H; ++t) {
    const double B = static_cast<double>(z[t].cols());
    const double c = rho_weight(rho, t, H) / (B * kl_divisor);
    GaussianTape tape = gaussian_forward_train(pi, z[t]);
    const Vec klv = kl(tape.dist, prior[t]);
    for (Eigen::Index b = 0; b < klv.size(); ++b) res.kl_observations.push_back(klv[b]);
    res.kl_term += c * klv.sum();
    const KlGrad g = kl_grad(tape.dist, prior[t]);
    accumulate(res.grads.nets[0], gaussian_backward(pi, tape, c * g.mean_p, c * g.std_p));
  }
  res.loss = res.kl_term;
  if (!std::isfinite(res.loss)) throw NumericError("kl-only loss is not finite");
  return res;
}

/// Routes to kl_only_loss when lambda is INF, else policy_loss.
inline PolicyLossResult sampling_policy_loss(const GaussianPolicyNet& pi, std::span<const Mat> z,
                                             std::span<const GaussianBatch> prior, const QEnsemble& q_tilde,
                                             double kl_divisor, double q_divisor, const PolicyLossConfig& cfg,
                                             Rng& rng) {
  if (cfg.lambda.infinite) return kl_only_loss(pi, z, prior, kl_divisor, cfg.rho);
  return policy_loss(pi, z, prior, q_tilde, kl_divisor, q_divisor, cfg, rng);
}

}  // namespace pompc
