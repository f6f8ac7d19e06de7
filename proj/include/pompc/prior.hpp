// SPDX-License-Identifier: Apache-2.0
#pragma once

// Adaptive prior: a Gaussian policy distilled from stored planning-policy
// statistics by reverse or forward KL.

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pompc/dists.hpp"
#include "pompc/policy_head.hpp"
#include "pompc/value.hpp"

namespace pompc {

enum class PriorMode { ReverseKl, ForwardKl, ReplayDirect };

inline PriorMode parse_prior_mode(std::string_view s) {
  if (s == "reverse_kl") return PriorMode::ReverseKl;
  if (s == "forward_kl") return PriorMode::ForwardKl;
  if (s == "replay_direct") return PriorMode::ReplayDirect;
  throw std::invalid_argument("unknown prior mode '" + std::string(s) + "'");
}

inline std::string to_string(PriorMode m) {
  switch (m) {
    case PriorMode::ReverseKl: return "reverse_kl";
    case PriorMode::ForwardKl: return "forward_kl";
    case PriorMode::ReplayDirect: return "replay_direct";
  }
  return "reverse_kl";
}

/// The prior network shares the sampling policy's architecture but never its
/// parameters.
inline GaussianBatch prior_forward(const GaussianPolicyNet& prior, const Mat& z) { return gaussian_forward(prior, z); }

struct PriorLossResult {
  double loss = 0.0;
  GradBundle grads;
  std::vector<double> kl_observations;  // unscaled per-sample KL, for S_p
  long skipped = 0;                     // records with degenerate stored std
};

/// sum_t rho^t / H * KL / max(1, S_p), averaged over the batch. Reverse mode
/// uses KL(pi_p || pi_P), forward mode KL(pi_P || pi_p). Stored statistics
/// are constants.
inline PriorLossResult prior_loss(const GaussianPolicyNet& prior, std::span<const Mat> z,
                                  std::span<const Mat> plan_mean, std::span<const Mat> plan_std, PriorMode mode,
                                  double divisor, double rho) {
  if (mode == PriorMode::ReplayDirect) throw std::invalid_argument("prior_loss is not defined for replay_direct");
  const int H = static_cast<int>(z.size());
  if (plan_mean.size() < z.size() || plan_std.size() < z.size()) throw ShapeError("prior_loss: missing plan stats");
  PriorLossResult res;
  res.grads.nets.push_back(zeros_like(prior.trunk));
  for (int t = 0; t < H; ++t) {
    const double B = static_cast<double>(z[t].cols());
    const double w = rho_weight(rho, t, H);
    GaussianTape tape = gaussian_forward_train(prior, z[t]);
    GaussianBatch stored{plan_mean[t], plan_std[t]};
    Vec valid = Vec::Ones(z[t].cols());
    for (Eigen::Index b = 0; b < stored.std.cols(); ++b) {
      const bool ok = stored.std.col(b).allFinite() && (stored.std.col(b).array() > 0.0).all() &&
                      stored.mean.col(b).allFinite();
      if (!ok) {
        valid[b] = 0.0;
        stored.std.col(b).setOnes();
        stored.mean.col(b).setZero();
        ++res.skipped;
      }
    }
    Vec klv;
    Mat d_mean, d_std;
    if (mode == PriorMode::ReverseKl) {
      klv = kl(tape.dist, stored);
      const KlGrad g = kl_grad(tape.dist, stored);
      d_mean = g.mean_p;
      d_std = g.std_p;
    } else {
      klv = kl(stored, tape.dist);
      const KlGrad g = kl_grad(stored, tape.dist);
      d_mean = g.mean_q;
      d_std = g.std_q;
    }
    const double f = w / (B * divisor);
    for (Eigen::Index b = 0; b < klv.size(); ++b) {
      if (valid[b] == 0.0) continue;
      res.loss += f * klv[b];
      res.kl_observations.push_back(klv[b]);
    }
    const Mat mask = valid.transpose().replicate(prior.action_dim, 1);
    accumulate(res.grads.nets[0],
               gaussian_backward(prior, tape, f * d_mean.cwiseProduct(mask), f * d_std.cwiseProduct(mask)));
  }
  if (!std::isfinite(res.loss)) throw NumericError("prior loss is not finite");
  return res;
}

}  // namespace pompc
