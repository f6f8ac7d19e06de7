// SPDX-License-Identifier: Apache-2.0
#pragma once

// Action-value ensembles with discrete-regression TD losses: the bootstrap
// Q used for planning and the KL-regularized Q used by the policy update
// share this machinery.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pompc/dists.hpp"
#include "pompc/nnet.hpp"
#include "pompc/policy_head.hpp"
#include "pompc/twohot.hpp"

namespace pompc {

struct QEnsemble {
  std::vector<Mlp> heads;
  std::vector<Mlp> targets;
  BinGrid grid;

  int size() const { return static_cast<int>(heads.size()); }
};

/// head_spec.widths must be [latent + action, hidden..., num_bins].
inline QEnsemble make_q_ensemble(const MlpSpec& head_spec, int num_heads, const BinGrid& grid, Rng& rng) {
  if (num_heads < 2) throw std::invalid_argument("q ensemble needs at least 2 heads");
  if (head_spec.widths.back() != grid.num_bins) throw ShapeError("q head output width != num_bins");
  QEnsemble e;
  e.grid = grid;
  for (int i = 0; i < num_heads; ++i) e.heads.push_back(make_mlp(head_spec, rng));
  e.targets = e.heads;
  return e;
}

enum class QReduce { MinOfTwo, Mean };

/// Two distinct head indices drawn uniformly.
inline std::pair<int, int> pick_two(int n, Rng& rng) {
  const int i = static_cast<int>(rng.uniform_int(0, n - 1));
  int j = static_cast<int>(rng.uniform_int(0, n - 2));
  if (j >= i) ++j;
  return {i, j};
}

/// Decoded Q over a batch. MinOfTwo takes the elementwise minimum of two
/// uniformly subsampled heads (TD targets); Mean averages all heads.
inline Vec q_value(const QEnsemble& e, const Mat& z, const Mat& a, bool use_target, QReduce reduce, Rng* rng) {
  const auto& nets = use_target ? e.targets : e.heads;
  const Mat in = vstack(z, a);
  if (reduce == QReduce::MinOfTwo) {
    if (rng == nullptr) throw std::invalid_argument("q_value: min-of-two needs an rng");
    const auto [i, j] = pick_two(e.size(), *rng);
    const Vec qi = two_hot_decode(e.grid, infer(nets[i], in)).value;
    const Vec qj = two_hot_decode(e.grid, infer(nets[j], in)).value;
    return qi.cwiseMin(qj);
  }
  Vec sum = Vec::Zero(z.cols());
  for (const auto& h : nets) sum += two_hot_decode(e.grid, infer(h, in)).value;
  return sum / static_cast<double>(nets.size());
}

inline double q_value(const QEnsemble& e, const Vec& z, const Vec& a, bool use_target, QReduce reduce, Rng* rng) {
  return q_value(e, Mat(z), Mat(a), use_target, reduce, rng)[0];
}

/// a = clip(mean + std * eps, -1, 1) with eps drawn column by column.
inline Mat sample_clipped(const GaussianBatch& d, Rng& rng, Mat* noise_out = nullptr) {
  Mat noise(d.dim(), d.size());
  for (Eigen::Index b = 0; b < noise.cols(); ++b)
    for (Eigen::Index i = 0; i < noise.rows(); ++i) noise(i, b) = rng.normal();
  Mat a = (d.mean + d.std.cwiseProduct(noise)).cwiseMax(-1.0).cwiseMin(1.0);
  if (noise_out != nullptr) *noise_out = std::move(noise);
  return a;
}

/// r + gamma * Q_target(z', a~), a~ ~ pi_s(z'). Nothing here is differentiated.
inline Vec td_target_bootstrap(const Vec& r, const Mat& z_next, const GaussianBatch& pi_next,
                               const QEnsemble& e, double gamma, Rng& rng) {
  const Mat a = sample_clipped(pi_next, rng);
  const Vec q = q_value(e, z_next, a, true, QReduce::MinOfTwo, &rng);
  return r + gamma * q;
}

/// r + gamma * (Q~_target(z', a~) - lambda * KL(pi_s(z') || pi_p(z')) / max(1, S_KL)).
/// prior_valid (optional, 0/1 per column) drops the KL term where no prior
/// is available. lambda == 0 reproduces td_target_bootstrap exactly.
inline Vec td_target_klreg(const Vec& r, const Mat& z_next, const GaussianBatch& pi_next,
                           const GaussianBatch& prior_next, const Vec* prior_valid, const QEnsemble& e,
                           double lambda, double kl_divisor, double gamma, Rng& rng) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  const Mat a = sample_clipped(pi_next, rng);
  const Vec q = q_value(e, z_next, a, true, QReduce::MinOfTwo, &rng);
  if (lambda == 0.0) return r + gamma * q;
  Vec klv = kl(pi_next, prior_next);
  if (prior_valid != nullptr) klv = klv.cwiseProduct(*prior_valid);
  return r + gamma * (q - lambda * klv / kl_divisor);
}

struct QLossResult {
  double loss = 0.0;
  GradBundle grads;      // one entry per online head
  std::vector<Mat> dz;   // d loss / d z_t, latent_dim x B
  std::vector<Vec> q_mean;  // decoded mean Q per step (for scale tracking)
};

inline double rho_weight(double rho, int t, int horizon) { return std::pow(rho, t) / horizon; }

/// sum_t rho^t / H * CE(head logits at (z_t, a_t), two_hot(target_t)),
/// averaged over heads and batch. Heads run in train mode (dropout).
inline QLossResult q_loss_on_targets(const QEnsemble& e, std::span<const Mat> z, std::span<const Mat> a,
                                     std::span<const Vec> targets, double rho, Rng& rng) {
  const int horizon = static_cast<int>(z.size());
  if (horizon < 1 || a.size() != z.size() || targets.size() != z.size())
    throw ShapeError("q_loss: per-step inputs must share the horizon");
  const int nh = e.size();
  const int latent = static_cast<int>(z[0].rows());
  QLossResult res;
  for (const auto& h : e.heads) res.grads.nets.push_back(zeros_like(h));
  for (int t = 0; t < horizon; ++t) {
    const Mat in = vstack(z[t], a[t]);
    const Mat tgt = two_hot_encode(e.grid, targets[t]);
    const double batch = static_cast<double>(in.cols());
    const double w = rho_weight(rho, t, horizon) / (batch * nh);
    Mat dz = Mat::Zero(latent, in.cols());
    Vec qsum = Vec::Zero(in.cols());
    for (int h = 0; h < nh; ++h) {
      ForwardResult f = forward(e.heads[h], in, true, &rng);
      Mat g;
      const Vec ce = soft_cross_entropy(f.output, tgt, &g);
      res.loss += w * ce.sum();
      qsum += two_hot_decode(e.grid, f.output).value;
      BackwardResult b = backward(f.tape, w * g);
      accumulate(res.grads.nets[h], b.grads);
      dz += b.input_grad.topRows(latent);
    }
    res.dz.push_back(std::move(dz));
    res.q_mean.push_back(qsum / nh);
  }
  if (!std::isfinite(res.loss)) throw NumericError("q_loss is not finite");
  return res;
}

/// Latent rollouts with stored actions/rewards and next-state latents.
struct ValueBatch {
  std::vector<Mat> z;       // H entries
  std::vector<Mat> a;       // H entries
  std::vector<Vec> r;       // H entries
  std::vector<Mat> z_next;  // H entries
};

/// Bootstrap Q loss; targets use the target heads and pi_s at z_{t+1}.
inline QLossResult q_loss(const QEnsemble& e, const ValueBatch& batch, const GaussianPolicyNet& pi, double gamma,
                          double rho, Rng& rng) {
  std::vector<Vec> targets;
  for (std::size_t t = 0; t < batch.z.size(); ++t)
    targets.push_back(td_target_bootstrap(batch.r[t], batch.z_next[t], gaussian_forward(pi, batch.z_next[t]), e,
                                          gamma, rng));
  return q_loss_on_targets(e, batch.z, batch.a, targets, rho, rng);
}

/// KL-regularized Q loss. prior_next[t] is pi_p at z_next[t]; prior_valid
/// may be empty (all valid) or hold one 0/1 vector per step.
inline QLossResult klreg_q_loss(const QEnsemble& e, const ValueBatch& batch, const GaussianPolicyNet& pi,
                                std::span<const GaussianBatch> prior_next, std::span<const Vec> prior_valid,
                                double lambda, double kl_divisor, double gamma, double rho, Rng& rng) {
  std::vector<Vec> targets;
  for (std::size_t t = 0; t < batch.z.size(); ++t) {
    const Vec* valid = prior_valid.empty() ? nullptr : &prior_valid[t];
    targets.push_back(td_target_klreg(batch.r[t], batch.z_next[t], gaussian_forward(pi, batch.z_next[t]),
                                      prior_next[t], valid, e, lambda, kl_divisor, gamma, rng));
  }
  return q_loss_on_targets(e, batch.z, batch.a, targets, rho, rng);
}

inline void polyak_update(QEnsemble& e, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak tau must be in (0, 1]");
  for (std::size_t i = 0; i < e.heads.size(); ++i) polyak(e.targets[i], e.heads[i], tau);
}

/// Percentile with linear interpolation between order statistics.
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

/// EMA of the P95 - P5 spread of observed loss-term magnitudes. Losses divide
/// by max(1, S), which can only shrink a term.
struct ScaleTracker {
  double value = 1.0;
  double rate = 0.01;

  double divisor() const { return std::max(1.0, value); }

  void update(std::span<const double> observations) {
    if (observations.size() < 2) throw std::invalid_argument("scale update needs at least 2 observations");
    std::vector<double> v(observations.begin(), observations.end());
    const double spread = percentile(v, 95.0) - percentile(v, 5.0);
    value = (1.0 - rate) * value + rate * spread;
  }
};

}  // namespace pompc
