// SPDX-License-Identifier: Apache-2.0
#pragma once

// Latent world model: encoder with grouped-simplex (SimNorm) latents, latent
// dynamics and a two-hot reward head, trained jointly with the bootstrap Q
// ensemble.

#include <cmath>
#include <vector>

#include "pompc/batch.hpp"
#include "pompc/nnet.hpp"
#include "pompc/policy_head.hpp"
#include "pompc/twohot.hpp"
#include "pompc/value.hpp"

namespace pompc {

/// Per-group softmax over contiguous groups of `group` rows. Columns are
/// contiguous, so every group of every column is one column of a
/// group x (rows / group * cols) view.
inline Mat simnorm(const Mat& x, int group) {
  if (group <= 0 || x.rows() % group != 0) throw ShapeError("simnorm: latent width not divisible by group size");
  Mat out = x;
  Eigen::Map<Mat> v(out.data(), group, out.size() / group);
  v.rowwise() -= v.colwise().maxCoeff();
  v = v.array().exp().matrix();
  v.array().rowwise() /= v.colwise().sum().array();
  return out;
}

/// Vector-Jacobian product of simnorm given its output s.
inline Mat simnorm_backward(const Mat& s, const Mat& g, int group) {
  if (s.rows() != g.rows() || s.cols() != g.cols()) throw ShapeError("simnorm_backward: shape mismatch");
  Mat out(s.rows(), s.cols());
  const Eigen::Map<const Mat> sv(s.data(), group, s.size() / group);
  const Eigen::Map<const Mat> gv(g.data(), group, g.size() / group);
  Eigen::Map<Mat> ov(out.data(), group, out.size() / group);
  const Eigen::RowVectorXd dot = sv.cwiseProduct(gv).colwise().sum();
  ov = gv;
  ov.rowwise() -= dot;
  ov = sv.cwiseProduct(ov);
  return out;
}

struct ModelDims {
  int obs_dim = 0;
  int action_dim = 0;
  int latent_dim = 512;
  int simnorm_dim = 8;
  int enc_dim = 256;
  int num_enc_layers = 2;
  int mlp_dim = 512;
  int num_q = 5;
  BinGrid grid{};
  Activation activation = Activation::Mish;
  double dropout = 0.01;
};

struct WorldModel {
  ModelDims dims;
  Mlp encoder;
  Mlp dynamics;
  Mlp reward;
  Mlp target_encoder;  // EMA copy of encoder
};

inline WorldModel make_world_model(const ModelDims& d, Rng& rng) {
  if (d.latent_dim % d.simnorm_dim != 0) throw ShapeError("latent_dim must be a multiple of simnorm_dim");
  WorldModel wm;
  wm.dims = d;
  MlpSpec enc;
  enc.widths.push_back(d.obs_dim);
  for (int i = 0; i < std::max(d.num_enc_layers - 1, 1); ++i) enc.widths.push_back(d.enc_dim);
  enc.widths.push_back(d.latent_dim);
  enc.hidden = d.activation;
  wm.encoder = make_mlp(enc, rng);

  MlpSpec dyn;
  dyn.widths = {d.latent_dim + d.action_dim, d.mlp_dim, d.mlp_dim, d.latent_dim};
  dyn.hidden = d.activation;
  wm.dynamics = make_mlp(dyn, rng);

  MlpSpec rew;
  rew.widths = {d.latent_dim + d.action_dim, d.mlp_dim, d.mlp_dim, d.grid.num_bins};
  rew.hidden = d.activation;
  rew.zero_output_layer = true;
  wm.reward = make_mlp(rew, rng);

  wm.target_encoder = wm.encoder;
  return wm;
}

/// Q head layout matching the world model (dropout on the first hidden layer).
inline MlpSpec q_head_spec(const ModelDims& d) {
  MlpSpec q;
  q.widths = {d.latent_dim + d.action_dim, d.mlp_dim, d.mlp_dim, d.grid.num_bins};
  q.hidden = d.activation;
  q.first_layer_dropout = d.dropout;
  q.zero_output_layer = true;
  return q;
}

inline Mat encode(const WorldModel& wm, const Mat& obs) {
  if (obs.rows() != wm.dims.obs_dim) throw ShapeError("encode: observation width mismatch");
  return simnorm(infer(wm.encoder, obs), wm.dims.simnorm_dim);
}

inline Mat encode_target(const WorldModel& wm, const Mat& obs) {
  if (obs.rows() != wm.dims.obs_dim) throw ShapeError("encode: observation width mismatch");
  return simnorm(infer(wm.target_encoder, obs), wm.dims.simnorm_dim);
}

inline Mat dynamics_step(const WorldModel& wm, const Mat& z, const Mat& a) {
  if (z.rows() != wm.dims.latent_dim || a.rows() != wm.dims.action_dim)
    throw ShapeError("dynamics_step: input shape mismatch");
  return simnorm(infer(wm.dynamics, vstack(z, a)), wm.dims.simnorm_dim);
}

struct RewardPrediction {
  Mat logits;
  Vec value;
};

inline RewardPrediction reward_predict(const WorldModel& wm, const Mat& z, const Mat& a) {
  if (z.rows() != wm.dims.latent_dim || a.rows() != wm.dims.action_dim)
    throw ShapeError("reward_predict: input shape mismatch");
  RewardPrediction p;
  p.logits = infer(wm.reward, vstack(z, a));
  p.value = two_hot_decode(wm.dims.grid, p.logits).value;
  return p;
}

struct WorldModelLossConfig {
  double rho = 0.5;
  double consistency_coef = 20.0;
  double reward_coef = 0.1;
  double value_coef = 0.1;
  double discount = 0.99;
};

struct WorldModelLossResult {
  double total = 0.0;
  double consistency = 0.0;  // rho-weighted, before the coefficient
  double reward = 0.0;
  double value = 0.0;
  GradBundle grads;                // encoder, dynamics, reward, then each Q head
  std::vector<Mat> latents;        // detached rollout latents z_0 .. z_{H-1}
  std::vector<Mat> next_latents;   // target-encoded s_{t+1}, t = 0 .. H-1
  std::vector<Vec> td_targets;
  std::vector<Vec> q_mean;
};

/// Joint world-model + bootstrap-Q loss:
///   sum_t rho^t / H [ c_cons * |z^_{t+1} - sg(enc_target(s_{t+1}))|^2 / latent_dim
///                     + c_rew * CE(reward logits, two_hot(r_t))
///                     + c_val * CE(Q logits, two_hot(td target)) ]
/// with z^ rolled through the dynamics from z^_0 = enc(s_0), averaged over the
/// batch. Gradients flow through the whole latent rollout.
inline WorldModelLossResult world_model_loss(const WorldModel& wm, const QEnsemble& q, const GaussianPolicyNet& pi,
                                             const SliceBatch& batch, const WorldModelLossConfig& cfg, Rng& rng) {
  const int H = batch.horizon;
  const int L = wm.dims.latent_dim;
  const int G = wm.dims.simnorm_dim;
  const double B = static_cast<double>(batch.size);
  if (H < 1 || static_cast<int>(batch.obs.size()) != H + 1) throw ShapeError("world_model_loss: malformed batch");
  WorldModelLossResult res;

  for (int t = 0; t < H; ++t) {
    res.next_latents.push_back(encode_target(wm, batch.obs[t + 1]));
    res.td_targets.push_back(td_target_bootstrap(batch.reward[t], res.next_latents[t],
                                                 gaussian_forward(pi, res.next_latents[t]), q, cfg.discount, rng));
  }

  ForwardResult enc = forward(wm.encoder, batch.obs[0], true, &rng);
  std::vector<Mat> z;  // z_0 .. z_H
  z.push_back(simnorm(enc.output, G));
  std::vector<ForwardResult> dyn_f, rew_f;
  std::vector<Mat> rew_grad, cons_grad;
  for (int t = 0; t < H; ++t) {
    const double w = rho_weight(cfg.rho, t, H);
    const Mat in = vstack(z[t], batch.action[t]);
    rew_f.push_back(forward(wm.reward, in, true, &rng));
    Mat g;
    const Vec ce = soft_cross_entropy(rew_f.back().output, two_hot_encode(wm.dims.grid, batch.reward[t]), &g);
    res.reward += w * ce.sum() / B;
    rew_grad.push_back((cfg.reward_coef * w / B) * g);

    dyn_f.push_back(forward(wm.dynamics, in, true, &rng));
    z.push_back(simnorm(dyn_f.back().output, G));
    const Mat diff = z[t + 1] - res.next_latents[t];
    res.consistency += w * diff.squaredNorm() / (L * B);
    cons_grad.push_back((cfg.consistency_coef * w * 2.0 / (L * B)) * diff);
  }

  res.latents.assign(z.begin(), z.begin() + H);
  QLossResult ql = q_loss_on_targets(q, res.latents, batch.action, res.td_targets, cfg.rho, rng);
  res.value = ql.loss;
  res.q_mean = ql.q_mean;
  res.total = cfg.consistency_coef * res.consistency + cfg.reward_coef * res.reward + cfg.value_coef * res.value;
  if (!std::isfinite(res.total)) throw NumericError("world model loss is not finite");

  Mlp g_enc = zeros_like(wm.encoder), g_dyn = zeros_like(wm.dynamics), g_rew = zeros_like(wm.reward);
  Mat dz_next = Mat::Zero(L, batch.size);  // d loss / d z_{t+1} from later steps
  for (int t = H - 1; t >= 0; --t) {
    const Mat dz_out = dz_next + cons_grad[t];
    BackwardResult bd = backward(dyn_f[t].tape, simnorm_backward(z[t + 1], dz_out, G));
    accumulate(g_dyn, bd.grads);
    BackwardResult br = backward(rew_f[t].tape, rew_grad[t]);
    accumulate(g_rew, br.grads);
    dz_next = bd.input_grad.topRows(L) + br.input_grad.topRows(L) + cfg.value_coef * ql.dz[t];
  }
  BackwardResult be = backward(enc.tape, simnorm_backward(z[0], dz_next, G));
  accumulate(g_enc, be.grads);

  res.grads.nets.push_back(std::move(g_enc));
  res.grads.nets.push_back(std::move(g_dyn));
  res.grads.nets.push_back(std::move(g_rew));
  for (auto& h : ql.grads.nets) {
    GradBundle tmp;
    tmp.nets.push_back(std::move(h));
    tmp.scale(cfg.value_coef);
    res.grads.nets.push_back(std::move(tmp.nets.front()));
  }
  return res;
}

}  // namespace pompc
