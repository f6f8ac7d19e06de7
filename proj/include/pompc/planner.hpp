// SPDX-License-Identifier: Apache-2.0
#pragma once

// MPPI over a latent model. Each iteration mixes n_pi trajectories rolled
// out with the sampling policy and M - n_pi Gaussian search trajectories,
// scores them by the H-step return with a bootstrap Q, keeps the top K and
// refits the mean / std by the elite path-integral weights.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pompc/dists.hpp"
#include "pompc/nnet.hpp"
#include "pompc/policy_head.hpp"
#include "pompc/rng.hpp"
#include "pompc/value.hpp"
#include "pompc/worldmodel.hpp"

namespace pompc {

/// Batched latent model the planner optimizes against. Matrices hold one
/// trajectory per column.
template <class M>
concept PlanningModel = requires(const M& m, const Mat& z, const Mat& a) {
  { m.latent_dim() } -> std::convertible_to<int>;
  { m.action_dim() } -> std::convertible_to<int>;
  { m.next(z, a) } -> std::convertible_to<Mat>;
  { m.reward(z, a) } -> std::convertible_to<Vec>;
  { m.value(z, a) } -> std::convertible_to<Vec>;
  { m.policy(z) } -> std::convertible_to<GaussianBatch>;
};

struct PlanConfig {
  int horizon = 3;
  int iterations = 8;
  int population = 512;
  int policy_samples = 24;
  int elites = 64;
  double temperature = 1.0;
  double min_std = 0.05;
  double max_std = 2.0;
  double discount = 0.99;
  bool use_mean = false;      // execute the final mean instead of sampling
  bool common_noise = false;  // reuse the same noise streams every iteration

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("planner horizon must be >= 1");
    if (iterations < 1) throw std::invalid_argument("planner iterations must be >= 1");
    if (policy_samples < 0 || policy_samples >= population)
      throw std::invalid_argument("planner policy_samples must be in [0, population)");
    if (elites < 1 || elites > population) throw std::invalid_argument("planner elites must be in [1, population]");
    if (!(temperature > 0.0)) throw std::invalid_argument("planner temperature must be positive");
    if (!(min_std > 0.0 && min_std <= max_std)) throw std::invalid_argument("planner needs 0 < min_std <= max_std");
  }
};

struct PlanResult {
  Vec action;  // executed first action, inside [-1, 1]
  Mat mean;    // H x action_dim
  Mat std;     // H x action_dim
  bool fallback = false;  // every trajectory was disqualified
  double elite_score_mean = 0.0;
  std::vector<double> best_score;  // best elite score per iteration
};

/// w_i proportional to exp((score_i - max score) / beta), normalized.
inline Vec mppi_weights(const Vec& scores, double beta) {
  if (scores.size() < 1) throw std::invalid_argument("mppi_weights: empty scores");
  if (!(beta > 0.0)) throw std::invalid_argument("mppi_weights: temperature must be positive");
  const double m = scores.maxCoeff();
  Vec w = ((scores.array() - m) / beta).exp();
  return w / w.sum();
}

struct Refit {
  Mat mean;
  Mat std;
};

/// mean <- prev + sum_i w_i eps_i;  std <- sqrt(sum_i w_i eps_i^2 / sum_i w_i),
/// clamped to [min_std, max_std]. Each eps_i is H x action_dim.
inline Refit mppi_refit(const std::vector<Mat>& deviations, const Vec& weights, const Mat& prev_mean, double min_std,
                        double max_std) {
  if (deviations.size() != static_cast<std::size_t>(weights.size()))
    throw ShapeError("mppi_refit: deviation/weight count mismatch");
  Mat shift = Mat::Zero(prev_mean.rows(), prev_mean.cols());
  Mat second = Mat::Zero(prev_mean.rows(), prev_mean.cols());
  for (std::size_t i = 0; i < deviations.size(); ++i) {
    shift += weights[static_cast<Eigen::Index>(i)] * deviations[i];
    second += weights[static_cast<Eigen::Index>(i)] * deviations[i].cwiseProduct(deviations[i]);
  }
  Refit r;
  r.mean = prev_mean + shift;
  r.std = (second / weights.sum()).cwiseSqrt().cwiseMax(min_std).cwiseMin(max_std);
  return r;
}

/// sum_{t<H} gamma^t r(z_t, a_t) + gamma^H Q(z_H, a_H) for one sequence of
/// H + 1 actions (rows). Non-finite results score -inf.
template <PlanningModel M>
double hstep_return(const M& model, const Vec& z0, const Mat& actions, double gamma) {
  const Eigen::Index H = actions.rows() - 1;
  if (H < 1) throw std::invalid_argument("hstep_return needs at least 2 actions (H >= 1)");
  Mat z = z0;
  double g = 0.0;
  double disc = 1.0;
  for (Eigen::Index t = 0; t < H; ++t) {
    const Mat a = actions.row(t).transpose();
    g += disc * model.reward(z, a)[0];
    z = model.next(z, a);
    disc *= gamma;
  }
  g += disc * model.value(z, Mat(actions.row(H).transpose()))[0];
  return std::isfinite(g) ? g : -std::numeric_limits<double>::infinity();
}

/// Indices of the top-k scores, best first, ties broken by lower index.
inline std::vector<int> top_k(const Vec& scores, int k) {
  std::vector<int> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

namespace detail {

inline Mat clip_box(const Mat& a) { return a.cwiseMax(-1.0).cwiseMin(1.0); }

inline Mat normals(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Mat n(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) n(r, c) = rng.normal();
  return n;
}

}  // namespace detail

/// Runs MPPI from latent z0 with the given H x action_dim warm-start mean;
/// std always restarts at max_std. Pure in (inputs, seed): trajectory i of
/// iteration j draws its noise from Rng::derive(seed, j, i) and the executed
/// action from Rng::derive(seed, iterations, 0).
template <PlanningModel M>
PlanResult plan(const M& model, const Vec& z0, const Mat& init_mean, const PlanConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int H = cfg.horizon;
  const int A = model.action_dim();
  const int Mpop = cfg.population;
  const int Np = cfg.policy_samples;
  if (init_mean.rows() != H || init_mean.cols() != A) throw ShapeError("plan: warm start must be H x action_dim");
  if (z0.size() != model.latent_dim()) throw ShapeError("plan: latent width mismatch");

  Mat mean = init_mean;
  Mat std = Mat::Constant(H, A, cfg.max_std);
  PlanResult res;
  const double neg_inf = -std::numeric_limits<double>::infinity();

  for (int j = 0; j < cfg.iterations; ++j) {
    const std::uint64_t stream_iter = cfg.common_noise ? 0 : static_cast<std::uint64_t>(j);
    // noise[i] is action_dim x (H + 1) for policy trajectories, x H for search ones
    std::vector<Mat> noise(static_cast<std::size_t>(Mpop));
    for (int i = 0; i < Mpop; ++i) {
      Rng r = Rng::derive(seed, stream_iter, static_cast<std::uint64_t>(i));
      noise[static_cast<std::size_t>(i)] = detail::normals(r, A, i < Np ? H + 1 : H);
    }

    std::vector<Mat> actions(static_cast<std::size_t>(H + 1), Mat(A, Mpop));
    Mat z = z0.replicate(1, Mpop);
    Vec score = Vec::Zero(Mpop);
    double disc = 1.0;
    for (int t = 0; t < H; ++t) {
      Mat& at = actions[static_cast<std::size_t>(t)];
      if (Np > 0) {
        const GaussianBatch p = model.policy(z.leftCols(Np));
        for (int i = 0; i < Np; ++i)
          at.col(i) = p.mean.col(i) + p.std.col(i).cwiseProduct(noise[static_cast<std::size_t>(i)].col(t));
      }
      for (int i = Np; i < Mpop; ++i)
        at.col(i) = mean.row(t).transpose() + std.row(t).transpose().cwiseProduct(noise[static_cast<std::size_t>(i)].col(t));
      at = detail::clip_box(at);
      score += disc * model.reward(z, at);
      z = model.next(z, at);
      disc *= cfg.discount;
    }
    {
      Mat& ah = actions[static_cast<std::size_t>(H)];
      const GaussianBatch p = model.policy(z);
      ah = p.mean;
      for (int i = 0; i < Np; ++i)
        ah.col(i) += p.std.col(i).cwiseProduct(noise[static_cast<std::size_t>(i)].col(H));
      ah = detail::clip_box(ah);
      score += disc * model.value(z, ah);
    }
    for (int i = 0; i < Mpop; ++i)
      if (!std::isfinite(score[i])) score[i] = neg_inf;

    const std::vector<int> elite = top_k(score, cfg.elites);
    if (score[elite.front()] == neg_inf) {
      const GaussianBatch p = model.policy(Mat(z0));
      res.action = detail::clip_box(p.mean).col(0);
      res.mean = mean;
      res.std = std;
      res.fallback = true;
      return res;
    }
    Vec elite_score(cfg.elites);
    std::vector<Mat> deviations;
    deviations.reserve(elite.size());
    for (int k = 0; k < cfg.elites; ++k) {
      const int i = elite[static_cast<std::size_t>(k)];
      elite_score[k] = score[i];
      Mat dev(H, A);
      for (int t = 0; t < H; ++t) dev.row(t) = actions[static_cast<std::size_t>(t)].col(i).transpose() - mean.row(t);
      deviations.push_back(std::move(dev));
    }
    const Vec w = mppi_weights(elite_score, cfg.temperature);
    Refit r = mppi_refit(deviations, w, mean, cfg.min_std, cfg.max_std);
    mean = std::move(r.mean);
    std = std::move(r.std);
    res.best_score.push_back(elite_score[0]);
    double finite_sum = 0.0;
    int finite_n = 0;
    for (int k = 0; k < cfg.elites; ++k)
      if (std::isfinite(elite_score[k])) {
        finite_sum += elite_score[k];
        ++finite_n;
      }
    res.elite_score_mean = finite_n > 0 ? finite_sum / finite_n : 0.0;
  }

  res.mean = mean;
  res.std = std;
  if (cfg.use_mean) {
    res.action = detail::clip_box(mean.row(0).transpose());
  } else {
    Rng r = Rng::derive(seed, static_cast<std::uint64_t>(cfg.iterations), 0);
    const Mat eps = detail::normals(r, A, 1);
    res.action = detail::clip_box(mean.row(0).transpose() + std.row(0).transpose().cwiseProduct(eps));
  }
  return res;
}

/// Warm start for the next decision step: shift left one step, zero-fill the tail.
inline Mat shift_warm_start(const Mat& mean) {
  Mat out = Mat::Zero(mean.rows(), mean.cols());
  if (mean.rows() > 1) out.topRows(mean.rows() - 1) = mean.bottomRows(mean.rows() - 1);
  return out;
}

/// Learned latent model: world-model dynamics and reward, mean-over-heads
/// bootstrap Q and the sampling policy.
class LatentModel {
 public:
  LatentModel(const WorldModel& wm, const QEnsemble& q, const GaussianPolicyNet& pi) : wm_(wm), q_(q), pi_(pi) {}

  int latent_dim() const { return wm_.dims.latent_dim; }
  int action_dim() const { return wm_.dims.action_dim; }
  Mat next(const Mat& z, const Mat& a) const { return dynamics_step(wm_, z, a); }
  Vec reward(const Mat& z, const Mat& a) const { return reward_predict(wm_, z, a).value; }
  Vec value(const Mat& z, const Mat& a) const { return q_value(q_, z, a, false, QReduce::Mean, nullptr); }
  GaussianBatch policy(const Mat& z) const { return gaussian_forward(pi_, z); }

 private:
  const WorldModel& wm_;
  const QEnsemble& q_;
  const GaussianPolicyNet& pi_;
};

static_assert(PlanningModel<LatentModel>);

}  // namespace pompc
