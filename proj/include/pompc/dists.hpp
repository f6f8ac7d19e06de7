// SPDX-License-Identifier: Apache-2.0
#pragma once

// Diagonal Gaussian algebra. Standard deviations are stored directly (not as
// log-std); policy heads convert at their boundary.

#include <cmath>
#include <numbers>

#include "pompc/nnet.hpp"

namespace pompc {

struct DiagGaussian {
  Vec mean;
  Vec std;

  Eigen::Index dim() const { return mean.size(); }

  bool valid() const {
    return mean.size() == std.size() && mean.allFinite() && std.allFinite() && (std.array() > 0.0).all();
  }
};

inline constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)

/// Reparameterized sample: mean + std * noise.
inline Vec sample(const DiagGaussian& d, const Vec& noise) {
  if (noise.size() != d.dim()) throw ShapeError("sample: noise width mismatch");
  return d.mean + d.std.cwiseProduct(noise);
}

inline double log_prob(const DiagGaussian& d, const Vec& x) {
  if (x.size() != d.dim()) throw ShapeError("log_prob: dimension mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.dim(); ++i) {
    const double u = (x[i] - d.mean[i]) / d.std[i];
    s += -0.5 * u * u - std::log(d.std[i]) - 0.5 * kLog2Pi;
  }
  return s;
}

inline double entropy(const DiagGaussian& d) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.dim(); ++i) s += 0.5 * (kLog2Pi + 1.0) + std::log(d.std[i]);
  return s;
}

/// KL(p || q), closed form.
inline double kl(const DiagGaussian& p, const DiagGaussian& q) {
  if (p.dim() != q.dim()) throw ShapeError("kl: dimension mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.dim(); ++i) {
    const double dm = p.mean[i] - q.mean[i];
    const double vq = q.std[i] * q.std[i];
    s += std::log(q.std[i] / p.std[i]) + (p.std[i] * p.std[i] + dm * dm) / (2.0 * vq) - 0.5;
  }
  return s;
}

// Column-batched Gaussians: column b of mean/std is one distribution.
struct GaussianBatch {
  Mat mean;  // action_dim x B
  Mat std;   // action_dim x B

  Eigen::Index dim() const { return mean.rows(); }
  Eigen::Index size() const { return mean.cols(); }

  DiagGaussian col(Eigen::Index b) const { return {mean.col(b), std.col(b)}; }
};

/// Per-column KL(p || q).
inline Vec kl(const GaussianBatch& p, const GaussianBatch& q) {
  if (p.dim() != q.dim() || p.size() != q.size()) throw ShapeError("kl: batch shape mismatch");
  const auto dm = (p.mean - q.mean).array();
  const auto vq = q.std.array().square();
  Mat per = (q.std.array() / p.std.array()).log() + (p.std.array().square() + dm.square()) / (2.0 * vq) - 0.5;
  return per.colwise().sum().transpose();
}

inline Vec entropy(const GaussianBatch& d) {
  Mat per = d.std.array().log() + 0.5 * (kLog2Pi + 1.0);
  return per.colwise().sum().transpose();
}

/// Partial derivatives of per-column KL(p || q) w.r.t. every parameter.
struct KlGrad {
  Mat mean_p, std_p, mean_q, std_q;
};

inline KlGrad kl_grad(const GaussianBatch& p, const GaussianBatch& q) {
  const Mat dm = p.mean - q.mean;
  const Mat vq = q.std.array().square();
  KlGrad g;
  g.mean_p = dm.array() / vq.array();
  g.mean_q = -g.mean_p;
  g.std_p = -p.std.array().inverse() + p.std.array() / vq.array();
  g.std_q = q.std.array().inverse() - (p.std.array().square() + dm.array().square()) / (vq.array() * q.std.array());
  return g;
}

}  // namespace pompc
