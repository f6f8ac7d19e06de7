// SPDX-License-Identifier: Apache-2.0
#pragma once

// Symlog compression and two-hot discrete regression over a fixed bin grid.

#include <algorithm>
#include <cmath>

#include "pompc/nnet.hpp"

namespace pompc {

inline double symlog(double x) { return std::copysign(std::log1p(std::abs(x)), x); }
inline double symexp(double y) { return std::copysign(std::expm1(std::abs(y)), y); }

/// num_bins equally spaced points on [lo, hi] in symlog space.
struct BinGrid {
  int num_bins = 101;
  double lo = -10.0;
  double hi = 10.0;

  double width() const { return (hi - lo) / (num_bins - 1); }
  double value(int i) const { return lo + i * width(); }

  Vec values() const {
    Vec v(num_bins);
    for (int i = 0; i < num_bins; ++i) v[i] = value(i);
    return v;
  }
};

struct TwoHotTarget {
  Vec weights;
};

/// Mass split linearly between the two bins bracketing symlog(v), after
/// clamping to the grid.
inline TwoHotTarget two_hot_encode(const BinGrid& grid, double v) {
  TwoHotTarget t{Vec::Zero(grid.num_bins)};
  const double y = std::clamp(symlog(v), grid.lo, grid.hi);
  const double pos = (y - grid.lo) / grid.width();
  int i = static_cast<int>(std::floor(pos));
  if (i >= grid.num_bins - 1) {
    t.weights[grid.num_bins - 1] = 1.0;
    return t;
  }
  i = std::max(i, 0);
  const double frac = pos - i;
  t.weights[i] = 1.0 - frac;
  if (frac > 0.0) t.weights[i + 1] = frac;
  return t;
}

/// Column-wise two-hot targets for a batch of scalars (num_bins x B).
inline Mat two_hot_encode(const BinGrid& grid, const Vec& values) {
  Mat out(grid.num_bins, values.size());
  for (Eigen::Index b = 0; b < values.size(); ++b) out.col(b) = two_hot_encode(grid, values[b]).weights;
  return out;
}

namespace detail {

inline Vec softmax(const Vec& logits) {
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

inline Mat softmax_columns(const Mat& logits) {
  Mat out = logits.rowwise() - logits.colwise().maxCoeff();
  out = out.array().exp().matrix();
  out.array().rowwise() /= out.colwise().sum().array();
  return out;
}

inline Mat log_softmax_columns(const Mat& logits) {
  Mat out = logits.rowwise() - logits.colwise().maxCoeff();
  const Eigen::RowVectorXd lse = out.array().exp().colwise().sum().log().matrix();
  out.rowwise() -= lse;
  return out;
}

inline Vec log_softmax(const Vec& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

}  // namespace detail

/// softmax(logits) . grid, mapped back through symexp.
inline double two_hot_decode(const BinGrid& grid, const Vec& logits) {
  if (logits.size() != grid.num_bins) throw ShapeError("two_hot_decode: logits width != num_bins");
  return symexp(detail::softmax(logits).dot(grid.values()));
}

struct DecodedBatch {
  Vec value;  // B
  Mat probs;  // num_bins x B
  Vec y;      // expected symlog value per column
};

inline DecodedBatch two_hot_decode(const BinGrid& grid, const Mat& logits) {
  if (logits.rows() != grid.num_bins) throw ShapeError("two_hot_decode: logits rows != num_bins");
  DecodedBatch d;
  d.probs = detail::softmax_columns(logits);
  d.y = d.probs.transpose() * grid.values();
  d.value = d.y.unaryExpr([](double y) { return symexp(y); });
  return d;
}

/// d value / d logits for each column of a decoded batch.
inline Mat two_hot_decode_grad(const BinGrid& grid, const DecodedBatch& d) {
  const Vec bins = grid.values();
  Mat centered = bins.replicate(1, d.probs.cols());
  centered.rowwise() -= d.y.transpose();
  Mat g = d.probs.cwiseProduct(centered);
  g.array().rowwise() *= d.y.array().abs().exp().transpose();
  return g;
}

/// Cross-entropy of each logit column against a target distribution column.
/// Returns per-column loss and writes softmax - target into grad.
inline Vec soft_cross_entropy(const Mat& logits, const Mat& target, Mat* grad) {
  if (logits.rows() != target.rows() || logits.cols() != target.cols())
    throw ShapeError("soft_cross_entropy: logits/target shape mismatch");
  const Mat ls = detail::log_softmax_columns(logits);
  const Vec loss = -(target.cwiseProduct(ls)).colwise().sum().transpose();
  if (grad != nullptr) *grad = ls.array().exp().matrix() - target;
  return loss;
}

}  // namespace pompc
