// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "pompc/rng.hpp"
#include "pompc/twohot.hpp"

using namespace pompc;

TEST(Symlog, KnownValues) {
  EXPECT_EQ(symlog(0.0), 0.0);
  EXPECT_NEAR(symlog(std::exp(1.0) - 1.0), 1.0, 1e-15);
  EXPECT_NEAR(symexp(1.0), std::exp(1.0) - 1.0, 1e-15);
  EXPECT_NEAR(symlog(-3.0), -std::log(4.0), 1e-15);
}

TEST(Symlog, RoundTrip) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform(-1e4, 1e4);
    // Absolute 1e-12 is below double resolution at |x| ~ 1e4, so the bound
    // is relative to max(1, |x|).
    EXPECT_LE(std::abs(symexp(symlog(x)) - x) / std::max(1.0, std::abs(x)), 1e-12);
  }
}

TEST(Encode, GridPointAndMidpoint) {
  const BinGrid g;
  const Vec w0 = two_hot_encode(g, 0.0).weights;
  EXPECT_EQ(w0[50], 1.0);
  EXPECT_EQ(w0.sum(), 1.0);
  const double mid = symexp(0.1);  // halfway between bins 50 (0.0) and 51 (0.2)
  const Vec wm = two_hot_encode(g, mid).weights;
  EXPECT_NEAR(wm[50], 0.5, 1e-12);
  EXPECT_NEAR(wm[51], 0.5, 1e-12);
}

TEST(Encode, LinearInterpolation) {
  const BinGrid g;
  const Vec w = two_hot_encode(g, 3.0).weights;
  const double y = std::log(4.0);           // 1.3862944
  const double frac = (y - 1.2) / 0.2;      // position past bin 56 (value 1.2)
  EXPECT_NEAR(w[56], 1.0 - frac, 1e-12);
  EXPECT_NEAR(w[57], frac, 1e-12);
  EXPECT_NEAR(w[56], 0.0685, 1e-4);
}

TEST(Encode, InvariantsOverRandomValues) {
  const BinGrid g;
  Rng rng(2);
  for (int i = 0; i < 5000; ++i) {
    const double v = symexp(rng.uniform(-12.0, 12.0));  // includes clamped values
    const Vec w = two_hot_encode(g, v).weights;
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
    int nz = 0, first = -1;
    for (int b = 0; b < g.num_bins; ++b)
      if (w[b] != 0.0) {
        if (first < 0) first = b;
        ++nz;
        EXPECT_GT(w[b], 0.0);
      }
    EXPECT_LE(nz, 2);
    if (nz == 2) {
      EXPECT_NE(w[first + 1], 0.0);
    }
  }
  EXPECT_EQ(two_hot_encode(g, 1e9).weights[100], 1.0);
  EXPECT_EQ(two_hot_encode(g, -1e9).weights[0], 1.0);
}

TEST(Decode, TrivialCases) {
  const BinGrid g;
  Vec onehot = Vec::Constant(g.num_bins, -1e9);
  onehot[50] = 0.0;
  EXPECT_NEAR(two_hot_decode(g, onehot), 0.0, 1e-12);  // lo + 50 w is not exactly 0
  EXPECT_NEAR(two_hot_decode(g, Vec(Vec::Zero(g.num_bins))), 0.0, 1e-12);
  EXPECT_THROW(two_hot_decode(g, Vec(Vec::Zero(5))), ShapeError);
}

TEST(Decode, RoundTripWithSmoothedLogits) {
  const BinGrid g;
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double v = symexp(rng.uniform(-10.0, 10.0));
    const Vec logits = (two_hot_encode(g, v).weights.array() + 1e-300).log();
    EXPECT_LE(std::abs(two_hot_decode(g, logits) - v), 1e-6);
  }
}

TEST(Decode, BatchMatchesColumns) {
  const BinGrid g;
  Rng rng(4);
  Mat logits(g.num_bins, 5);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
  const DecodedBatch d = two_hot_decode(g, logits);
  for (int b = 0; b < 5; ++b) EXPECT_NEAR(d.value[b], two_hot_decode(g, Vec(logits.col(b))), 1e-12);
}

TEST(Decode, GradientMatchesFiniteDifferences) {
  const BinGrid g;
  Rng rng(5);
  Mat logits(g.num_bins, 3);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = 0.3 * rng.normal();
  logits(60, 0) += 4.0;
  logits(20, 1) += 3.0;
  const Mat grad = two_hot_decode_grad(g, two_hot_decode(g, logits));
  for (int b = 0; b < 3; ++b)
    for (int k : {0, 20, 50, 60, 100}) {
      Mat p = logits, m = logits;
      p(k, b) += 1e-6;
      m(k, b) -= 1e-6;
      const double fd = (two_hot_decode(g, p).value[b] - two_hot_decode(g, m).value[b]) / 2e-6;
      EXPECT_NEAR(grad(k, b), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(CrossEntropy, OptimumAtTargetLogits) {
  const BinGrid g;
  const Mat target = two_hot_encode(g, (Vec(2) << 2.5, -0.3).finished());
  const Mat logits = (target.array() + 1e-300).log();
  Mat grad;
  const Vec ce = soft_cross_entropy(logits, target, &grad);
  for (int b = 0; b < 2; ++b) {
    double h = 0.0;  // entropy of the target: the floor
    for (int k = 0; k < g.num_bins; ++k)
      if (target(k, b) > 0) h -= target(k, b) * std::log(target(k, b));
    EXPECT_NEAR(ce[b], h, 1e-12);
  }
  EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(soft_cross_entropy(logits, Mat::Zero(3, 2), nullptr), ShapeError);
}
