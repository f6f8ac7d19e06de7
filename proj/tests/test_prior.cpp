// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pompc/prior.hpp"
#include "support.hpp"

using namespace pompc;
namespace pt = pompc::testing;

namespace {

GaussianPolicyNet prior_net(std::uint64_t seed) {
  Rng rng(seed);
  GaussianPolicyNet p = make_policy_net(4, 2, 16, 2, Activation::Mish, std::log(0.05), std::log(2.0), rng);
  pt::randomize({&p.trunk}, rng, 0.5);
  return p;
}

struct Stats {
  std::vector<Mat> z, mean, std;
};

Stats stats(int H, int B, Rng& rng) {
  Stats s;
  for (int t = 0; t < H; ++t) {
    Mat z(4, B), m(2, B), sd(2, B);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.uniform();
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = rng.uniform(-1.0, 1.0);
      sd.data()[i] = rng.uniform(0.1, 1.5);
    }
    s.z.push_back(z);
    s.mean.push_back(m);
    s.std.push_back(sd);
  }
  return s;
}

}  // namespace

TEST(PriorMode, ParseRoundTrip) {
  for (PriorMode m : {PriorMode::ReverseKl, PriorMode::ForwardKl, PriorMode::ReplayDirect})
    EXPECT_EQ(parse_prior_mode(to_string(m)), m);
  EXPECT_THROW(parse_prior_mode("kl"), std::invalid_argument);
}

TEST(PriorLoss, ZeroWhenPriorMatchesStoredStats) {
  const GaussianPolicyNet p = prior_net(1);
  Rng rng(2);
  Stats s = stats(2, 5, rng);
  for (int t = 0; t < 2; ++t) {
    const GaussianBatch d = prior_forward(p, s.z[t]);
    s.mean[t] = d.mean;
    s.std[t] = d.std;
  }
  for (PriorMode m : {PriorMode::ReverseKl, PriorMode::ForwardKl}) {
    const PriorLossResult r = prior_loss(p, s.z, s.mean, s.std, m, 1.0, 0.5);
    EXPECT_LE(std::abs(r.loss), 1e-14);
    EXPECT_LE(r.grads.global_norm(), 1e-12);
  }
}

TEST(PriorLoss, HorizonOneIsMeanKl) {
  const GaussianPolicyNet p = prior_net(3);
  Rng rng(4);
  const Stats s = stats(1, 6, rng);
  const GaussianBatch d = prior_forward(p, s.z[0]);
  const GaussianBatch stored{s.mean[0], s.std[0]};
  const PriorLossResult rev = prior_loss(p, s.z, s.mean, s.std, PriorMode::ReverseKl, 1.0, 0.5);
  const PriorLossResult fwd = prior_loss(p, s.z, s.mean, s.std, PriorMode::ForwardKl, 1.0, 0.5);
  EXPECT_NEAR(rev.loss, kl(d, stored).mean(), 1e-13);
  EXPECT_NEAR(fwd.loss, kl(stored, d).mean(), 1e-13);
  EXPECT_NE(rev.loss, fwd.loss);
  EXPECT_EQ(rev.kl_observations.size(), 6u);
}

TEST(PriorLoss, DivisorScalesLossAndGradients) {
  const GaussianPolicyNet p = prior_net(5);
  Rng rng(6);
  const Stats s = stats(3, 4, rng);
  const PriorLossResult a = prior_loss(p, s.z, s.mean, s.std, PriorMode::ReverseKl, 1.0, 0.5);
  const PriorLossResult b = prior_loss(p, s.z, s.mean, s.std, PriorMode::ReverseKl, 4.0, 0.5);
  EXPECT_NEAR(b.loss, a.loss / 4.0, 1e-14);
  EXPECT_NEAR(b.grads.global_norm(), a.grads.global_norm() / 4.0, 1e-12);
  EXPECT_EQ(a.kl_observations, b.kl_observations);
}

TEST(PriorLoss, SkipsDegenerateStoredStats) {
  const GaussianPolicyNet p = prior_net(7);
  Rng rng(8);
  Stats s = stats(1, 4, rng);
  const PriorLossResult full = prior_loss(p, s.z, s.mean, s.std, PriorMode::ForwardKl, 1.0, 0.5);
  s.std[0](0, 1) = 0.0;
  s.mean[0](1, 3) = std::numeric_limits<double>::quiet_NaN();
  const PriorLossResult r = prior_loss(p, s.z, s.mean, s.std, PriorMode::ForwardKl, 1.0, 0.5);
  EXPECT_EQ(r.skipped, 2);
  EXPECT_EQ(r.kl_observations.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_NEAR(r.loss, (full.kl_observations[0] + full.kl_observations[2]) / 4.0, 1e-13);
}

TEST(PriorLoss, GradientsMatchFiniteDifferences) {
  for (PriorMode m : {PriorMode::ReverseKl, PriorMode::ForwardKl})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      GaussianPolicyNet p = prior_net(10 + seed);
      Rng rng(20 + seed);
      const Stats s = stats(3, 5, rng);
      const PriorLossResult r = prior_loss(p, s.z, s.mean, s.std, m, 2.0, 0.5);
      auto loss = [&] { return prior_loss(p, s.z, s.mean, s.std, m, 2.0, 0.5).loss; };
      Rng pick(30 + seed);
      EXPECT_LE(pt::fd_check({&p.trunk}, r.grads.nets, loss, pick, 20).max_rel_err, 1e-5);
    }
}

TEST(PriorLoss, RejectsReplayDirectAndMissingStats) {
  const GaussianPolicyNet p = prior_net(40);
  Rng rng(41);
  const Stats s = stats(2, 3, rng);
  EXPECT_THROW(prior_loss(p, s.z, s.mean, s.std, PriorMode::ReplayDirect, 1.0, 0.5), std::invalid_argument);
  const std::vector<Mat> one{s.mean[0]};
  EXPECT_THROW(prior_loss(p, s.z, one, s.std, PriorMode::ReverseKl, 1.0, 0.5), ShapeError);
}
