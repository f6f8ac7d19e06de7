// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pompc/envs.hpp"

using namespace pompc;

namespace {

EnvState at(double th, double thd) {
  EnvState s;
  s.x = (Vec(2) << th, thd).finished();
  return s;
}

const Vec kZero1 = Vec::Zero(1);

}  // namespace

TEST(WrapAngle, Range) {
  EXPECT_NEAR(wrap_angle(0.0), 0.0, 1e-15);
  EXPECT_NEAR(wrap_angle(2 * std::numbers::pi + 0.3), 0.3, 1e-14);
  EXPECT_NEAR(wrap_angle(-2 * std::numbers::pi - 0.3), -0.3, 1e-14);
  for (double x = -20; x < 20; x += 0.37) {
    const double w = wrap_angle(x);
    EXPECT_GE(w, -std::numbers::pi);
    EXPECT_LT(w, std::numbers::pi);
    EXPECT_NEAR(std::cos(w), std::cos(x), 1e-12);
  }
}

TEST(Pendulum, FixedPoints) {
  const Pendulum p;
  for (double th : {0.0, std::numbers::pi}) {
    const StepResult r = p.step(at(th, 0.0), kZero1);
    EXPECT_NEAR(r.state.x[0], th, 1e-15);
    EXPECT_NEAR(r.state.x[1], 0.0, 1e-14);
  }
  EXPECT_EQ(p.step(at(0.0, 0.0), kZero1).reward, 0.0);
}

TEST(Pendulum, MatchesSemiImplicitEulerOracle) {
  const Pendulum p;
  const double th = 0.7, thd = -1.3, a = 0.4;
  const double u = 2 * a;
  const double acc = 15.0 * std::sin(th) + 3.0 * u;
  const double nthd = thd + 0.05 * acc;
  const StepResult r = p.step(at(th, thd), Vec::Constant(1, a));
  EXPECT_NEAR(r.state.x[1], nthd, 1e-15);
  EXPECT_NEAR(r.state.x[0], th + 0.05 * nthd, 1e-15);
  EXPECT_NEAR(r.reward, -(th * th + 0.1 * thd * thd + 0.001 * u * u), 1e-15);
  EXPECT_EQ(r.state.t, 1);
}

TEST(Pendulum, ClipsActionAndVelocity) {
  const Pendulum p;
  EXPECT_EQ(p.step(at(0.3, 0.2), Vec::Constant(1, 5.0)).state.x, p.step(at(0.3, 0.2), Vec::Constant(1, 1.0)).state.x);
  EXPECT_EQ(p.step(at(1.5, 7.9), Vec::Constant(1, 1.0)).state.x[1], 8.0);
  EXPECT_THROW(p.step(at(0, 0), Vec::Zero(2)), ShapeError);
  EXPECT_THROW(p.step(at(0, 0), Vec::Constant(1, std::nan(""))), EnvError);
}

TEST(Pendulum, RewardBoundsAndEpisodeLength) {
  const Pendulum p;
  EnvState s = p.reset(3);
  Rng rng(4);
  int steps = 0;
  bool done = false;
  while (!done) {
    const StepResult r = p.step(s, Vec::Constant(1, rng.uniform(-1.0, 1.0)));
    EXPECT_LE(r.reward, 0.0);
    EXPECT_GE(r.reward, p.reward_min());
    s = r.state;
    done = r.done;
    ++steps;
  }
  EXPECT_EQ(steps, 200);
}

TEST(Pendulum, ZeroTorqueEnergyDrift) {
  const Pendulum p;
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    EnvState s = at(rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0));
    for (int k = 0; k < 50; ++k) {
      const StepResult r = p.step(s, kZero1);
      if (std::abs(r.state.x[1]) >= Pendulum::kMaxSpeed) break;
      EXPECT_LE(std::abs(Pendulum::energy(r.state) - Pendulum::energy(s)),
                Pendulum::energy_step_bound(p.dt(), r.state.x[1]) + 1e-12);
      s = r.state;
    }
  }
}

TEST(Pendulum, ObservationAndReset) {
  const Pendulum p;
  const Vec o = p.observe(at(std::numbers::pi / 2, 4.0));
  EXPECT_NEAR(o[0], 0.0, 1e-15);
  EXPECT_NEAR(o[1], 1.0, 1e-15);
  EXPECT_EQ(o[2], 0.5);
  EXPECT_EQ(p.reset(9).x, p.reset(9).x);
  EXPECT_NE(p.reset(9).x, p.reset(10).x);
  EXPECT_EQ(p.reset(9).t, 0);
}

TEST(PointMass, DynamicsAndWalls) {
  const PointMass m;
  EnvState s;
  s.x = (Vec(4) << 0.2, -0.4, 0.5, 0.0).finished();
  const StepResult r = m.step(s, (Vec(2) << 1.0, -1.0).finished());
  EXPECT_NEAR(r.state.x[2], 0.55, 1e-15);
  EXPECT_NEAR(r.state.x[0], 0.2 + 0.05 * 0.55, 1e-15);
  EXPECT_NEAR(r.state.x[3], -0.05, 1e-15);
  EXPECT_NEAR(r.reward, -(0.04 + 0.16) - 0.01 * 2.0, 1e-15);

  s.x = (Vec(4) << 0.99, 0.0, 1.0, 0.0).finished();
  const StepResult w = m.step(s, Vec::Zero(2));
  EXPECT_EQ(w.state.x[0], 1.0);
  EXPECT_EQ(w.state.x[2], 0.0);

  EnvState g;
  g.x = Vec::Zero(4);
  const StepResult at_goal = m.step(g, Vec::Zero(2));
  EXPECT_EQ(at_goal.state.x, g.x);
  EXPECT_EQ(at_goal.reward, 0.0);
  EXPECT_EQ(m.observe(g).size(), 6);
}

TEST(MakeEnv, Names) {
  EXPECT_EQ(make_env("pendulum")->name(), "pendulum");
  EXPECT_EQ(make_env("pointmass")->action_dim(), 2);
  EXPECT_THROW(make_env("cartpole"), std::invalid_argument);
}
