// SPDX-License-Identifier: Apache-2.0
#pragma once

// Analytic continuous-control tasks. Both environments are pure: step maps
// (state, action) to (next state, reward, done) with no hidden state.
//
// Pendulum (theta = 0 is upright):
//   u = 2a, theta_dd = 3g/(2l) sin(theta) + 3/(m l^2) u,
//   theta_d' = clip(theta_d + theta_dd dt, -8, 8), theta' = theta + theta_d' dt,
//   r = -(wrap(theta)^2 + 0.1 theta_d^2 + 0.001 u^2) on the pre-step state.
//   obs = (cos theta, sin theta, theta_d / 8).
// Point mass in [-1, 1]^2, goal at the origin:
//   v' = clip(v + a dt, -2, 2), p' = p + v' dt; hitting a wall clamps p and
//   zeroes that velocity component. r = -|p - goal|^2 - 0.01 |a|^2 on the
//   pre-step state. obs = (p, v / 2, goal).

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pompc/nnet.hpp"
#include "pompc/rng.hpp"

namespace pompc {

class EnvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnvState {
  Vec x;      // physical state
  int t = 0;  // steps taken in this episode
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual std::string name() const = 0;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int episode_length() const { return 200; }
  virtual double dt() const { return 0.05; }
  /// Lowest reward a single step can produce.
  virtual double reward_min() const = 0;
  virtual EnvState reset(std::uint64_t seed) const = 0;
  virtual StepResult step(const EnvState& s, const Vec& action) const = 0;
  virtual Vec observe(const EnvState& s) const = 0;

 protected:
  Vec checked_action(const EnvState& s, const Vec& action) const {
    if (action.size() != action_dim()) throw ShapeError(name() + ": action dimension mismatch");
    if (!action.allFinite()) throw EnvError(name() + ": non-finite action");
    if (!s.x.allFinite()) throw EnvError(name() + ": non-finite state");
    return action.cwiseMax(-1.0).cwiseMin(1.0);
  }
};

inline double wrap_angle(double th) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(th + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  return w - std::numbers::pi;
}

class Pendulum final : public Env {
 public:
  static constexpr double kG = 10.0;
  static constexpr double kM = 1.0;
  static constexpr double kL = 1.0;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kTorqueScale = 2.0;

  std::string name() const override { return "pendulum"; }
  int obs_dim() const override { return 3; }
  int action_dim() const override { return 1; }
  double reward_min() const override {
    const double pi = std::numbers::pi;
    return -(pi * pi + 0.1 * kMaxSpeed * kMaxSpeed + 0.001 * kTorqueScale * kTorqueScale);
  }

  EnvState reset(std::uint64_t seed) const override {
    Rng rng(seed);
    EnvState s;
    s.x.resize(2);
    s.x[0] = rng.uniform(-std::numbers::pi, std::numbers::pi);
    s.x[1] = rng.uniform(-1.0, 1.0);
    return s;
  }

  StepResult step(const EnvState& s, const Vec& action) const override {
    const Vec a = checked_action(s, action);
    const double th = s.x[0];
    const double thd = s.x[1];
    const double u = kTorqueScale * a[0];
    const double wth = wrap_angle(th);
    StepResult out;
    out.reward = -(wth * wth + 0.1 * thd * thd + 0.001 * u * u);
    const double acc = 3.0 * kG / (2.0 * kL) * std::sin(th) + 3.0 / (kM * kL * kL) * u;
    double nthd = thd + acc * dt();
    nthd = std::clamp(nthd, -kMaxSpeed, kMaxSpeed);
    out.state.x.resize(2);
    out.state.x[0] = th + nthd * dt();
    out.state.x[1] = nthd;
    out.state.t = s.t + 1;
    out.done = out.state.t >= episode_length();
    return out;
  }

  Vec observe(const EnvState& s) const override {
    Vec o(3);
    o << std::cos(s.x[0]), std::sin(s.x[0]), s.x[1] / kMaxSpeed;
    return o;
  }

  /// Mechanical energy per unit inertia, conserved by the continuous
  /// zero-torque dynamics: 0.5 theta_d^2 + k cos(theta), k = 3g/(2l).
  static double energy(const EnvState& s) {
    const double k = 3.0 * kG / (2.0 * kL);
    return 0.5 * s.x[1] * s.x[1] + k * std::cos(s.x[0]);
  }

  /// Per-step |dE| bound for zero torque without velocity clipping:
  /// 0.5 k dt^2 (k + theta_d'^2), theta_d' the post-step velocity.
  static double energy_step_bound(double dt, double next_velocity) {
    const double k = 3.0 * kG / (2.0 * kL);
    return 0.5 * k * dt * dt * (k + next_velocity * next_velocity);
  }
};

class PointMass final : public Env {
 public:
  static constexpr double kMaxSpeed = 2.0;

  std::string name() const override { return "pointmass"; }
  int obs_dim() const override { return 6; }
  int action_dim() const override { return 2; }
  double reward_min() const override { return -(8.0 + 0.02); }

  Vec goal() const { return Vec::Zero(2); }

  EnvState reset(std::uint64_t seed) const override {
    Rng rng(seed);
    EnvState s;
    s.x = Vec::Zero(4);
    s.x[0] = rng.uniform(-1.0, 1.0);
    s.x[1] = rng.uniform(-1.0, 1.0);
    return s;
  }

  StepResult step(const EnvState& s, const Vec& action) const override {
    const Vec a = checked_action(s, action);
    StepResult out;
    const Vec p = s.x.head(2);
    out.reward = -(p - goal()).squaredNorm() - 0.01 * a.squaredNorm();
    out.state.x.resize(4);
    for (int i = 0; i < 2; ++i) {
      double v = std::clamp(s.x[2 + i] + a[i] * dt(), -kMaxSpeed, kMaxSpeed);
      double q = s.x[i] + v * dt();
      if (q > 1.0 || q < -1.0) {
        q = std::clamp(q, -1.0, 1.0);
        v = 0.0;
      }
      out.state.x[i] = q;
      out.state.x[2 + i] = v;
    }
    out.state.t = s.t + 1;
    out.done = out.state.t >= episode_length();
    return out;
  }

  Vec observe(const EnvState& s) const override {
    Vec o(6);
    o << s.x[0], s.x[1], s.x[2] / kMaxSpeed, s.x[3] / kMaxSpeed, goal()[0], goal()[1];
    return o;
  }
};

inline std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "pointmass") return std::make_unique<PointMass>();
  throw std::invalid_argument("unknown env.name '" + name + "' (expected pendulum or pointmass)");
}

}  // namespace pompc
