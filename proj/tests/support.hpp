// SPDX-License-Identifier: Apache-2.0
#pragma once

// Helpers shared by the unit tests and the acceptance suite: parameter
// views, random re-initialization and central finite differences.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "pompc/nnet.hpp"
#include "pompc/rng.hpp"

namespace pompc::testing {

/// Flat pointer view over every parameter of a list of networks.
struct ParamView {
  std::vector<double*> p;
  std::vector<std::size_t> net_offset;  // first index of each network

  explicit ParamView(const std::vector<Mlp*>& nets) {
    for (Mlp* n : nets) {
      net_offset.push_back(p.size());
      for (auto& l : n->layers) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) p.push_back(l.weight.data() + i);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) p.push_back(l.bias.data() + i);
      }
    }
    net_offset.push_back(p.size());
  }
  std::size_t size() const { return p.size(); }
};

inline std::vector<double> flatten(const std::vector<Mlp>& nets) {
  std::vector<double> out;
  for (const auto& n : nets)
    for (const auto& l : n.layers) {
      out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
      out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
  return out;
}

/// Overwrites every parameter with U(-scale, scale) so that zero-initialized
/// output layers do not hide gradient paths.
inline void randomize(const std::vector<Mlp*>& nets, Rng& rng, double scale = 0.5) {
  for (Mlp* n : nets)
    for (auto& l : n->layers) {
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = rng.uniform(-scale, scale);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = rng.uniform(-scale, scale);
    }
}

inline double rel_err(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

struct FdReport {
  double max_rel_err = 0.0;
  int checked = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients against central differences of `loss` with
/// step h: along one random direction through all parameters, plus
/// `coords_per_net` random single coordinates of every network. `loss` must
/// be a deterministic function of the parameters.
inline FdReport fd_check(const std::vector<Mlp*>& nets, const std::vector<Mlp>& grads,
                         const std::function<double()>& loss, Rng& pick, int coords_per_net, double h = 1e-5,
                         double floor = 1e-5) {
  ParamView view(nets);
  const std::vector<double> g = flatten(grads);
  if (g.size() != view.size()) throw std::invalid_argument("fd_check: gradient/parameter size mismatch");
  FdReport rep;
  auto record = [&](double a, double n) {
    const double e = rel_err(a, n, floor);
    ++rep.checked;
    if (e >= rep.max_rel_err) {
      rep.max_rel_err = e;
      rep.worst_analytic = a;
      rep.worst_numeric = n;
    }
  };

  std::vector<double> dir(view.size());
  double norm = 0.0;
  for (auto& d : dir) {
    d = pick.normal();
    norm += d * d;
  }
  norm = std::sqrt(norm);
  double analytic = 0.0;
  for (std::size_t i = 0; i < dir.size(); ++i) {
    dir[i] /= norm;
    analytic += dir[i] * g[i];
  }
  for (std::size_t i = 0; i < dir.size(); ++i) *view.p[i] += h * dir[i];
  const double lp = loss();
  for (std::size_t i = 0; i < dir.size(); ++i) *view.p[i] -= 2.0 * h * dir[i];
  const double lm = loss();
  for (std::size_t i = 0; i < dir.size(); ++i) *view.p[i] += h * dir[i];
  record(analytic, (lp - lm) / (2.0 * h));

  for (std::size_t n = 0; n + 1 < view.net_offset.size(); ++n) {
    const auto lo = static_cast<std::int64_t>(view.net_offset[n]);
    const auto hi = static_cast<std::int64_t>(view.net_offset[n + 1]) - 1;
    if (hi < lo) continue;
    for (int k = 0; k < coords_per_net; ++k) {
      const auto i = static_cast<std::size_t>(pick.uniform_int(lo, hi));
      const double orig = *view.p[i];
      *view.p[i] = orig + h;
      const double a = loss();
      *view.p[i] = orig - h;
      const double b = loss();
      *view.p[i] = orig;
      record(g[i], (a - b) / (2.0 * h));
    }
  }
  return rep;
}

inline bool bitwise_equal(const std::vector<Mlp>& a, const std::vector<Mlp>& b) {
  const auto fa = flatten(a), fb = flatten(b);
  if (fa.size() != fb.size()) return false;
  return std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)) == 0;
}

}  // namespace pompc::testing
