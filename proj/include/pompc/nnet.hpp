// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal multilayer perceptron with analytic backpropagation, Adam and
// global-norm clipping. Inputs are batched column-wise: a batch of B samples
// of width n is an n x B matrix.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pompc/rng.hpp"

namespace pompc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation { Identity, Tanh, Mish, Relu };

inline Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "mish") return Activation::Mish;
  if (name == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Mish: return "mish";
    case Activation::Relu: return "relu";
  }
  return "identity";
}

namespace detail {

inline double softplus(double x) { return x > 20.0 ? x : std::log1p(std::exp(x)); }

// Mish via one exponential: with e = exp(x) and n = e (e + 2),
// tanh(softplus(x)) = n / (n + 2). Inputs above 20 pass through.
inline Mat activate(Activation a, const Mat& z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Mish: {
      const auto x = z.array();
      const Eigen::ArrayXXd e = x.min(20.0).exp();
      const Eigen::ArrayXXd n = e * (e + 2.0);
      return (x > 20.0).select(x, x * n / (n + 2.0)).matrix();
    }
  }
  return z;
}

/// Elementwise derivative of the activation at pre-activation z.
inline Mat activate_grad(Activation a, const Mat& z) {
  switch (a) {
    case Activation::Identity: return Mat::Ones(z.rows(), z.cols());
    case Activation::Tanh: return (1.0 - z.array().tanh().square()).matrix();
    case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Mish: {
      const auto x = z.array();
      const Eigen::ArrayXXd e = x.min(20.0).exp();
      const Eigen::ArrayXXd n = e * (e + 2.0);
      const Eigen::ArrayXXd t = n / (n + 2.0);
      const Eigen::ArrayXXd sig = e / (1.0 + e);
      return (x > 20.0).select(Eigen::ArrayXXd::Ones(z.rows(), z.cols()), t + x * (1.0 - t * t) * sig).matrix();
    }
  }
  return Mat::Ones(z.rows(), z.cols());
}

}  // namespace detail

struct Layer {
  Mat weight;  // out x in
  Vec bias;    // out
  Activation act = Activation::Identity;
  double dropout = 0.0;  // inverted dropout after the activation, train mode only
};

struct Mlp {
  std::vector<Layer> layers;

  int in_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int out_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }

  std::size_t num_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  void set_zero() {
    for (auto& l : layers) {
      l.weight.setZero();
      l.bias.setZero();
    }
  }

  bool same_shape(const Mlp& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].weight.rows() != o.layers[i].weight.rows() ||
          layers[i].weight.cols() != o.layers[i].weight.cols())
        return false;
    }
    return true;
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }
};

struct MlpSpec {
  std::vector<int> widths;  // [in, hidden..., out]
  Activation hidden = Activation::Mish;
  Activation output = Activation::Identity;
  double first_layer_dropout = 0.0;
  bool zero_output_layer = false;
};

/// Uniform fan-in initialization (+-sqrt(1/fan_in)), zero biases.
inline Mlp make_mlp(const MlpSpec& spec, Rng& rng) {
  if (spec.widths.size() < 2) throw ShapeError("mlp needs at least input and output widths");
  Mlp net;
  const std::size_t n = spec.widths.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    Layer l;
    const int in = spec.widths[i];
    const int out = spec.widths[i + 1];
    const double bound = std::sqrt(1.0 / in);
    l.weight.resize(out, in);
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) l.weight(r, c) = rng.uniform(-bound, bound);
    l.bias = Vec::Zero(out);
    const bool last = (i + 1 == n);
    l.act = last ? spec.output : spec.hidden;
    l.dropout = (i == 0 && !last) ? spec.first_layer_dropout : 0.0;
    if (last && spec.zero_output_layer) l.weight.setZero();
    net.layers.push_back(std::move(l));
  }
  return net;
}

inline Mlp zeros_like(const Mlp& p) {
  Mlp z = p;
  z.set_zero();
  return z;
}

/// Activation cache of one forward pass; sufficient for exact gradients.
struct MlpTape {
  const Mlp* net = nullptr;
  Mat input;
  std::vector<Mat> pre;   // pre-activation per layer
  std::vector<Mat> post;  // output of each layer (after dropout)
  std::vector<Mat> mask;  // dropout scale per layer; empty when not applied
};

struct ForwardResult {
  Mat output;
  MlpTape tape;
};

namespace detail {

inline void check_input(const Mlp& net, const Mat& x) {
  if (net.layers.empty()) throw ShapeError("empty mlp");
  if (x.rows() != net.in_dim())
    throw ShapeError("mlp input width " + std::to_string(x.rows()) + " != " + std::to_string(net.in_dim()));
}

}  // namespace detail

/// Inference pass (no dropout, no tape). Non-finite values propagate instead
/// of throwing so that callers such as the planner can disqualify them.
inline Mat infer(const Mlp& net, const Mat& x) {
  detail::check_input(net, x);
  Mat h = x;
  for (const auto& l : net.layers) {
    Mat z = l.weight * h;
    z.colwise() += l.bias;
    if (l.act != Activation::Identity) z = detail::activate(l.act, z);
    h = std::move(z);
  }
  return h;
}

inline ForwardResult forward(const Mlp& net, const Mat& x, bool train_mode, Rng* rng) {
  detail::check_input(net, x);
  if (!x.allFinite()) throw NumericError("non-finite mlp input");
  ForwardResult res;
  MlpTape& tape = res.tape;
  tape.net = &net;
  tape.input = x;
  tape.pre.reserve(net.layers.size());
  tape.post.reserve(net.layers.size());
  tape.mask.resize(net.layers.size());
  const Mat* h = &tape.input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    Mat z = l.weight * (*h);
    z.colwise() += l.bias;
    Mat a = detail::activate(l.act, z);
    const bool last = (i + 1 == net.layers.size());
    if (train_mode && !last && l.dropout > 0.0) {
      if (rng == nullptr) throw std::invalid_argument("dropout in train mode needs an rng");
      const double keep = 1.0 - l.dropout;
      Mat m(a.rows(), a.cols());
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng->uniform() < keep ? 1.0 / keep : 0.0;
      a = a.cwiseProduct(m);
      tape.mask[i] = std::move(m);
    }
    tape.pre.push_back(std::move(z));
    tape.post.push_back(std::move(a));
    h = &tape.post.back();
  }
  res.output = tape.post.back();
  return res;
}

/// Parameter-shaped collection of gradients over one or more networks.
struct GradBundle {
  std::vector<Mlp> nets;

  double global_norm() const {
    double s = 0.0;
    for (const auto& n : nets)
      for (const auto& l : n.layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (const auto& n : nets)
      if (!n.all_finite()) return false;
    return true;
  }

  void scale(double f) {
    for (auto& n : nets)
      for (auto& l : n.layers) {
        l.weight *= f;
        l.bias *= f;
      }
  }

  void append(GradBundle&& o) {
    for (auto& n : o.nets) nets.push_back(std::move(n));
  }
};

struct BackwardResult {
  Mlp grads;
  Mat input_grad;
};

inline BackwardResult backward(const MlpTape& tape, const Mat& output_grad) {
  if (tape.net == nullptr) throw std::invalid_argument("backward on an empty tape");
  const Mlp& net = *tape.net;
  if (output_grad.rows() != net.out_dim() || output_grad.cols() != tape.input.cols())
    throw ShapeError("output gradient shape does not match tape");
  BackwardResult res;
  res.grads = net;
  Mat g = output_grad;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const Layer& l = net.layers[k];
    if (tape.mask[k].size() != 0) g = g.cwiseProduct(tape.mask[k]);
    if (l.act != Activation::Identity) {
      g = g.cwiseProduct(detail::activate_grad(l.act, tape.pre[k]));
    }
    const Mat& in = (k == 0) ? tape.input : tape.post[k - 1];
    res.grads.layers[k].weight.noalias() = g * in.transpose();
    res.grads.layers[k].bias = g.rowwise().sum();
    Mat gin = l.weight.transpose() * g;
    g = std::move(gin);
  }
  res.input_grad = std::move(g);
  return res;
}

/// In-place accumulate: acc += f * g.
inline void accumulate(Mlp& acc, const Mlp& g, double f = 1.0) {
  for (std::size_t i = 0; i < acc.layers.size(); ++i) {
    acc.layers[i].weight += f * g.layers[i].weight;
    acc.layers[i].bias += f * g.layers[i].bias;
  }
}

struct AdamState {
  std::vector<Mlp> m;
  std::vector<Mlp> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamState make_adam(std::span<Mlp* const> params, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8) {
  AdamState s;
  for (const Mlp* p : params) {
    s.m.push_back(zeros_like(*p));
    s.v.push_back(zeros_like(*p));
  }
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

/// Bias-corrected Adam. Refuses the whole update on non-finite gradients.
inline void adam_step(std::span<Mlp* const> params, AdamState& state, const GradBundle& grads, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam learning rate must be positive");
  if (params.size() != grads.nets.size() || params.size() != state.m.size())
    throw ShapeError("adam: parameter/gradient/state count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads.nets[i]) || !params[i]->same_shape(state.m[i]))
      throw ShapeError("adam: shape mismatch in network " + std::to_string(i));
  }
  if (!grads.all_finite()) throw NumericError("adam: non-finite gradient");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1, b2 = state.beta2, eps = state.eps;
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i]->layers.size(); ++k) {
      update(params[i]->layers[k].weight, state.m[i].layers[k].weight, state.v[i].layers[k].weight,
             grads.nets[i].layers[k].weight);
      update(params[i]->layers[k].bias, state.m[i].layers[k].bias, state.v[i].layers[k].bias,
             grads.nets[i].layers[k].bias);
    }
  }
}

/// Scales the bundle so its global norm is at most max_norm. Returns the
/// norm before clipping.
inline double clip_global_norm(GradBundle& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("max_norm must be positive");
  const double norm = grads.global_norm();
  if (norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

/// target <- tau * online + (1 - tau) * target
inline void polyak(Mlp& target, const Mlp& online, double tau) {
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    target.layers[i].weight = tau * online.layers[i].weight + (1.0 - tau) * target.layers[i].weight;
    target.layers[i].bias = tau * online.layers[i].bias + (1.0 - tau) * target.layers[i].bias;
  }
}

inline Mat vstack(const Mat& top, const Mat& bottom) {
  if (top.cols() != bottom.cols()) throw ShapeError("vstack: column mismatch");
  Mat out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace pompc
