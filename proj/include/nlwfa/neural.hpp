// neural.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Small fully connected networks: tanh/identity layers, squared-error
// backpropagation, and mini-batch Adamax training.
//
// Inputs are row vectors and a layer computes act(x^T W + b), so a batch is a
// matrix with one example per row.

#ifndef NLWFA_NEURAL_HPP_
#define NLWFA_NEURAL_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlwfa/common.hpp"

namespace nlwfa {

enum class Activation { identity, tanh };

inline const char* to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + s + "'");
}

struct LayerSpec {
  int in_dim = 1;
  int out_dim = 1;
  Activation activation = Activation::tanh;
};

struct Layer {
  Matrix weights;     // in_dim x out_dim
  RowVector bias;     // out_dim
  Activation activation = Activation::tanh;

  int in_dim() const { return static_cast<int>(weights.rows()); }
  int out_dim() const { return static_cast<int>(weights.cols()); }
};

/// Cached activations of a batch forward pass. post[0] is the input batch and
/// post[l + 1] the output of layer l.
struct ForwardCache {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
  const Matrix& output() const { return post.back(); }
};

class Mlp {
 public:
  Mlp() = default;

  /// Weights uniform on [-sqrt(6 / (in + out)), +sqrt(6 / (in + out))], biases zero.
  Mlp(const std::vector<LayerSpec>& specs, Rng& rng, bool use_bias = true) : use_bias_(use_bias) {
    if (specs.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t l = 0; l < specs.size(); ++l) {
      const LayerSpec& s = specs[l];
      if (s.in_dim < 1 || s.out_dim < 1) throw ConfigError("layer dimensions must be positive");
      if (l > 0 && specs[l - 1].out_dim != s.in_dim) throw ConfigError("layer dimensions do not chain");
      const double r = std::sqrt(6.0 / (s.in_dim + s.out_dim));
      Layer layer;
      layer.weights.resize(s.in_dim, s.out_dim);
      for (int i = 0; i < s.in_dim; ++i) {
        for (int j = 0; j < s.out_dim; ++j) layer.weights(i, j) = rng.uniform(-r, r);
      }
      layer.bias = RowVector::Zero(s.out_dim);
      layer.activation = s.activation;
      layers_.push_back(std::move(layer));
    }
  }

  Mlp(std::vector<Layer> layers, bool use_bias) : layers_(std::move(layers)), use_bias_(use_bias) {
    if (layers_.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      if (layer.bias.size() != layer.weights.cols()) throw ConfigError("bias length mismatch");
      if (l > 0 && layers_[l - 1].out_dim() != layer.in_dim()) throw ConfigError("layer dimensions do not chain");
    }
  }

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  bool use_bias() const { return use_bias_; }
  int in_dim() const { return layers_.front().in_dim(); }
  int out_dim() const { return layers_.back().out_dim(); }

  /// Layers [begin, end) as a standalone network.
  Mlp slice(std::size_t begin, std::size_t end) const {
    return Mlp(std::vector<Layer>(layers_.begin() + begin, layers_.begin() + end), use_bias_);
  }

  ForwardCache forward_batch(const Matrix& inputs) const {
    if (inputs.cols() != in_dim()) throw ConfigError("input dimension mismatch");
    ForwardCache cache;
    cache.post.reserve(layers_.size() + 1);
    cache.pre.reserve(layers_.size());
    cache.post.push_back(inputs);
    for (const Layer& layer : layers_) {
      Matrix z = cache.post.back() * layer.weights;
      z.rowwise() += layer.bias;
      Matrix a = layer.activation == Activation::tanh ? Matrix(z.array().tanh()) : z;
      cache.pre.push_back(std::move(z));
      cache.post.push_back(std::move(a));
    }
    return cache;
  }

  Matrix apply(const Matrix& inputs) const {
    Matrix x = inputs;
    if (x.cols() != in_dim()) throw ConfigError("input dimension mismatch");
    for (const Layer& layer : layers_) {
      Matrix z = x * layer.weights;
      z.rowwise() += layer.bias;
      x = layer.activation == Activation::tanh ? Matrix(z.array().tanh()) : z;
    }
    return x;
  }

  RowVector operator()(const RowVector& x) const { return apply(x); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }

  /// Weights then biases of each layer, weights column-major.
  Vector parameters() const {
    Vector p(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index at = 0;
    for (const Layer& l : layers_) {
      p.segment(at, l.weights.size()) = l.weights.reshaped();
      at += l.weights.size();
      p.segment(at, l.bias.size()) = l.bias.transpose();
      at += l.bias.size();
    }
    return p;
  }

  void set_parameters(const Vector& p) {
    if (p.size() != static_cast<Eigen::Index>(parameter_count())) throw ConfigError("parameter count mismatch");
    Eigen::Index at = 0;
    for (Layer& l : layers_) {
      l.weights.reshaped() = p.segment(at, l.weights.size());
      at += l.weights.size();
      l.bias = p.segment(at, l.bias.size()).transpose();
      at += l.bias.size();
    }
  }

 private:
  std::vector<Layer> layers_;
  bool use_bias_ = true;
};

/// Output of a single example plus the per-layer caches.
inline ForwardCache forward(const Mlp& net, const RowVector& x) { return net.forward_batch(x); }

/// 0.5 * mean over rows of the squared l2 distance.
inline double squared_error_loss(const Matrix& outputs, const Matrix& targets) {
  if (outputs.rows() == 0) return 0.0;
  return 0.5 * (outputs - targets).squaredNorm() / static_cast<double>(outputs.rows());
}

/// Gradient of the loss with respect to the flattened parameters (same layout
/// as Mlp::parameters()).
struct Gradient {
  Vector flat;
  double loss = 0.0;
};

inline Gradient backprop(const Mlp& net, const Matrix& inputs, const Matrix& targets) {
  if (inputs.rows() != targets.rows()) throw ConfigError("batch size mismatch");
  if (targets.cols() != net.out_dim()) throw ConfigError("target dimension mismatch");
  const ForwardCache cache = net.forward_batch(inputs);
  const auto& layers = net.layers();
  const double n = static_cast<double>(std::max<Eigen::Index>(inputs.rows(), 1));

  Gradient g;
  g.loss = squared_error_loss(cache.output(), targets);
  g.flat.resize(static_cast<Eigen::Index>(net.parameter_count()));

  std::vector<Eigen::Index> offsets(layers.size());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offsets[l] = at;
    at += layers[l].weights.size() + layers[l].bias.size();
  }

  Matrix delta = (cache.output() - targets) / n;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    if (layer.activation == Activation::tanh) {
      delta.array() *= 1.0 - cache.post[l + 1].array().square();
    }
    const Matrix dw = cache.post[l].transpose() * delta;
    g.flat.segment(offsets[l], dw.size()) = dw.reshaped();
    if (net.use_bias()) {
      g.flat.segment(offsets[l] + dw.size(), layer.bias.size()) = delta.colwise().sum().transpose();
    } else {
      g.flat.segment(offsets[l] + dw.size(), layer.bias.size()).setZero();
    }
    if (l > 0) delta = delta * layer.weights.transpose();
  }
  return g;
}

struct AdamaxState {
  long t = 0;
  Vector m;
  Vector u;
  double alpha = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamaxState() = default;
  AdamaxState(Eigen::Index n, double learning_rate)
      : m(Vector::Zero(n)), u(Vector::Zero(n)), alpha(learning_rate) {}
};

/// One Adamax update:
///   m <- b1 m + (1 - b1) g,  u <- max(b2 u, |g|),
///   theta <- theta - alpha / (1 - b1^t) * m / u.
/// u is zero only where every gradient so far was zero, and then m is zero
/// too; eps replaces u there instead of being added everywhere, so the first
/// step is exactly alpha * sign(g) for any nonzero g.
inline void adamax_step(AdamaxState& state, Eigen::Ref<Vector> params, const Vector& grads) {
  if (params.size() != grads.size()) throw ConfigError("gradient size mismatch");
  if (state.m.size() != params.size()) {
    state.m = Vector::Zero(params.size());
    state.u = Vector::Zero(params.size());
  }
  ++state.t;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.u = (state.beta2 * state.u).cwiseMax(grads.cwiseAbs());
  const double step = state.alpha / (1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
  const Eigen::ArrayXd denom = (state.u.array() > 0.0).select(state.u.array(), state.eps);
  params.array() -= step * state.m.array() / denom;
}

struct TrainConfig {
  int epochs = 500;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double learning_rate = 0.002;
  bool shuffle = true;
  std::optional<int> early_stop_patience = 50;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  }
};

struct TrainResult {
  Mlp net;
  /// Full-data loss before training (entry 0) and after each epoch.
  std::vector<double> loss_history;
  int best_epoch = 0;
  double best_loss = 0.0;
};

/// Mini-batch Adamax on the squared-error loss. Returns the parameters with the
/// lowest full-data loss seen. Stops early when that loss has not improved for
/// `early_stop_patience` epochs.
inline TrainResult train(Mlp net, const Matrix& inputs, const Matrix& targets, const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.rows() == 0) throw ConfigError("training data is empty");
  if (inputs.rows() != targets.rows()) throw ConfigError("inputs and targets differ in length");

  Rng rng(cfg.seed);
  const Eigen::Index n = inputs.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  AdamaxState opt(static_cast<Eigen::Index>(net.parameter_count()), cfg.learning_rate);
  Vector params = net.parameters();

  TrainResult result;
  auto full_loss = [&](int epoch) {
    const double loss = squared_error_loss(net.apply(inputs), targets);
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(loss);
    return loss;
  };

  result.best_loss = full_loss(0);
  Vector best_params = params;
  int since_best = 0;

  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  Matrix xb, tb;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) rng.shuffle(order);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      xb.resize(len, inputs.cols());
      tb.resize(len, targets.cols());
      for (Eigen::Index i = 0; i < len; ++i) {
        xb.row(i) = inputs.row(order[static_cast<std::size_t>(start + i)]);
        tb.row(i) = targets.row(order[static_cast<std::size_t>(start + i)]);
      }
      const Gradient g = backprop(net, xb, tb);
      if (!std::isfinite(g.loss) || !g.flat.allFinite()) {
        throw TrainingDiverged("non-finite gradient at epoch " + std::to_string(epoch));
      }
      adamax_step(opt, params, g.flat);
      net.set_parameters(params);
    }
    const double loss = full_loss(epoch);
    if (loss < result.best_loss * (1.0 - 1e-9)) {
      result.best_loss = loss;
      result.best_epoch = epoch;
      best_params = params;
      since_best = 0;
    } else if (cfg.early_stop_patience && ++since_best >= *cfg.early_stop_patience) {
      break;
    }
  }
  net.set_parameters(best_params);
  result.net = std::move(net);
  return result;
}

}  // namespace nlwfa

#endif  // NLWFA_NEURAL_HPP_
