// nlwfa.hpp
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
// Nonlinear weighted finite automata and their two-phase learner.
//
// An NlWfa is <alpha0, G_lambda, {G_sigma}> with G_sigma : R^k -> R^k and
// G_lambda : R^k -> R, computing
//
//   f(x1 ... xt) = G_lambda(G_xt(... G_x1(alpha0) ...)).
//
// Learning works on a Hankel block H over (P', S):
//   1. factorization: an encoder phi : R^S -> R^k and decoder phi' : R^k -> R^S
//      with phi'(phi(H[u, :])) ~ H[u, :] for every u in P'.
//   2. transitions: for each symbol, G_sigma(phi(H[u, :])) ~ phi(H[u sigma, :])
//      for every u in P.
// Then alpha0 = phi(H[lambda, :]) and G_lambda(x) = phi'(x)[lambda].
//
// Either phase can be linear (closed form) or a tanh network, giving the four
// variants sp, fac.non, tran.non and both.non.

#ifndef NLWFA_NLWFA_HPP_
#define NLWFA_NLWFA_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nlwfa/common.hpp"
#include "nlwfa/corpus.hpp"
#include "nlwfa/hankel.hpp"
#include "nlwfa/linalg.hpp"
#include "nlwfa/neural.hpp"

namespace nlwfa {

enum class Variant { sp, fac_non, tran_non, both_non };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::sp: return "sp";
    case Variant::fac_non: return "fac.non";
    case Variant::tran_non: return "tran.non";
    case Variant::both_non: return "both.non";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "sp") return Variant::sp;
  if (s == "fac.non") return Variant::fac_non;
  if (s == "tran.non") return Variant::tran_non;
  if (s == "both.non") return Variant::both_non;
  throw ConfigError("unknown variant '" + s + "' (expected sp, fac.non, tran.non or both.non)");
}

inline bool nonlinear_factorization(Variant v) { return v == Variant::fac_non || v == Variant::both_non; }
inline bool nonlinear_transitions(Variant v) { return v == Variant::tran_non || v == Variant::both_non; }

/// x |-> x^T M for a row vector x.
struct LinearMap {
  Matrix matrix;
};

/// A network, optionally wrapped in per-coordinate affine maps:
///   y = out_scale .* net(in_scale .* x + in_shift) + out_shift.
/// Empty scale/shift vectors mean the identity.
struct NetworkMap {
  Mlp net;
  RowVector in_scale, in_shift, out_scale, out_shift;
};

/// Arbitrary in-memory map. Not serializable.
struct CustomMap {
  std::function<Matrix(const Matrix&)> fn;
  int in_dim = 0;
  int out_dim = 0;
};

using VectorMap = std::variant<LinearMap, NetworkMap, CustomMap>;

/// Applies a map to every row of `x`.
inline Matrix apply_map(const VectorMap& map, const Matrix& x) {
  return std::visit(
      [&](const auto& m) -> Matrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMap>) {
          return x * m.matrix;
        } else if constexpr (std::is_same_v<T, NetworkMap>) {
          Matrix in = x;
          if (m.in_scale.size()) in = (in.array().rowwise() * m.in_scale.array()).matrix();
          if (m.in_shift.size()) in.rowwise() += m.in_shift;
          Matrix out = m.net.apply(in);
          if (m.out_scale.size()) out = (out.array().rowwise() * m.out_scale.array()).matrix();
          if (m.out_shift.size()) out.rowwise() += m.out_shift;
          return out;
        } else {
          return m.fn(x);
        }
      },
      map);
}

inline bool is_linear(const VectorMap& map) { return std::holds_alternative<LinearMap>(map); }

inline int output_dim(const VectorMap& map) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMap>) {
          return static_cast<int>(m.matrix.cols());
        } else if constexpr (std::is_same_v<T, NetworkMap>) {
          return m.net.out_dim();
        } else {
          return m.out_dim;
        }
      },
      map);
}

using TransitionFn = VectorMap;

/// G_lambda(x) = decoder(x)[lambda_index].
struct TerminationFn {
  VectorMap decoder;
  int lambda_index = 0;
};

/// Encoder phi : R^S -> R^k and decoder phi' : R^k -> R^S.
struct EncoderPair {
  VectorMap encoder;
  VectorMap decoder;
  /// Full-data loss history of the autoencoder; empty for the closed form.
  std::vector<double> loss_history;
};

class NlWfa {
 public:
  using State = RowVector;

  NlWfa() = default;
  NlWfa(Alphabet alphabet, RowVector alpha0, std::vector<TransitionFn> transitions, TerminationFn termination,
        Variant variant)
      : alphabet_(std::move(alphabet)),
        alpha0_(std::move(alpha0)),
        transitions_(std::move(transitions)),
        termination_(std::move(termination)),
        variant_(variant) {
    if (static_cast<int>(transitions_.size()) != alphabet_.size) {
      throw ConfigError("need one transition function per symbol");
    }
  }

  const Alphabet& alphabet() const { return alphabet_; }
  int states() const { return static_cast<int>(alpha0_.size()); }
  const RowVector& alpha0() const { return alpha0_; }
  const std::vector<TransitionFn>& transitions() const { return transitions_; }
  const TerminationFn& termination() const { return termination_; }
  Variant variant() const { return variant_; }

  State initial_state() const { return alpha0_; }

  State advance(const State& state, Symbol s) const {
    if (!alphabet_.contains(s)) throw ConfigError("symbol " + std::to_string(s) + " out of range");
    return apply_map(transitions_[static_cast<std::size_t>(s)], state);
  }

  State advance(State state, const Word& w) const {
    for (Symbol s : w) state = advance(state, s);
    return state;
  }

  /// The decoded Hankel row phi'(state).
  RowVector decode(const State& state) const { return apply_map(termination_.decoder, state); }

  double terminate(const State& state) const { return decode(state)(termination_.lambda_index); }

  double evaluate(const Word& w) const { return terminate(advance(initial_state(), w)); }

 private:
  Alphabet alphabet_;
  RowVector alpha0_;
  std::vector<TransitionFn> transitions_;
  TerminationFn termination_;
  Variant variant_ = Variant::sp;
};

inline double evaluate(const NlWfa& model, const Word& w) { return model.evaluate(w); }

/// Hidden widths from multipliers of k, e.g. {2, 1, 2} -> {2k, k, 2k}.
inline std::vector<int> hidden_widths(const std::vector<int>& multipliers, int k) {
  std::vector<int> out;
  for (int m : multipliers) out.push_back(m * k);
  return out;
}

struct FactorizationOptions {
  std::vector<int> hidden;  // symmetric, middle entry = k
  Activation hidden_activation = Activation::tanh;
  bool use_bias = true;
};

/// Phase 1. The linear form factorizes h_lambda by truncated SVD, giving the
/// encoder x |-> x S^+ and decoder x |-> x S. The nonlinear form trains the
/// autoencoder |S| -> hidden... -> |S| on every row of h_full; all hidden
/// layers use the hidden activation and the output layer is linear.
inline EncoderPair train_factorization(const HankelBlocks& h, int k, bool nonlinear, const TrainConfig& cfg,
                                       const FactorizationOptions& opts = {}) {
  const int n_suffix = static_cast<int>(h.h_full.cols());
  if (!nonlinear) {
    const int max_rank = static_cast<int>(std::min(h.h_lambda.rows(), h.h_lambda.cols()));
    if (k < 1 || k > max_rank) {
      throw ConfigError("rank " + std::to_string(k) + " out of range [1, " + std::to_string(max_rank) + "]");
    }
    const Factorization f = svd_truncated(h.h_lambda, k);
    return EncoderPair{LinearMap{pinv(f.s)}, LinearMap{f.s}, {}};
  }

  if (k < 1 || k >= n_suffix) {
    throw ConfigError("bottleneck k = " + std::to_string(k) + " must satisfy 1 <= k < |S| = " +
                      std::to_string(n_suffix));
  }
  const auto& hidden = opts.hidden;
  if (hidden.empty() || hidden.size() % 2 == 0 || hidden[hidden.size() / 2] != k ||
      !std::equal(hidden.begin(), hidden.end(), hidden.rbegin())) {
    throw ConfigError("factorization architecture must be symmetric with middle width k");
  }
  std::vector<LayerSpec> specs;
  int in = n_suffix;
  for (int w : hidden) {
    specs.push_back({in, w, opts.hidden_activation});
    in = w;
  }
  specs.push_back({in, n_suffix, Activation::identity});

  Rng init_rng(derive_seed(cfg.seed, {0x1a17}));
  Mlp net(specs, init_rng, opts.use_bias);
  TrainConfig c = cfg;
  c.seed = derive_seed(cfg.seed, {0x5a17});
  TrainResult r = train(std::move(net), h.h_full, h.h_full, c);

  const std::size_t encoder_layers = hidden.size() / 2 + 1;
  EncoderPair pair{NetworkMap{r.net.slice(0, encoder_layers), {}, {}, {}, {}},
                   NetworkMap{r.net.slice(encoder_layers, r.net.layers().size()), {}, {}, {}, {}},
                   std::move(r.loss_history)};
  return pair;
}

struct TransitionOptions {
  int hidden_multiplier = 2;  // hidden width = multiplier * k
  bool use_bias = true;
  /// Target range for the per-coordinate rescaling applied when the encoder is
  /// linear (its states are unbounded but the networks output tanh).
  double rescale_bound = 0.9;
};

struct TransitionSet {
  std::vector<TransitionFn> maps;
  /// Per-symbol full-data loss history; empty for the closed form.
  std::vector<std::vector<double>> loss_histories;
};

/// Phase 2. For each symbol fits G_sigma(phi(H[u, :])) ~ phi(H[u sigma, :])
/// over u in P, either by least squares (x |-> x M with M = Phi_P^+ Phi_sigma)
/// or by a k -> hidden -> k tanh network, one per symbol.
inline TransitionSet train_transitions(const HankelBlocks& h, const EncoderPair& enc, bool nonlinear,
                                       const TrainConfig& cfg, const TransitionOptions& opts = {}) {
  const Matrix states = apply_map(enc.encoder, h.h_lambda);
  std::vector<Matrix> targets;
  for (const Matrix& hs : h.h_sigma) targets.push_back(apply_map(enc.encoder, hs));
  const int k = static_cast<int>(states.cols());

  TransitionSet out;
  if (!nonlinear) {
    const Matrix states_pinv = pinv(states);
    for (const Matrix& t : targets) out.maps.push_back(LinearMap{states_pinv * t});
    out.loss_histories.resize(targets.size());
    return out;
  }

  // Networks emit tanh; when the latent space is unbounded, map it affinely to
  // [-bound, bound] per coordinate and fold the inverse into the transition.
  RowVector scale = RowVector::Ones(k), shift = RowVector::Zero(k);
  const bool rescale = is_linear(enc.encoder);
  if (rescale) {
    const Matrix all = apply_map(enc.encoder, h.h_full);
    const RowVector lo = all.colwise().minCoeff();
    const RowVector hi = all.colwise().maxCoeff();
    for (int j = 0; j < k; ++j) {
      const double span = hi(j) - lo(j);
      scale(j) = span > 0 ? 2.0 * opts.rescale_bound / span : 1.0;
      shift(j) = -(hi(j) + lo(j)) / 2.0 * scale(j);
    }
  }
  auto to_unit = [&](const Matrix& x) -> Matrix {
    Matrix y = (x.array().rowwise() * scale.array()).matrix();
    y.rowwise() += shift;
    return y;
  };
  const Matrix in = to_unit(states);
  const int hidden = opts.hidden_multiplier * k;
  for (std::size_t s = 0; s < targets.size(); ++s) {
    Rng init_rng(derive_seed(cfg.seed, {0x7a17, s}));
    Mlp net({{k, hidden, Activation::tanh}, {hidden, k, Activation::tanh}}, init_rng, opts.use_bias);
    TrainConfig c = cfg;
    c.seed = derive_seed(cfg.seed, {0x3a17, s});
    TrainResult r = train(std::move(net), in, to_unit(targets[s]), c);
    NetworkMap map{std::move(r.net), {}, {}, {}, {}};
    if (rescale) {
      map.in_scale = scale;
      map.in_shift = shift;
      map.out_scale = scale.cwiseInverse();
      map.out_shift = -(shift.array() / scale.array()).matrix();
    }
    out.maps.push_back(std::move(map));
    out.loss_histories.push_back(std::move(r.loss_history));
  }
  return out;
}

/// alpha0 = phi(H[lambda, :]) and G_lambda(x) = phi'(x)[lambda].
inline NlWfa assemble(const HankelBlocks& h, const EncoderPair& enc, std::vector<TransitionFn> transitions,
                      Variant variant) {
  const int lp = h.basis.closed_index(Word{});
  const int ls = h.basis.lambda_suffix();
  if (h.basis.lambda_prefix() < 0 || lp < 0 || ls < 0) throw ConfigError("empty word missing from basis");
  RowVector alpha0 = apply_map(enc.encoder, h.h_full.row(lp));
  return NlWfa(h.basis.alphabet(), std::move(alpha0), std::move(transitions), TerminationFn{enc.decoder, ls},
               variant);
}

/// sum over u in P of (f(u) - H[u, lambda])^2.
inline double objective_j(const NlWfa& model, const HankelBlocks& h) {
  const int ls = h.basis.lambda_suffix();
  double j = 0.0;
  const auto& p = h.basis.prefixes();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = model.evaluate(p[i]) - h.h_lambda(static_cast<Eigen::Index>(i), ls);
    j += d * d;
  }
  return j;
}

struct LearnOptions {
  std::size_t max_prefixes = 1000;
  std::size_t max_suffixes = 1000;
  std::vector<int> hidden_multipliers{2, 1, 2};
  FactorizationOptions factorization{};  // `hidden` is filled from the multipliers
  TransitionOptions transition{};
  TrainConfig factorization_train{500, 32, 0, 0.015, true, 50};
  TrainConfig transition_train{500, 32, 0, 0.001, true, 50};
  std::uint64_t seed = 0;
};

struct LearnResult {
  NlWfa model;
  HankelBlocks hankel;
  std::vector<double> factorization_loss;
  std::vector<std::vector<double>> transition_loss;
  double objective = 0.0;
};

/// Both learning phases and assembly on a given Hankel estimate.
inline LearnResult learn_from_hankel(const HankelBlocks& h, int k, Variant variant, const LearnOptions& opts) {
  const int max_rank = static_cast<int>(std::min(h.h_lambda.rows(), h.h_lambda.cols()));
  if (k < 1 || k > max_rank) {
    throw ConfigError("rank " + std::to_string(k) + " out of range [1, " + std::to_string(max_rank) + "]");
  }
  FactorizationOptions fopts = opts.factorization;
  fopts.hidden = hidden_widths(opts.hidden_multipliers, k);
  TrainConfig fcfg = opts.factorization_train;
  fcfg.seed = derive_seed(opts.seed, {1});
  TrainConfig tcfg = opts.transition_train;
  tcfg.seed = derive_seed(opts.seed, {2});

  EncoderPair enc = train_factorization(h, k, nonlinear_factorization(variant), fcfg, fopts);
  TransitionSet trans = train_transitions(h, enc, nonlinear_transitions(variant), tcfg, opts.transition);

  LearnResult r;
  r.model = assemble(h, enc, std::move(trans.maps), variant);
  r.hankel = h;
  r.factorization_loss = std::move(enc.loss_history);
  r.transition_loss = std::move(trans.loss_histories);
  r.objective = objective_j(r.model, h);
  return r;
}

/// build_basis -> estimate_hankel -> factorization -> transitions -> assemble.
inline LearnResult learn(const SampleSet& samples, int k, Variant variant, const LearnOptions& opts) {
  const Basis basis = build_basis(samples, opts.max_prefixes, opts.max_suffixes);
  return learn_from_hankel(estimate_hankel(samples, basis), k, variant, opts);
}

}  // namespace nlwfa

#endif  // NLWFA_NLWFA_HPP_
