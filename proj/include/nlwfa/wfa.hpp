// wfa.hpp
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

#ifndef NLWFA_WFA_HPP_
#define NLWFA_WFA_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "nlwfa/common.hpp"
#include "nlwfa/corpus.hpp"

namespace nlwfa {

/// Linear weighted finite automaton <alpha0, alpha_inf, {A_sigma}>.
///
/// Computes f(x) = alpha0^T A_{x1} ... A_{xn} alpha_inf. States are carried
/// as row vectors and advanced by right multiplication, so reading u then v
/// applies A_u before A_v.
class Wfa {
 public:
  using State = RowVector;

  Wfa() = default;
  Wfa(Alphabet alphabet, Vector alpha0, Vector alpha_inf, std::vector<Matrix> transitions)
      : alphabet_(std::move(alphabet)),
        alpha0_(std::move(alpha0)),
        alpha_inf_(std::move(alpha_inf)),
        transitions_(std::move(transitions)) {
    const auto k = alpha0_.size();
    if (alpha_inf_.size() != k) throw ConfigError("initial and final vectors differ in length");
    if (static_cast<int>(transitions_.size()) != alphabet_.size) {
      throw ConfigError("need one transition matrix per symbol");
    }
    for (const Matrix& a : transitions_) {
      if (a.rows() != k || a.cols() != k) throw ConfigError("transition matrix is not k x k");
      if (!a.allFinite()) throw ConfigError("non-finite transition weight");
    }
    if (!alpha0_.allFinite() || !alpha_inf_.allFinite()) throw ConfigError("non-finite weight");
  }

  const Alphabet& alphabet() const { return alphabet_; }
  int states() const { return static_cast<int>(alpha0_.size()); }
  const Vector& alpha0() const { return alpha0_; }
  const Vector& alpha_inf() const { return alpha_inf_; }
  const Matrix& transition(Symbol s) const { return transitions_.at(static_cast<std::size_t>(s)); }
  const std::vector<Matrix>& transitions() const { return transitions_; }

  State initial_state() const { return alpha0_.transpose(); }

  State advance(const State& state, Symbol s) const {
    check_symbol(s);
    return state * transitions_[static_cast<std::size_t>(s)];
  }

  State advance(State state, const Word& w) const {
    for (Symbol s : w) state = advance(state, s);
    return state;
  }

  double terminate(const State& state) const { return state.dot(alpha_inf_.transpose()); }

  /// Column vector A_w alpha_inf.
  Vector suffix_vector(const Word& w) const {
    Vector v = alpha_inf_;
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      check_symbol(*it);
      v = transitions_[static_cast<std::size_t>(*it)] * v;
    }
    return v;
  }

  double evaluate(const Word& w) const { return terminate(advance(initial_state(), w)); }

 private:
  void check_symbol(Symbol s) const {
    if (!alphabet_.contains(s)) throw ConfigError("symbol " + std::to_string(s) + " out of range");
  }

  Alphabet alphabet_;
  Vector alpha0_;
  Vector alpha_inf_;
  std::vector<Matrix> transitions_;
};

inline double evaluate(const Wfa& wfa, const Word& w) { return wfa.evaluate(w); }

/// The k^2-state automaton computing f_A(x)^2, built from Kronecker squares
/// of every parameter.
inline Wfa kron_square(const Wfa& wfa) {
  Vector a0 = Eigen::kroneckerProduct(wfa.alpha0(), wfa.alpha0());
  Vector ainf = Eigen::kroneckerProduct(wfa.alpha_inf(), wfa.alpha_inf());
  std::vector<Matrix> trans;
  trans.reserve(wfa.transitions().size());
  for (const Matrix& a : wfa.transitions()) trans.emplace_back(Eigen::kroneckerProduct(a, a));
  return Wfa(wfa.alphabet(), std::move(a0), std::move(ainf), std::move(trans));
}

/// WFA with entries drawn uniformly from [lo, hi]; used by tests and demos.
inline Wfa random_wfa(const Alphabet& alphabet, int k, Rng& rng, double lo = -1.0, double hi = 1.0,
                      double transition_scale = 1.0) {
  Vector a0(k), ainf(k);
  for (int i = 0; i < k; ++i) a0(i) = rng.uniform(lo, hi);
  for (int i = 0; i < k; ++i) ainf(i) = rng.uniform(lo, hi);
  std::vector<Matrix> trans;
  for (int s = 0; s < alphabet.size; ++s) {
    Matrix a(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) a(i, j) = transition_scale * rng.uniform(lo, hi);
    }
    trans.push_back(std::move(a));
  }
  return Wfa(alphabet, std::move(a0), std::move(ainf), std::move(trans));
}

}  // namespace nlwfa

#endif  // NLWFA_WFA_HPP_
