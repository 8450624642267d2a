// eval.hpp
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
// Pautomac score and next-symbol word error rate.
//
// Models are duck-typed: anything with initial_state(), advance(state, s),
// terminate(state) and alphabet() works, plus a decoder that maps a state to
// its predicted Hankel row. Wfa and NlWfa both qualify.

#ifndef NLWFA_EVAL_HPP_
#define NLWFA_EVAL_HPP_

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nlwfa/common.hpp"
#include "nlwfa/corpus.hpp"
#include "nlwfa/hankel.hpp"
#include "nlwfa/nlwfa.hpp"
#include "nlwfa/wfa.hpp"

namespace nlwfa {

inline constexpr double kProbabilityFloor = 1e-12;

using Oracle = std::function<double(const Word&)>;

struct PautomacResult {
  double pautomac = 0.0;
  double log2_pautomac = 0.0;
};

struct EvalDetail {
  Word word;
  std::uint64_t count = 0;
  double p_star = 0.0;   // normalized
  double p_model = 0.0;  // normalized
  double raw_model = 0.0;
};

struct EvalReport {
  double pautomac = 0.0;
  double log2_pautomac = 0.0;
  double wer = 0.0;
  std::uint64_t num_test = 0;
  std::uint64_t num_prediction_events = 0;
  std::uint64_t num_errors = 0;
  /// "oracle" or "empirical" (test-set frequencies stand in for P_*).
  std::string p_star_source = "oracle";
  std::vector<EvalDetail> details;
};

/// 2^(-sum P_*(x) log2 P_M(x)) over the distinct test strings. Model values
/// are replaced by their absolute value, floored at 1e-12, then P_M and P_*
/// are each normalized over the test set.
template <class Model>
PautomacResult pautomac_score(const Model& model, const SampleSet& test, const Oracle& oracle,
                              std::vector<EvalDetail>* details = nullptr) {
  if (test.empty()) throw ConfigError("test set is empty");
  std::vector<double> pm, ps;
  bool any_positive = false;
  for (const auto& [w, count] : test.counts()) {
    const double raw = model.evaluate(w);
    double v = std::abs(raw);
    if (!std::isfinite(v)) throw DegenerateModel("model value is not finite");
    any_positive = any_positive || v >= kProbabilityFloor;
    pm.push_back(std::max(v, kProbabilityFloor));
    ps.push_back(oracle(w));
    if (details) details->push_back({w, count, 0.0, 0.0, raw});
  }
  if (!any_positive) throw DegenerateModel("model assigns zero to every test string");
  double sum_m = 0.0, sum_s = 0.0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    sum_m += pm[i];
    sum_s += ps[i];
  }
  if (!(sum_s > 0.0)) throw ConfigError("oracle assigns zero mass to the test set");
  double cross = 0.0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    const double p_star = ps[i] / sum_s;
    const double p_model = pm[i] / sum_m;
    if (p_star > 0.0) cross -= p_star * std::log2(p_model);
    if (details) {
      (*details)[i].p_star = p_star;
      (*details)[i].p_model = p_model;
    }
  }
  return PautomacResult{std::exp2(cross), cross};
}

/// Empirical test-set frequencies as a stand-in oracle.
inline Oracle empirical_oracle(const SampleSet& test) {
  return [&test](const Word& w) { return empirical_frequency(test, w); };
}

/// Maps a state to its decoded Hankel row over the basis suffixes: for a WFA
/// the values state * A_v * alpha_inf, for an NL-WFA the decoder output.
class RowDecoder {
 public:
  RowDecoder(const Wfa& wfa, const Basis& basis) {
    Matrix right(wfa.states(), static_cast<Eigen::Index>(basis.suffixes().size()));
    for (std::size_t j = 0; j < basis.suffixes().size(); ++j) right.col(j) = wfa.suffix_vector(basis.suffixes()[j]);
    fn_ = [right](const RowVector& state) -> RowVector { return state * right; };
  }
  RowDecoder(const NlWfa& model, const Basis&) {
    fn_ = [&model](const RowVector& state) -> RowVector { return model.decode(state); };
  }
  RowVector operator()(const RowVector& state) const { return fn_(state); }

 private:
  std::function<RowVector(const RowVector&)> fn_;
};

namespace detail {

template <class Model>
std::vector<double> scores_from_state(const Model& model, const RowVector& state, const RowDecoder& decode) {
  const int n = model.alphabet().size;
  std::vector<double> scores(static_cast<std::size_t>(n) + 1, 0.0);
  for (Symbol s = 0; s < n; ++s) {
    const RowVector row = decode(model.advance(state, s));
    scores[static_cast<std::size_t>(s)] = row.cwiseMax(0.0).sum();
  }
  scores[static_cast<std::size_t>(n)] = std::max(0.0, model.terminate(state));
  return scores;
}

template <class Model>
void check_alphabet(const Model& model, const Basis& basis) {
  if (!(model.alphabet() == basis.alphabet())) throw ConfigError("model and basis alphabets differ");
}

}  // namespace detail

/// Score of each next symbol after `prefix`, with index |Sigma| for STOP.
/// A symbol scores the positive mass of the decoded row after reading it;
/// STOP scores max(0, f(prefix)).
template <class Model>
std::vector<double> next_symbol_scores(const Model& model, const Word& prefix, const Basis& basis) {
  detail::check_alphabet(model, basis);
  const RowDecoder decode(model, basis);
  return detail::scores_from_state(model, model.advance(model.initial_state(), prefix), decode);
}

/// Index of the best score; ties go to the smallest symbol id, STOP last.
inline std::size_t argmax_prediction(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

struct WerCounts {
  std::uint64_t errors = 0;
  std::uint64_t events = 0;
  double rate() const { return events == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(events); }
};

/// Predicts every next symbol (and the end of each word) of the test words.
template <class Model>
WerCounts word_error_counts(const Model& model, const SampleSet& test, const Basis& basis) {
  detail::check_alphabet(model, basis);
  if (!(test.alphabet() == model.alphabet())) throw ConfigError("model and test alphabets differ");
  const RowDecoder decode(model, basis);
  const auto stop = static_cast<std::size_t>(model.alphabet().size);
  WerCounts c;
  for (const auto& [w, count] : test.counts()) {
    RowVector state = model.initial_state();
    for (std::size_t i = 0; i <= w.size(); ++i) {
      const std::size_t predicted = argmax_prediction(detail::scores_from_state(model, state, decode));
      const std::size_t target = i < w.size() ? static_cast<std::size_t>(w[i]) : stop;
      if (predicted != target) c.errors += count;
      c.events += count;
      if (i < w.size()) state = model.advance(state, w[i]);
    }
  }
  return c;
}

template <class Model>
double word_error_rate(const Model& model, const SampleSet& test, const Basis& basis) {
  if (test.empty()) throw ConfigError("test set is empty");
  return word_error_counts(model, test, basis).rate();
}

/// Both metrics. Without an oracle, P_* is the empirical test distribution.
template <class Model>
EvalReport evaluate_model(const Model& model, const SampleSet& test, const Basis& basis,
                          const std::optional<Oracle>& oracle, bool with_details = false) {
  EvalReport r;
  r.num_test = test.total();
  r.p_star_source = oracle ? "oracle" : "empirical";
  const PautomacResult p = pautomac_score(model, test, oracle ? *oracle : empirical_oracle(test),
                                          with_details ? &r.details : nullptr);
  r.pautomac = p.pautomac;
  r.log2_pautomac = p.log2_pautomac;
  const WerCounts c = word_error_counts(model, test, basis);
  r.wer = c.rate();
  r.num_errors = c.errors;
  r.num_prediction_events = c.events;
  return r;
}

}  // namespace nlwfa

#endif  // NLWFA_EVAL_HPP_
