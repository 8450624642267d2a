// dyck.hpp
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
// Probabilistic Dyck language over {'[' = 0, ']' = 1}:
//
//   S -> S S   (p_ss)
//   S -> [ S ] (p_wrap)
//   S -> [ ]   (p_leaf)

#ifndef NLWFA_DYCK_HPP_
#define NLWFA_DYCK_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "nlwfa/common.hpp"
#include "nlwfa/corpus.hpp"

namespace nlwfa {

inline constexpr Symbol kOpen = 0;
inline constexpr Symbol kClose = 1;

inline Alphabet dyck_alphabet() { return Alphabet{2, {"[", "]"}}; }

struct DyckGrammar {
  double p_ss = 0.2;
  double p_wrap = 0.4;
  double p_leaf = 0.4;

  void validate() const {
    if (p_ss < 0 || p_wrap < 0 || p_leaf < 0) throw ConfigError("rule probabilities must be nonnegative");
    if (std::abs(p_ss + p_wrap + p_leaf - 1.0) > 1e-9) throw ConfigError("rule probabilities must sum to 1");
  }
};

/// Parses a word written with '[' and ']'.
inline Word dyck_word(const std::string& text) {
  Word w;
  for (char c : text) {
    if (c == '[') {
      w.push_back(kOpen);
    } else if (c == ']') {
      w.push_back(kClose);
    } else {
      throw ConfigError(std::string("not a bracket: '") + c + "'");
    }
  }
  return w;
}

inline bool is_balanced(const Word& w) {
  long depth = 0;
  for (Symbol s : w) {
    depth += s == kOpen ? 1 : -1;
    if (s != kOpen && s != kClose) return false;
    if (depth < 0) return false;
  }
  return depth == 0;
}

/// One derivation, expanding the leftmost S first with exactly one uniform
/// draw per expansion. Returns false (leaving `out` partial) once the yield is
/// guaranteed to exceed max_len.
inline bool sample_once(const DyckGrammar& g, Rng& rng, std::size_t max_len, Word& out) {
  // Pending right-hand-side items; S is -1, terminals are symbol ids.
  constexpr Symbol kS = -1;
  std::vector<Symbol> stack{kS};
  std::size_t pending_s = 1;
  out.clear();
  while (!stack.empty()) {
    const Symbol top = stack.back();
    stack.pop_back();
    if (top != kS) {
      out.push_back(top);
      continue;
    }
    --pending_s;
    const double r = rng.uniform();
    if (r < g.p_ss) {
      stack.push_back(kS);
      stack.push_back(kS);
      pending_s += 2;
    } else if (r < g.p_ss + g.p_wrap) {
      stack.push_back(kClose);
      stack.push_back(kS);
      stack.push_back(kOpen);
      ++pending_s;
    } else {
      stack.push_back(kClose);
      stack.push_back(kOpen);
    }
    // Every pending S yields at least two symbols.
    std::size_t committed = out.size() + 2 * pending_s;
    for (Symbol s : stack) committed += s != kS ? 1 : 0;
    if (committed > max_len) return false;
  }
  return true;
}

/// Draws a word from the grammar conditioned on length <= max_len, by
/// rejection.
inline Word sample(const DyckGrammar& g, Rng& rng, std::size_t max_len = 100) {
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  g.validate();
  Word w;
  while (!sample_once(g, rng, max_len, w)) {
  }
  return w;
}

inline SampleSet sample_set(const DyckGrammar& g, Rng& rng, std::size_t n, std::size_t max_len = 100) {
  SampleSet s(dyck_alphabet());
  for (std::size_t i = 0; i < n; ++i) s.add(sample(g, rng, max_len));
  return s;
}

/// Total probability of all derivations of w from S, by the inside algorithm
/// over spans. 0 for unbalanced or empty words.
inline double inside_probability(const DyckGrammar& g, const Word& w) {
  const std::size_t n = w.size();
  if (n == 0 || n % 2 != 0 || !is_balanced(w)) return 0.0;
  // inside[i][j]: probability that S derives w[i, j).
  std::vector<std::vector<double>> inside(n + 1, std::vector<double>(n + 1, 0.0));
  for (std::size_t len = 2; len <= n; len += 2) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      double p = 0.0;
      if (w[i] == kOpen && w[j - 1] == kClose) {
        p += len == 2 ? g.p_leaf : g.p_wrap * inside[i + 1][j - 1];
      }
      for (std::size_t m = i + 2; m < j; m += 2) p += g.p_ss * inside[i][m] * inside[m][j];
      inside[i][j] = p;
    }
  }
  return inside[0][n];
}

/// Probability mass of yields of each length 0..max_len, summed over all words.
inline std::vector<double> length_distribution(const DyckGrammar& g, std::size_t max_len) {
  std::vector<double> mass(max_len + 1, 0.0);
  for (std::size_t n = 2; n <= max_len; n += 2) {
    double p = n == 2 ? g.p_leaf : g.p_wrap * mass[n - 2];
    for (std::size_t m = 2; m < n; m += 2) p += g.p_ss * mass[m] * mass[n - m];
    mass[n] = p;
  }
  return mass;
}

}  // namespace nlwfa

#endif  // NLWFA_DYCK_HPP_
