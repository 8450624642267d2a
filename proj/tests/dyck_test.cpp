// dyck_test.cpp
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

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "nlwfa/dyck.hpp"
#include "nlwfa/hankel.hpp"

namespace nlwfa {
namespace {

// Every derivation tree with a yield of length <= max_len, one entry per tree.
std::map<Word, double> enumerate_derivations(const DyckGrammar& g, std::size_t max_len) {
  std::vector<std::vector<std::pair<Word, double>>> trees(max_len + 1);
  for (std::size_t n = 2; n <= max_len; n += 2) {
    if (n == 2) trees[n].push_back({dyck_word("[]"), g.p_leaf});
    for (const auto& [inner, p] : trees[n - 2]) trees[n].push_back({concat(concat(Word{kOpen}, inner), Word{kClose}), g.p_wrap * p});
    for (std::size_t m = 2; m + 2 <= n; m += 2) {
      for (const auto& [left, pl] : trees[m]) {
        for (const auto& [right, pr] : trees[n - m]) trees[n].push_back({concat(left, right), g.p_ss * pl * pr});
      }
    }
  }
  std::map<Word, double> total;
  for (const auto& bucket : trees) {
    for (const auto& [w, p] : bucket) total[w] += p;
  }
  return total;
}

TEST(Inside, HandValues) {
  const DyckGrammar g;
  EXPECT_EQ(inside_probability(g, dyck_word("[]")), 0.4);
  EXPECT_DOUBLE_EQ(inside_probability(g, dyck_word("[[]]")), 0.16);
  EXPECT_DOUBLE_EQ(inside_probability(g, dyck_word("[][]")), 0.032);
}

TEST(Inside, UnbalancedIsExactlyZero) {
  const DyckGrammar g;
  for (const char* w : {"", "[", "]", "][", "[[]", "[]]", "]][[", "[]][[]"}) {
    EXPECT_EQ(inside_probability(g, dyck_word(w)), 0.0) << w;
  }
}

TEST(Inside, MatchesDerivationEnumeration) {
  for (const DyckGrammar& g : {DyckGrammar{}, DyckGrammar{0.5, 0.3, 0.2}, DyckGrammar{0.1, 0.1, 0.8}}) {
    const auto oracle = enumerate_derivations(g, 8);
    std::size_t balanced = 0;
    for (const Word& w : all_words(dyck_alphabet(), 8)) {
      const auto it = oracle.find(w);
      const double expected = it == oracle.end() ? 0.0 : it->second;
      EXPECT_NEAR(inside_probability(g, w), expected, 1e-12) << to_string(w, dyck_alphabet());
      balanced += !w.empty() && is_balanced(w);
    }
    EXPECT_EQ(balanced, oracle.size());
  }
}

TEST(LengthDistribution, MatchesSumOfInside) {
  const DyckGrammar g;
  const auto mass = length_distribution(g, 10);
  std::vector<double> summed(11, 0.0);
  for (const Word& w : all_words(dyck_alphabet(), 10)) summed[w.size()] += inside_probability(g, w);
  for (std::size_t n = 0; n <= 10; ++n) EXPECT_NEAR(mass[n], summed[n], 1e-14);
}

TEST(LengthDistribution, MassConvergesToOne) {
  const auto mass = length_distribution(DyckGrammar{}, 60);
  double total = 0.0;
  for (double m : mass) total += m;
  EXPECT_GE(total, 0.99);
  EXPECT_LE(total, 1.0);
}

TEST(Grammar, Validation) {
  EXPECT_THROW((DyckGrammar{0.5, 0.5, 0.5}.validate()), ConfigError);
  EXPECT_THROW((DyckGrammar{-0.1, 0.6, 0.5}.validate()), ConfigError);
  EXPECT_NO_THROW(DyckGrammar{}.validate());
  EXPECT_THROW(dyck_word("[x]"), ConfigError);
}

TEST(Sampler, DegenerateGrammarAlwaysLeaf) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample(DyckGrammar{0, 0, 1}, rng), dyck_word("[]"));
}

TEST(Sampler, RespectsLengthCapAndBalance) {
  Rng rng(2);
  const SampleSet s = sample_set(DyckGrammar{0.45, 0.45, 0.1}, rng, 500, 12);
  for (const Word& w : s.words()) {
    EXPECT_LE(w.size(), 12u);
    EXPECT_TRUE(is_balanced(w));
    EXPECT_FALSE(w.empty());
  }
  EXPECT_THROW(sample(DyckGrammar{}, rng, 1), ConfigError);
}

TEST(Sampler, Deterministic) {
  Rng a(3), b(3);
  EXPECT_EQ(sample_set(DyckGrammar{}, a, 200).words(), sample_set(DyckGrammar{}, b, 200).words());
}

TEST(Sampler, LeafFrequencyAndMeanLength) {
  Rng rng(4);
  const std::size_t n = 50000;
  const SampleSet s = sample_set(DyckGrammar{}, rng, n);
  EXPECT_NEAR(empirical_frequency(s, dyck_word("[]")), 0.4, 0.02);
  double total = 0.0;
  for (const Word& w : s.words()) total += static_cast<double>(w.size());
  EXPECT_NEAR(total / static_cast<double>(n), 8.0, 1.0);
}

TEST(Sampler, AgreesWithOracleWithinThreeStandardErrors) {
  const DyckGrammar g;
  const std::size_t n = 100000, max_len = 100;
  Rng rng(5);
  const SampleSet s = sample_set(g, rng, n, max_len);
  double kept = 0.0;
  for (double m : length_distribution(g, max_len)) kept += m;
  for (const Word& w : all_words(dyck_alphabet(), 6)) {
    const double p = inside_probability(g, w) / kept;
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(n));
    EXPECT_LE(std::abs(empirical_frequency(s, w) - p), 3 * se) << to_string(w, dyck_alphabet());
  }
}

}  // namespace
}  // namespace nlwfa
