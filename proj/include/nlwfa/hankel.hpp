// hankel.hpp
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
// Prefix/suffix bases and Hankel sub-blocks.
//
// A basis (P, S) has P prefix-closed and the empty word in both sets. Its
// p-closure P' = P u P.Sigma indexes the rows of the full block; the
// per-symbol blocks H_sigma[u, v] = f(u sigma v) are row selections of it.

#ifndef NLWFA_HANKEL_HPP_
#define NLWFA_HANKEL_HPP_

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nlwfa/common.hpp"
#include "nlwfa/corpus.hpp"
#include "nlwfa/wfa.hpp"

namespace nlwfa {

/// Smallest prefix-closed superset of `words`, in shortlex order. Always
/// contains the empty word.
inline std::vector<Word> prefix_closure(const std::vector<Word>& words) {
  std::set<Word> closed{Word{}};
  for (const Word& w : words) {
    for (std::size_t n = 1; n <= w.size(); ++n) closed.emplace(w.begin(), w.begin() + n);
  }
  std::vector<Word> out(closed.begin(), closed.end());
  std::sort(out.begin(), out.end(), shortlex_less);
  return out;
}

/// P u P.Sigma: the prefixes in their given order (deduplicated), followed by
/// the new one-symbol extensions in shortlex order.
inline std::vector<Word> p_closure(const std::vector<Word>& prefixes, const Alphabet& alphabet) {
  std::vector<Word> out;
  std::set<Word> seen;
  for (const Word& u : prefixes) {
    if (seen.insert(u).second) out.push_back(u);
  }
  std::vector<Word> extensions;
  for (const Word& u : prefixes) {
    for (Symbol s = 0; s < alphabet.size; ++s) {
      Word us = u;
      us.push_back(s);
      if (seen.insert(us).second) extensions.push_back(std::move(us));
    }
  }
  std::sort(extensions.begin(), extensions.end(), shortlex_less);
  out.insert(out.end(), extensions.begin(), extensions.end());
  return out;
}

class Basis {
 public:
  Basis() = default;

  /// Validates and indexes a basis. `prefixes` must be prefix-closed and both
  /// lists must contain the empty word.
  Basis(Alphabet alphabet, std::vector<Word> prefixes, std::vector<Word> suffixes)
      : alphabet_(std::move(alphabet)), prefixes_(std::move(prefixes)), suffixes_(std::move(suffixes)) {
    closed_prefixes_ = p_closure(prefixes_, alphabet_);
    index(prefixes_, prefix_index_, "prefix");
    index(suffixes_, suffix_index_, "suffix");
    index(closed_prefixes_, closed_index_, "closed prefix");
    if (!prefix_index_.count(Word{})) throw ConfigError("empty word missing from prefixes");
    if (!suffix_index_.count(Word{})) throw ConfigError("empty word missing from suffixes");
    for (const Word& u : prefixes_) {
      for (Symbol s : u) {
        if (!alphabet_.contains(s)) throw ConfigError("prefix symbol out of range");
      }
      if (!u.empty() && !prefix_index_.count(Word(u.begin(), u.end() - 1))) {
        throw ConfigError("prefix set is not prefix-closed");
      }
    }
    for (const Word& v : suffixes_) {
      for (Symbol s : v) {
        if (!alphabet_.contains(s)) throw ConfigError("suffix symbol out of range");
      }
    }
  }

  const Alphabet& alphabet() const { return alphabet_; }
  const std::vector<Word>& prefixes() const { return prefixes_; }
  const std::vector<Word>& closed_prefixes() const { return closed_prefixes_; }
  const std::vector<Word>& suffixes() const { return suffixes_; }

  int prefix_index(const Word& u) const { return lookup(prefix_index_, u); }
  int closed_index(const Word& u) const { return lookup(closed_index_, u); }
  int suffix_index(const Word& v) const { return lookup(suffix_index_, v); }
  int lambda_prefix() const { return prefix_index(Word{}); }
  int lambda_suffix() const { return suffix_index(Word{}); }

 private:
  static void index(const std::vector<Word>& words, std::map<Word, int>& idx, const char* what) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (!idx.emplace(words[i], static_cast<int>(i)).second) {
        throw ConfigError(std::string("duplicate ") + what + " in basis");
      }
    }
  }
  static int lookup(const std::map<Word, int>& idx, const Word& w) {
    auto it = idx.find(w);
    return it == idx.end() ? -1 : it->second;
  }

  Alphabet alphabet_;
  std::vector<Word> prefixes_;
  std::vector<Word> closed_prefixes_;
  std::vector<Word> suffixes_;
  std::map<Word, int> prefix_index_;
  std::map<Word, int> closed_index_;
  std::map<Word, int> suffix_index_;
};

/// Full block over P' x S with its |Sigma| + 1 row partitions.
struct HankelBlocks {
  Basis basis;
  Matrix h_full;                // |P'| x |S|
  Matrix h_lambda;              // |P| x |S|
  std::vector<Matrix> h_sigma;  // one |P| x |S| block per symbol

  /// Row of h_full for the closed prefix u.
  auto row(const Word& u) const { return h_full.row(basis.closed_index(u)); }
};

/// Slices h_lambda and h_sigma out of a full block indexed by `basis`.
inline HankelBlocks partition_hankel(Basis basis, Matrix h_full) {
  const auto& p = basis.prefixes();
  if (h_full.rows() != static_cast<Eigen::Index>(basis.closed_prefixes().size()) ||
      h_full.cols() != static_cast<Eigen::Index>(basis.suffixes().size())) {
    throw ConfigError("Hankel block shape does not match basis");
  }
  HankelBlocks h;
  h.h_lambda.resize(static_cast<Eigen::Index>(p.size()), h_full.cols());
  for (std::size_t i = 0; i < p.size(); ++i) h.h_lambda.row(i) = h_full.row(basis.closed_index(p[i]));
  for (Symbol s = 0; s < basis.alphabet().size; ++s) {
    Matrix hs(static_cast<Eigen::Index>(p.size()), h_full.cols());
    for (std::size_t i = 0; i < p.size(); ++i) {
      Word us = p[i];
      us.push_back(s);
      hs.row(i) = h_full.row(basis.closed_index(us));
    }
    h.h_sigma.push_back(std::move(hs));
  }
  h.basis = std::move(basis);
  h.h_full = std::move(h_full);
  return h;
}

namespace detail {

struct RankedAffix {
  std::uint64_t count;
  const Word* word;
};

inline std::vector<Word> top_affixes(std::vector<RankedAffix> ranked, std::size_t limit) {
  // Most frequent first; ties go to shorter, then lexicographically smaller words.
  std::sort(ranked.begin(), ranked.end(), [](const RankedAffix& a, const RankedAffix& b) {
    if (a.count != b.count) return a.count > b.count;
    return shortlex_less(*a.word, *b.word);
  });
  std::vector<Word> out;
  bool has_lambda = false;
  for (std::size_t i = 0; i < ranked.size() && out.size() < limit; ++i) {
    has_lambda = has_lambda || ranked[i].word->empty();
    out.push_back(*ranked[i].word);
  }
  if (!has_lambda) {
    if (out.size() == limit && !out.empty()) out.pop_back();
    out.push_back(Word{});
  }
  return out;
}

}  // namespace detail

/// Basis from the most frequent prefixes and suffixes of the sample. The
/// prefix set is prefix-closed after truncation, so it may exceed
/// `max_prefixes`.
inline Basis build_basis(const SampleSet& samples, std::size_t max_prefixes, std::size_t max_suffixes) {
  if (samples.empty()) throw ConfigError("cannot build a basis from an empty sample");
  if (max_prefixes < 1 || max_suffixes < 1) throw ConfigError("basis sizes must be at least 1");
  const auto occurrences = count_substring_occurrences(samples);
  std::vector<detail::RankedAffix> pre, suf;
  for (const auto& [w, c] : occurrences) {
    if (c.prefix > 0) pre.push_back({c.prefix, &w});
    if (c.suffix > 0) suf.push_back({c.suffix, &w});
  }
  std::vector<Word> prefixes = prefix_closure(detail::top_affixes(std::move(pre), max_prefixes));
  std::vector<Word> suffixes = detail::top_affixes(std::move(suf), max_suffixes);
  std::sort(suffixes.begin(), suffixes.end(), shortlex_less);
  return Basis(samples.alphabet(), std::move(prefixes), std::move(suffixes));
}

/// Empirical Hankel: h_full[u, v] = frequency of uv in the sample (0 if unseen).
inline HankelBlocks estimate_hankel(const SampleSet& samples, const Basis& basis) {
  if (!(samples.alphabet() == basis.alphabet())) throw ConfigError("basis and sample alphabets differ");
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(basis.closed_prefixes().size()),
                          static_cast<Eigen::Index>(basis.suffixes().size()));
  if (samples.total() > 0) {
    const double total = static_cast<double>(samples.total());
    // Every (u, v) with uv = w is a split of w, so walk the splits of the
    // sampled words instead of the whole P' x S grid.
    for (const auto& [w, m] : samples.counts()) {
      const double freq = static_cast<double>(m) / total;
      for (std::size_t i = 0; i <= w.size(); ++i) {
        const int r = basis.closed_index(Word(w.begin(), w.begin() + i));
        if (r < 0) continue;
        const int c = basis.suffix_index(Word(w.begin() + i, w.end()));
        if (c >= 0) h(r, c) = freq;
      }
    }
  }
  return partition_hankel(basis, std::move(h));
}

/// Hankel blocks of the function computed by `wfa`, by direct evaluation.
inline HankelBlocks exact_hankel_from_wfa(const Wfa& wfa, const Basis& basis) {
  if (!(wfa.alphabet() == basis.alphabet())) throw ConfigError("basis and automaton alphabets differ");
  const auto& rows = basis.closed_prefixes();
  const auto& cols = basis.suffixes();
  Matrix left(static_cast<Eigen::Index>(rows.size()), wfa.states());
  for (std::size_t i = 0; i < rows.size(); ++i) left.row(i) = wfa.advance(wfa.initial_state(), rows[i]);
  Matrix right(wfa.states(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) right.col(j) = wfa.suffix_vector(cols[j]);
  return partition_hankel(basis, left * right);
}

/// All words of length <= max_len in shortlex order.
inline std::vector<Word> all_words(const Alphabet& alphabet, std::size_t max_len) {
  std::vector<Word> out{Word{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (Symbol s = 0; s < alphabet.size; ++s) {
        Word w = out[i];
        w.push_back(s);
        out.push_back(std::move(w));
      }
    }
    begin = end;
  }
  return out;
}

/// Basis whose prefixes and suffixes are all words up to the given lengths.
inline Basis complete_basis(const Alphabet& alphabet, std::size_t prefix_len, std::size_t suffix_len) {
  return Basis(alphabet, all_words(alphabet, prefix_len), all_words(alphabet, suffix_len));
}

}  // namespace nlwfa

#endif  // NLWFA_HANKEL_HPP_
