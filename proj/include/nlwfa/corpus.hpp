// corpus.hpp
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
// Alphabets, words and sample multisets, plus the SPICE text format.
//
// SPICE layout:
//   line 1:        N A            (number of sequences, alphabet size)
//   lines 2..N+1:  L s1 s2 ... sL (L = 0 encodes the empty word)

#ifndef NLWFA_CORPUS_HPP_
#define NLWFA_CORPUS_HPP_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nlwfa/common.hpp"

namespace nlwfa {

using Symbol = std::int32_t;

/// A word over a dense integer alphabet. The empty vector is the empty word.
using Word = std::vector<Symbol>;

struct Alphabet {
  int size = 1;
  /// Optional display names; names[s] is the external name of symbol s.
  std::vector<std::string> names;

  bool contains(Symbol s) const { return s >= 0 && s < size; }

  std::string name(Symbol s) const {
    if (static_cast<std::size_t>(s) < names.size()) return names[s];
    return std::to_string(s);
  }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.size == b.size; }
};

inline Word concat(const Word& u, const Word& v) {
  Word w;
  w.reserve(u.size() + v.size());
  w.insert(w.end(), u.begin(), u.end());
  w.insert(w.end(), v.begin(), v.end());
  return w;
}

inline Word concat(const Word& u, Symbol s, const Word& v) {
  Word w;
  w.reserve(u.size() + 1 + v.size());
  w.insert(w.end(), u.begin(), u.end());
  w.push_back(s);
  w.insert(w.end(), v.begin(), v.end());
  return w;
}

/// Shortlex order: shorter first, then lexicographic by symbol id.
inline bool shortlex_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

/// Renders a word with the alphabet's display names, "" for the empty word.
inline std::string to_string(const Word& w, const Alphabet& alphabet) {
  std::string out;
  bool single_chars = true;
  for (Symbol s : w) single_chars = single_chars && alphabet.name(s).size() == 1;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i > 0 && !single_chars) out += ' ';
    out += alphabet.name(w[i]);
  }
  return out;
}

/// A multiset of words with the order of insertion preserved.
class SampleSet {
 public:
  SampleSet() = default;
  explicit SampleSet(Alphabet alphabet) : alphabet_(std::move(alphabet)) {}
  SampleSet(Alphabet alphabet, const std::vector<Word>& words) : alphabet_(std::move(alphabet)) {
    for (const Word& w : words) add(w);
  }

  void add(const Word& w) {
    for (Symbol s : w) {
      if (!alphabet_.contains(s)) {
        throw ConfigError("symbol " + std::to_string(s) + " out of range");
      }
    }
    words_.push_back(w);
    ++counts_[w];
  }

  const Alphabet& alphabet() const { return alphabet_; }
  /// Words in insertion order, with repetitions.
  const std::vector<Word>& words() const { return words_; }
  /// Distinct words with their multiplicities, in lexicographic order.
  const std::map<Word, std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  std::uint64_t multiplicity(const Word& w) const {
    auto it = counts_.find(w);
    return it == counts_.end() ? 0 : it->second;
  }

 private:
  Alphabet alphabet_;
  std::vector<Word> words_;
  std::map<Word, std::uint64_t> counts_;
};

/// multiplicity(w) / total.
inline double empirical_frequency(const SampleSet& samples, const Word& w) {
  if (samples.total() == 0) throw ConfigError("empirical frequency of an empty sample");
  return static_cast<double>(samples.multiplicity(w)) / static_cast<double>(samples.total());
}

struct AffixCounts {
  std::uint64_t prefix = 0;
  std::uint64_t suffix = 0;
};

/// Counts, for every prefix and suffix of every sampled word (including the
/// empty word and the word itself), how many sampled words have it as such.
inline std::map<Word, AffixCounts> count_substring_occurrences(const SampleSet& samples) {
  std::map<Word, AffixCounts> out;
  for (const auto& [w, m] : samples.counts()) {
    for (std::size_t n = 0; n <= w.size(); ++n) {
      out[Word(w.begin(), w.begin() + n)].prefix += m;
      out[Word(w.end() - n, w.end())].suffix += m;
    }
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

inline long long parse_int(std::string_view tok, std::size_t line_no) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(line_no, "expected an integer, got '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace detail

/// Parses SPICE text. Accepts LF or CRLF; rejects empty lines.
inline SampleSet parse_spice(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line()) throw ParseError(1, "missing header");
  auto header = detail::split_ws(line);
  if (header.size() != 2) throw ParseError(line_no, "header must be 'num_sequences alphabet_size'");
  const long long n = detail::parse_int(header[0], line_no);
  const long long a = detail::parse_int(header[1], line_no);
  if (n < 0) throw ParseError(line_no, "negative sequence count");
  if (a < 1) throw ParseError(line_no, "alphabet size must be positive");

  SampleSet samples(Alphabet{static_cast<int>(a), {}});
  for (long long i = 0; i < n; ++i) {
    if (!next_line()) {
      throw ParseError(line_no + 1, "expected " + std::to_string(n) + " sequences, found " + std::to_string(i));
    }
    auto tokens = detail::split_ws(line);
    if (tokens.empty()) throw ParseError(line_no, "empty line");
    const long long len = detail::parse_int(tokens[0], line_no);
    if (len < 0 || static_cast<std::size_t>(len) != tokens.size() - 1) {
      throw ParseError(line_no, "declared length " + std::to_string(len) + " but found " +
                                    std::to_string(tokens.size() - 1) + " symbols");
    }
    Word w;
    w.reserve(static_cast<std::size_t>(len));
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const long long s = detail::parse_int(tokens[t], line_no);
      if (s < 0 || s >= a) throw ParseError(line_no, "symbol " + std::to_string(s) + " out of range");
      w.push_back(static_cast<Symbol>(s));
    }
    samples.add(w);
  }
  while (next_line()) {
    if (!line.empty()) throw ParseError(line_no, "trailing content after declared sequences");
  }
  return samples;
}

inline SampleSet load_spice(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_spice(in);
}

inline void write_spice(std::ostream& out, const SampleSet& samples) {
  out << samples.total() << ' ' << samples.alphabet().size << '\n';
  for (const Word& w : samples.words()) {
    out << w.size();
    for (Symbol s : w) out << ' ' << s;
    out << '\n';
  }
}

inline std::string to_spice(const SampleSet& samples) {
  std::ostringstream out;
  write_spice(out, samples);
  return out.str();
}

inline void save_spice(const std::string& path, const SampleSet& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_spice(out, samples);
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace nlwfa

#endif  // NLWFA_CORPUS_HPP_
