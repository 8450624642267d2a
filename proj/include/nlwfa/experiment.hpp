// experiment.hpp
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
// Experiment orchestration behind the command-line tool: configuration,
// dataset generation, training, evaluation and grid sweeps.

#ifndef NLWFA_EXPERIMENT_HPP_
#define NLWFA_EXPERIMENT_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nlwfa/common.hpp"
#include "nlwfa/corpus.hpp"
#include "nlwfa/dyck.hpp"
#include "nlwfa/eval.hpp"
#include "nlwfa/hankel.hpp"
#include "nlwfa/nlwfa.hpp"
#include "nlwfa/serialize.hpp"

namespace nlwfa {

struct DyckConfig {
  DyckGrammar grammar{};
  std::size_t max_len = 100;
  std::size_t train_size = 20000;
  std::size_t validation_size = 250;
  std::size_t test_size = 250;
};

struct DataPaths {
  std::string train, validation, test, oracle;
};

struct ExperimentConfig {
  Variant variant = Variant::both_non;
  std::vector<Variant> variants{Variant::sp, Variant::fac_non, Variant::tran_non, Variant::both_non};
  int rank = 5;
  std::vector<int> ranks{1, 2, 3, 4, 5};
  std::size_t basis_prefixes = 1000;
  std::size_t basis_suffixes = 1000;
  std::vector<int> factorization_hidden{2, 1, 2};
  int transition_hidden = 2;
  bool use_bias = true;
  TrainConfig factorization_train{500, 32, 0, 0.015, true, 50};
  TrainConfig transition_train{500, 32, 0, 0.001, true, 50};
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::size_t> sample_sizes{20000};
  DyckConfig dyck{};
  DataPaths data{};
  int jobs = 1;

  LearnOptions learn_options(std::uint64_t seed_value) const {
    LearnOptions o;
    o.max_prefixes = basis_prefixes;
    o.max_suffixes = basis_suffixes;
    o.hidden_multipliers = factorization_hidden;
    o.factorization.use_bias = use_bias;
    o.transition.hidden_multiplier = transition_hidden;
    o.transition.use_bias = use_bias;
    o.factorization_train = factorization_train;
    o.transition_train = transition_train;
    o.seed = seed_value;
    return o;
  }

  void validate() const {
    if (variants.empty()) throw ConfigError("variant grid is empty");
    if (ranks.empty()) throw ConfigError("rank grid is empty");
    if (seeds.empty()) throw ConfigError("seed list is empty");
    if (sample_sizes.empty()) throw ConfigError("sample size grid is empty");
    for (int k : ranks) {
      if (k < 1) throw ConfigError("ranks must be positive");
    }
    if (rank < 0) throw ConfigError("rank must be positive, or 0 for automatic selection");
    if (basis_prefixes < 1 || basis_suffixes < 1) throw ConfigError("basis sizes must be positive");
    if (factorization_hidden.empty()) throw ConfigError("factorization architecture is empty");
    if (transition_hidden < 1) throw ConfigError("transition hidden multiplier must be positive");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    factorization_train.validate();
    transition_train.validate();
    dyck.grammar.validate();
    if (dyck.max_len < 2) throw ConfigError("max_len must be at least 2");
  }
};

namespace detail {

inline TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("shuffle")) c.shuffle = j.at("shuffle").get<bool>();
  if (j.contains("patience")) {
    if (j.at("patience").is_null()) {
      c.early_stop_patience.reset();
    } else {
      c.early_stop_patience = j.at("patience").get<int>();
    }
  }
  return c;
}

inline Json train_config_json(const TrainConfig& c) {
  Json j{{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"batch_size", c.batch_size}, {"shuffle", c.shuffle}};
  j["patience"] = c.early_stop_patience ? Json(*c.early_stop_patience) : Json(nullptr);
  return j;
}

}  // namespace detail

/// Reads a configuration document; absent fields keep their defaults.
inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) c.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    if (j.contains("rank")) c.rank = j.at("rank").get<int>();
    if (j.contains("ranks")) c.ranks = j.at("ranks").get<std::vector<int>>();
    if (j.contains("basis")) {
      const Json& b = j.at("basis");
      if (b.contains("prefixes")) c.basis_prefixes = b.at("prefixes").get<std::size_t>();
      if (b.contains("suffixes")) c.basis_suffixes = b.at("suffixes").get<std::size_t>();
    }
    if (j.contains("factorization_hidden")) c.factorization_hidden = j.at("factorization_hidden").get<std::vector<int>>();
    if (j.contains("transition_hidden")) c.transition_hidden = j.at("transition_hidden").get<int>();
    if (j.contains("use_bias")) c.use_bias = j.at("use_bias").get<bool>();
    if (j.contains("factorization_train")) {
      c.factorization_train = detail::train_config_from_json(j.at("factorization_train"), c.factorization_train);
    }
    if (j.contains("transition_train")) {
      c.transition_train = detail::train_config_from_json(j.at("transition_train"), c.transition_train);
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("sample_sizes")) c.sample_sizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
    if (j.contains("dyck")) {
      const Json& d = j.at("dyck");
      if (d.contains("p_ss")) c.dyck.grammar.p_ss = d.at("p_ss").get<double>();
      if (d.contains("p_wrap")) c.dyck.grammar.p_wrap = d.at("p_wrap").get<double>();
      if (d.contains("p_leaf")) c.dyck.grammar.p_leaf = d.at("p_leaf").get<double>();
      if (d.contains("max_len")) c.dyck.max_len = d.at("max_len").get<std::size_t>();
      if (d.contains("train_size")) c.dyck.train_size = d.at("train_size").get<std::size_t>();
      if (d.contains("validation_size")) c.dyck.validation_size = d.at("validation_size").get<std::size_t>();
      if (d.contains("test_size")) c.dyck.test_size = d.at("test_size").get<std::size_t>();
    }
    if (j.contains("data")) {
      const Json& d = j.at("data");
      c.data.train = d.value("train", "");
      c.data.validation = d.value("validation", "");
      c.data.test = d.value("test", "");
      c.data.oracle = d.value("oracle", "");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  return c;
}

inline Json config_json(const ExperimentConfig& c) {
  Json variants = Json::array();
  for (Variant v : c.variants) variants.push_back(to_string(v));
  return Json{{"variant", to_string(c.variant)},
              {"variants", variants},
              {"rank", c.rank},
              {"ranks", c.ranks},
              {"basis", {{"prefixes", c.basis_prefixes}, {"suffixes", c.basis_suffixes}}},
              {"factorization_hidden", c.factorization_hidden},
              {"transition_hidden", c.transition_hidden},
              {"use_bias", c.use_bias},
              {"factorization_train", detail::train_config_json(c.factorization_train)},
              {"transition_train", detail::train_config_json(c.transition_train)},
              {"seed", c.seed},
              {"seeds", c.seeds},
              {"sample_sizes", c.sample_sizes},
              {"jobs", c.jobs},
              {"dyck",
               {{"p_ss", c.dyck.grammar.p_ss},
                {"p_wrap", c.dyck.grammar.p_wrap},
                {"p_leaf", c.dyck.grammar.p_leaf},
                {"max_len", c.dyck.max_len},
                {"train_size", c.dyck.train_size},
                {"validation_size", c.dyck.validation_size},
                {"test_size", c.dyck.test_size}}},
              {"data",
               {{"train", c.data.train},
                {"validation", c.data.validation},
                {"test", c.data.test},
                {"oracle", c.data.oracle}}}};
}

// ---- oracle files ----------------------------------------------------------
//
// One line per distinct test word: the word in SPICE line form, a tab, and its
// probability (%.17g).

using OracleTable = std::map<Word, double>;

inline std::string oracle_text(const OracleTable& table) {
  std::string out;
  char buf[32];
  for (const auto& [w, p] : table) {
    out += std::to_string(w.size());
    for (Symbol s : w) out += " " + std::to_string(s);
    std::snprintf(buf, sizeof buf, "\t%.17g\n", p);
    out += buf;
  }
  return out;
}

inline OracleTable parse_oracle(const std::string& text) {
  OracleTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "expected '<word>\\t<probability>'");
    auto tokens = detail::split_ws(std::string_view(line).substr(0, tab));
    if (tokens.empty()) throw ParseError(line_no, "missing word");
    const long long len = detail::parse_int(tokens[0], line_no);
    if (len < 0 || static_cast<std::size_t>(len) + 1 != tokens.size()) throw ParseError(line_no, "length mismatch");
    Word w;
    for (std::size_t i = 1; i < tokens.size(); ++i) w.push_back(static_cast<Symbol>(detail::parse_int(tokens[i], line_no)));
    try {
      table[w] = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad probability");
    }
  }
  return table;
}

inline Oracle table_oracle(std::shared_ptr<const OracleTable> table) {
  return [table](const Word& w) {
    auto it = table->find(w);
    if (it == table->end()) throw ConfigError("oracle has no value for a test word");
    return it->second;
  };
}

inline Oracle dyck_oracle(const DyckGrammar& g) {
  return [g](const Word& w) { return inside_probability(g, w); };
}

// ---- generate --------------------------------------------------------------

struct DyckDataset {
  SampleSet train, validation, test;
};

/// Train/validation/test draws from independent streams derived from `seed`.
/// Validation and test streams do not depend on the training size.
inline DyckDataset generate_dyck(const DyckConfig& d, std::uint64_t seed, std::size_t train_size) {
  Rng train_rng(derive_seed(seed, {0x747261696e, train_size}));
  Rng val_rng(derive_seed(seed, {0x76616c}));
  Rng test_rng(derive_seed(seed, {0x74657374}));
  return DyckDataset{sample_set(d.grammar, train_rng, train_size, d.max_len),
                     sample_set(d.grammar, val_rng, d.validation_size, d.max_len),
                     sample_set(d.grammar, test_rng, d.test_size, d.max_len)};
}

/// Writes train.spice, validation.spice, test.spice, oracle.tsv and
/// symbols.json into `out_dir`.
inline void cmd_generate(const ExperimentConfig& c, const std::string& out_dir) {
  c.validate();
  if (c.dyck.train_size == 0) throw ConfigError("training set size must be positive");
  if (c.dyck.test_size == 0) throw ConfigError("test set size must be positive");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  const DyckDataset ds = generate_dyck(c.dyck, c.seed, c.dyck.train_size);
  save_spice((fs::path(out_dir) / "train.spice").string(), ds.train);
  save_spice((fs::path(out_dir) / "validation.spice").string(), ds.validation);
  save_spice((fs::path(out_dir) / "test.spice").string(), ds.test);
  OracleTable table;
  for (const auto& [w, n] : ds.test.counts()) table[w] = inside_probability(c.dyck.grammar, w);
  for (const auto& [w, n] : ds.validation.counts()) table[w] = inside_probability(c.dyck.grammar, w);
  write_file((fs::path(out_dir) / "oracle.tsv").string(), oracle_text(table));
  Json symbols = Json::object();
  const Alphabet a = dyck_alphabet();
  for (Symbol s = 0; s < a.size; ++s) symbols[std::to_string(s)] = a.name(s);
  save_json((fs::path(out_dir) / "symbols.json").string(), symbols);
}

// ---- train -----------------------------------------------------------------

struct TrainOutput {
  LearnResult result;
  Json model_document;
};

/// Model document: the NlWfa envelope plus the basis and training metadata.
inline Json model_document(const LearnResult& r, std::size_t sample_size, std::uint64_t seed) {
  Json j = to_json(r.model);
  j["basis"] = basis_json(r.hankel.basis);
  j["training"] = Json{{"sample_size", sample_size}, {"seed", seed}, {"objective_j", r.objective}};
  return j;
}

inline std::string loss_history_csv(const LearnResult& r) {
  std::string out = "phase,symbol,epoch,loss\n";
  for (std::size_t e = 0; e < r.factorization_loss.size(); ++e) {
    out += "factorization,," + std::to_string(e) + "," + format_double(r.factorization_loss[e]) + "\n";
  }
  for (std::size_t s = 0; s < r.transition_loss.size(); ++s) {
    for (std::size_t e = 0; e < r.transition_loss[s].size(); ++e) {
      out += "transition," + std::to_string(s) + "," + std::to_string(e) + "," +
             format_double(r.transition_loss[s][e]) + "\n";
    }
  }
  return out;
}

/// Largest relative drop between consecutive singular values of h_lambda,
/// searched over ranks 1..max_k.
inline int singular_value_gap_rank(const HankelBlocks& h, int max_k) {
  Eigen::BDCSVD<Matrix> svd(h.h_lambda);
  const Vector& sv = svd.singularValues();
  const int limit = std::min<int>(max_k, static_cast<int>(sv.size()) - 1);
  int best = 1;
  double best_ratio = -1.0;
  for (int k = 1; k <= limit; ++k) {
    const double ratio = sv(k) > 0 ? sv(k - 1) / sv(k) : std::numeric_limits<double>::infinity();
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  return best;
}

/// Learns the configured variant from c.data.train; writes model.json and
/// train_log.csv into `out_dir`. A rank of 0 selects k by singular-value gap.
inline TrainOutput cmd_train(const ExperimentConfig& c, const std::string& out_dir) {
  c.validate();
  if (c.data.train.empty()) throw ConfigError("no training file configured (data.train)");
  const SampleSet train = load_spice(c.data.train);
  const Basis basis = build_basis(train, c.basis_prefixes, c.basis_suffixes);
  const HankelBlocks h = estimate_hankel(train, basis);
  const int max_rank = static_cast<int>(std::min(basis.prefixes().size(), basis.suffixes().size()));
  const int k = c.rank == 0 ? singular_value_gap_rank(h, max_rank) : c.rank;
  if (k > max_rank) {
    throw ConfigError("rank " + std::to_string(k) + " exceeds min(|P|, |S|) = " + std::to_string(max_rank));
  }
  TrainOutput out;
  out.result = learn_from_hankel(h, k, c.variant, c.learn_options(c.seed));
  out.model_document = model_document(out.result, train.total(), c.seed);
  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    save_json((fs::path(out_dir) / "model.json").string(), out.model_document);
    write_file((fs::path(out_dir) / "train_log.csv").string(), loss_history_csv(out.result));
  }
  return out;
}

// ---- eval ------------------------------------------------------------------

struct LoadedModel {
  std::variant<Wfa, NlWfa> model;
  Basis basis;
  std::string variant;
  int k = 0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;

  const Alphabet& alphabet() const {
    return std::visit([](const auto& m) -> const Alphabet& { return m.alphabet(); }, model);
  }
};

/// Reads a model document (an NL-WFA from `train`, or a plain WFA). A WFA
/// without a stored basis is decoded over all suffixes of length <= 3.
inline LoadedModel load_model(const std::string& path) {
  const Json j = load_json(path);
  LoadedModel m;
  try {
    const std::string type = j.value("type", "nlwfa");
    if (type == "wfa") {
      Wfa w = wfa_from_json(j);
      m.variant = "wfa";
      m.k = w.states();
      m.basis = j.contains("basis") ? basis_from_json(j.at("basis"))
                                    : Basis(w.alphabet(), {Word{}}, all_words(w.alphabet(), 3));
      m.model = std::move(w);
    } else if (type == "nlwfa") {
      NlWfa n = nlwfa_from_json(j);
      m.variant = to_string(n.variant());
      m.k = n.states();
      if (!j.contains("basis")) throw ConfigError("model document has no basis");
      m.basis = basis_from_json(j.at("basis"));
      m.model = std::move(n);
    } else {
      throw ConfigError("unknown model type '" + type + "'");
    }
    if (j.contains("training")) {
      m.sample_size = j.at("training").value("sample_size", std::size_t{0});
      m.seed = j.at("training").value("seed", std::uint64_t{0});
    }
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return m;
}

inline EvalReport evaluate_loaded(const LoadedModel& m, const SampleSet& test, const std::optional<Oracle>& oracle,
                                  bool with_details = false) {
  if (!(m.alphabet() == test.alphabet())) {
    throw ConfigError("alphabet mismatch: model has " + std::to_string(m.alphabet().size) + " symbols, test set " +
                      std::to_string(test.alphabet().size));
  }
  return std::visit([&](const auto& model) { return evaluate_model(model, test, m.basis, oracle, with_details); },
                    m.model);
}

/// Evaluates a saved model; without an oracle file P_* falls back to the
/// empirical test distribution.
inline EvalReport cmd_eval(const std::string& model_path, const std::string& test_path,
                           const std::string& oracle_path, bool with_details = false) {
  const LoadedModel m = load_model(model_path);
  const SampleSet test = load_spice(test_path);
  std::optional<Oracle> oracle;
  if (!oracle_path.empty()) {
    oracle = table_oracle(std::make_shared<const OracleTable>(parse_oracle(read_file(oracle_path))));
  }
  return evaluate_loaded(m, test, oracle, with_details);
}

// ---- sweep -----------------------------------------------------------------

inline const char* kSweepCsvHeader =
    "kind,variant,k,sample_size,seed,status,pautomac,log2_pautomac,wer,val_pautomac,val_log2_pautomac,val_wer";

struct SweepRow {
  std::string kind;  // cell, mean, std, selected
  Variant variant = Variant::sp;
  int k = 0;
  std::size_t sample_size = 0;
  std::string seed;  // seed value, or the number of contributing seeds for summaries
  std::string status = "ok";
  double pautomac = NAN, log2_pautomac = NAN, wer = NAN;
  double val_pautomac = NAN, val_log2_pautomac = NAN, val_wer = NAN;

  bool ok() const { return status == "ok"; }
};

inline std::string sweep_csv_line(const SweepRow& r) {
  auto num = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  return r.kind + "," + to_string(r.variant) + "," + std::to_string(r.k) + "," + std::to_string(r.sample_size) + "," +
         r.seed + "," + r.status + "," + num(r.pautomac) + "," + num(r.log2_pautomac) + "," + num(r.wer) + "," +
         num(r.val_pautomac) + "," + num(r.val_log2_pautomac) + "," + num(r.val_wer);
}

struct SweepResult {
  std::vector<SweepRow> cells;
  std::vector<SweepRow> summaries;  // mean and std per (variant, k, sample_size)
  std::vector<SweepRow> selected;   // best k on validation per (variant, sample_size, seed)

  std::string csv() const {
    std::string out = std::string(kSweepCsvHeader) + "\n";
    for (const auto* rows : {&cells, &summaries, &selected}) {
      for (const SweepRow& r : *rows) out += sweep_csv_line(r) + "\n";
    }
    return out;
  }
};

namespace detail {

struct SweepData {
  SampleSet train, validation, test;
  std::optional<Oracle> oracle;
  HankelBlocks hankel;
};

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? NAN : s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1); 0 for a single value.
inline double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? NAN : 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

template <class Fn>
void run_pool(std::size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < std::min<int>(jobs, static_cast<int>(n)); ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace detail

/// Trains and evaluates every (variant, k, sample_size, seed) cell. Data for a
/// (seed, sample_size) pair is shared by all variants and ranks; each cell's
/// training seed is derived from its coordinates, so the result does not
/// depend on `jobs`. Failed cells are kept with their status and the sweep
/// continues.
inline SweepResult cmd_sweep(const ExperimentConfig& c) {
  c.validate();
  const bool from_files = !c.data.train.empty();

  std::map<std::pair<std::uint64_t, std::size_t>, detail::SweepData> data;
  std::optional<SampleSet> file_train, file_val, file_test;
  std::optional<Oracle> file_oracle;
  if (from_files) {
    file_train = load_spice(c.data.train);
    if (c.data.test.empty()) throw ConfigError("sweep over files needs data.test");
    file_test = load_spice(c.data.test);
    file_val = c.data.validation.empty() ? *file_test : load_spice(c.data.validation);
    if (!c.data.oracle.empty()) {
      file_oracle = table_oracle(std::make_shared<const OracleTable>(parse_oracle(read_file(c.data.oracle))));
    }
  }
  for (std::uint64_t seed : c.seeds) {
    for (std::size_t size : c.sample_sizes) {
      if (size == 0) throw ConfigError("sample sizes must be positive");
      detail::SweepData d;
      if (from_files) {
        const auto& words = file_train->words();
        if (size > words.size()) throw ConfigError("sample size exceeds the training file");
        d.train = SampleSet(file_train->alphabet(), std::vector<Word>(words.begin(), words.begin() + size));
        d.validation = *file_val;
        d.test = *file_test;
        d.oracle = file_oracle;
      } else {
        DyckDataset ds = generate_dyck(c.dyck, seed, size);
        d.train = std::move(ds.train);
        d.validation = std::move(ds.validation);
        d.test = std::move(ds.test);
        d.oracle = dyck_oracle(c.dyck.grammar);
      }
      d.hankel = estimate_hankel(d.train, build_basis(d.train, c.basis_prefixes, c.basis_suffixes));
      data.emplace(std::make_pair(seed, size), std::move(d));
    }
  }

  SweepResult result;
  for (Variant v : c.variants) {
    for (int k : c.ranks) {
      for (std::size_t size : c.sample_sizes) {
        for (std::uint64_t seed : c.seeds) {
          SweepRow r;
          r.kind = "cell";
          r.variant = v;
          r.k = k;
          r.sample_size = size;
          r.seed = std::to_string(seed);
          result.cells.push_back(r);
        }
      }
    }
  }

  detail::run_pool(result.cells.size(), c.jobs, [&](std::size_t i) {
    SweepRow& r = result.cells[i];
    const std::uint64_t seed = std::stoull(r.seed);
    const detail::SweepData& d = data.at({seed, r.sample_size});
    const std::uint64_t cell_seed =
        derive_seed(seed, {hash_string(to_string(r.variant)), static_cast<std::uint64_t>(r.k), r.sample_size});
    try {
      const LearnResult lr = learn_from_hankel(d.hankel, r.k, r.variant, c.learn_options(cell_seed));
      const EvalReport test = evaluate_model(lr.model, d.test, d.hankel.basis, d.oracle);
      const EvalReport val = evaluate_model(lr.model, d.validation, d.hankel.basis, d.oracle);
      r.pautomac = test.pautomac;
      r.log2_pautomac = test.log2_pautomac;
      r.wer = test.wer;
      r.val_pautomac = val.pautomac;
      r.val_log2_pautomac = val.log2_pautomac;
      r.val_wer = val.wer;
    } catch (const TrainingDiverged&) {
      r.status = "diverged";
    } catch (const DegenerateModel&) {
      r.status = "degenerate";
    } catch (const ConfigError&) {
      r.status = "config_error";
    }
  });

  // Mean and standard deviation over seeds of the successful cells.
  for (Variant v : c.variants) {
    for (int k : c.ranks) {
      for (std::size_t size : c.sample_sizes) {
        std::vector<double> cols[6];
        for (const SweepRow& r : result.cells) {
          if (r.variant != v || r.k != k || r.sample_size != size || !r.ok()) continue;
          const double vals[6] = {r.pautomac, r.log2_pautomac, r.wer, r.val_pautomac, r.val_log2_pautomac, r.val_wer};
          for (int q = 0; q < 6; ++q) cols[q].push_back(vals[q]);
        }
        for (const char* kind : {"mean", "std"}) {
          SweepRow s;
          s.kind = kind;
          s.variant = v;
          s.k = k;
          s.sample_size = size;
          s.seed = std::to_string(cols[0].size());
          s.status = cols[0].empty() ? "empty" : "ok";
          double out[6];
          for (int q = 0; q < 6; ++q) out[q] = kind[0] == 'm' ? detail::mean(cols[q]) : detail::stddev(cols[q]);
          s.pautomac = out[0];
          s.log2_pautomac = out[1];
          s.wer = out[2];
          s.val_pautomac = out[3];
          s.val_log2_pautomac = out[4];
          s.val_wer = out[5];
          result.summaries.push_back(s);
        }
      }
    }
  }

  // Rank selection: lowest validation Pautomac, ties to the smaller k.
  for (Variant v : c.variants) {
    for (std::size_t size : c.sample_sizes) {
      for (std::uint64_t seed : c.seeds) {
        const SweepRow* best = nullptr;
        for (const SweepRow& r : result.cells) {
          if (r.variant != v || r.sample_size != size || r.seed != std::to_string(seed) || !r.ok()) continue;
          if (!best || r.val_pautomac < best->val_pautomac) best = &r;
        }
        SweepRow s;
        if (best) {
          s = *best;
        } else {
          s.variant = v;
          s.sample_size = size;
          s.seed = std::to_string(seed);
          s.status = "empty";
        }
        s.kind = "selected";
        result.selected.push_back(s);
      }
    }
  }
  return result;
}

}  // namespace nlwfa

#endif  // NLWFA_EXPERIMENT_HPP_
