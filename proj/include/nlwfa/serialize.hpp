// serialize.hpp
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
// JSON documents for Wfa, Mlp and NlWfa; a directory layout for Hankel
// blocks; JSON and CSV renderings of evaluation reports.
//
// Doubles are written in the shortest form that parses back to the same
// bits, so every document round-trips exactly.
//
// Dense matrix text format (Hankel blocks):
//   rows cols
//   v00 v01 ...        (one line per row, %.17g)

#ifndef NLWFA_SERIALIZE_HPP_
#define NLWFA_SERIALIZE_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlwfa/common.hpp"
#include "nlwfa/corpus.hpp"
#include "nlwfa/eval.hpp"
#include "nlwfa/hankel.hpp"
#include "nlwfa/neural.hpp"
#include "nlwfa/nlwfa.hpp"
#include "nlwfa/wfa.hpp"

namespace nlwfa {

using Json = nlohmann::json;

namespace detail {

inline Json vector_json(const Eigen::Ref<const Vector>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json row_json(const RowVector& v) { return vector_json(v.transpose()); }

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Vector json_vector(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected a JSON array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline RowVector json_row(const Json& j) { return json_vector(j).transpose(); }

inline Matrix json_matrix(const Json& j, Eigen::Index cols_if_empty = 0) {
  if (!j.is_array()) throw ConfigError("expected a JSON array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& r = j[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.size()) != cols) throw ConfigError("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Json alphabet_json(const Alphabet& a) {
  Json j{{"size", a.size}};
  if (!a.names.empty()) j["names"] = a.names;
  return j;
}

inline Alphabet json_alphabet(const Json& j) {
  Alphabet a;
  a.size = j.at("size").get<int>();
  if (j.contains("names")) a.names = j.at("names").get<std::vector<std::string>>();
  if (a.size < 1) throw ConfigError("alphabet size must be positive");
  return a;
}

inline Json words_json(const std::vector<Word>& words) {
  Json a = Json::array();
  for (const Word& w : words) a.push_back(w);
  return a;
}

inline std::vector<Word> json_words(const Json& j) { return j.get<std::vector<Word>>(); }

}  // namespace detail

// ---- Wfa -------------------------------------------------------------------

inline Json to_json(const Wfa& wfa) {
  Json trans = Json::array();
  for (const Matrix& a : wfa.transitions()) trans.push_back(detail::matrix_json(a));
  return Json{{"type", "wfa"},
              {"alphabet_size", wfa.alphabet().size},
              {"k", wfa.states()},
              {"alpha0", detail::vector_json(wfa.alpha0())},
              {"alpha_inf", detail::vector_json(wfa.alpha_inf())},
              {"transitions", std::move(trans)}};
}

inline Wfa wfa_from_json(const Json& j) {
  const int k = j.at("k").get<int>();
  std::vector<Matrix> trans;
  for (const Json& t : j.at("transitions")) trans.push_back(detail::json_matrix(t, k));
  Alphabet a{j.at("alphabet_size").get<int>(), {}};
  Vector a0 = detail::json_vector(j.at("alpha0"));
  if (a0.size() != k) throw ConfigError("alpha0 length differs from k");
  return Wfa(a, std::move(a0), detail::json_vector(j.at("alpha_inf")), std::move(trans));
}

// ---- Mlp -------------------------------------------------------------------

inline Json to_json(const Mlp& net) {
  Json layers = Json::array();
  for (const Layer& l : net.layers()) {
    layers.push_back(Json{{"in", l.in_dim()},
                          {"out", l.out_dim()},
                          {"activation", to_string(l.activation)},
                          {"weights", detail::matrix_json(l.weights)},
                          {"bias", detail::row_json(l.bias)}});
  }
  return Json{{"use_bias", net.use_bias()}, {"layers", std::move(layers)}};
}

inline Mlp mlp_from_json(const Json& j) {
  std::vector<Layer> layers;
  for (const Json& lj : j.at("layers")) {
    Layer l;
    l.weights = detail::json_matrix(lj.at("weights"), lj.at("out").get<int>());
    l.bias = detail::json_row(lj.at("bias"));
    l.activation = activation_from_string(lj.at("activation").get<std::string>());
    if (l.in_dim() != lj.at("in").get<int>() || l.out_dim() != lj.at("out").get<int>()) {
      throw ConfigError("layer dimensions disagree with weights");
    }
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers), j.value("use_bias", true));
}

// ---- NlWfa -----------------------------------------------------------------

inline Json to_json(const VectorMap& map) {
  if (const auto* lin = std::get_if<LinearMap>(&map)) {
    return Json{{"kind", "linear"}, {"rows", lin->matrix.rows()}, {"cols", lin->matrix.cols()},
                {"matrix", detail::matrix_json(lin->matrix)}};
  }
  if (const auto* net = std::get_if<NetworkMap>(&map)) {
    Json j{{"kind", "network"}, {"mlp", to_json(net->net)}};
    if (net->in_scale.size()) j["in_scale"] = detail::row_json(net->in_scale);
    if (net->in_shift.size()) j["in_shift"] = detail::row_json(net->in_shift);
    if (net->out_scale.size()) j["out_scale"] = detail::row_json(net->out_scale);
    if (net->out_shift.size()) j["out_shift"] = detail::row_json(net->out_shift);
    return j;
  }
  throw ConfigError("custom maps cannot be serialized");
}

inline VectorMap map_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    Matrix m = detail::json_matrix(j.at("matrix"), j.value("cols", 0));
    return LinearMap{std::move(m)};
  }
  if (kind == "network") {
    NetworkMap n{mlp_from_json(j.at("mlp")), {}, {}, {}, {}};
    if (j.contains("in_scale")) n.in_scale = detail::json_row(j.at("in_scale"));
    if (j.contains("in_shift")) n.in_shift = detail::json_row(j.at("in_shift"));
    if (j.contains("out_scale")) n.out_scale = detail::json_row(j.at("out_scale"));
    if (j.contains("out_shift")) n.out_shift = detail::json_row(j.at("out_shift"));
    return n;
  }
  throw ConfigError("unknown map kind '" + kind + "'");
}

inline Json to_json(const NlWfa& model) {
  Json trans = Json::array();
  for (const TransitionFn& t : model.transitions()) trans.push_back(to_json(t));
  return Json{{"type", "nlwfa"},
              {"variant", to_string(model.variant())},
              {"k", model.states()},
              {"alphabet", detail::alphabet_json(model.alphabet())},
              {"alpha0", detail::row_json(model.alpha0())},
              {"termination",
               Json{{"lambda_index", model.termination().lambda_index},
                    {"decoder", to_json(model.termination().decoder)}}},
              {"transitions", std::move(trans)}};
}

inline NlWfa nlwfa_from_json(const Json& j) {
  std::vector<TransitionFn> trans;
  for (const Json& t : j.at("transitions")) trans.push_back(map_from_json(t));
  const Json& term = j.at("termination");
  RowVector a0 = detail::json_row(j.at("alpha0"));
  if (a0.size() != j.at("k").get<int>()) throw ConfigError("alpha0 length differs from k");
  return NlWfa(detail::json_alphabet(j.at("alphabet")), std::move(a0), std::move(trans),
               TerminationFn{map_from_json(term.at("decoder")), term.at("lambda_index").get<int>()},
               variant_from_string(j.at("variant").get<std::string>()));
}

// ---- files -----------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

inline Json load_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline void save_json(const std::string& path, const Json& j) { write_file(path, j.dump(1) + "\n"); }

// ---- Hankel blocks ---------------------------------------------------------

inline std::string matrix_text(const Matrix& m) {
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline Matrix parse_matrix_text(const std::string& text) {
  std::istringstream in(text);
  Eigen::Index rows = -1, cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) throw ParseError(1, "matrix header must be 'rows cols'");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) throw ParseError(static_cast<std::size_t>(i) + 2, "missing matrix entry");
    }
  }
  return m;
}

/// Writes basis.json, h_full.txt, h_lambda.txt and h_sigma_<s>.txt into `dir`.
inline void save_hankel(const std::string& dir, const HankelBlocks& h) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const Basis& b = h.basis;
  save_json((fs::path(dir) / "basis.json").string(),
            Json{{"alphabet", detail::alphabet_json(b.alphabet())},
                 {"prefixes", detail::words_json(b.prefixes())},
                 {"closed_prefixes", detail::words_json(b.closed_prefixes())},
                 {"suffixes", detail::words_json(b.suffixes())}});
  write_file((fs::path(dir) / "h_full.txt").string(), matrix_text(h.h_full));
  write_file((fs::path(dir) / "h_lambda.txt").string(), matrix_text(h.h_lambda));
  for (std::size_t s = 0; s < h.h_sigma.size(); ++s) {
    write_file((fs::path(dir) / ("h_sigma_" + std::to_string(s) + ".txt")).string(), matrix_text(h.h_sigma[s]));
  }
}

/// Reads the directory written by save_hankel. The blocks are re-sliced from
/// h_full, and the stored closed prefix order is checked against the basis.
inline HankelBlocks load_hankel(const std::string& dir) {
  namespace fs = std::filesystem;
  const Json bj = load_json((fs::path(dir) / "basis.json").string());
  Basis basis(detail::json_alphabet(bj.at("alphabet")), detail::json_words(bj.at("prefixes")),
              detail::json_words(bj.at("suffixes")));
  if (bj.contains("closed_prefixes") && detail::json_words(bj.at("closed_prefixes")) != basis.closed_prefixes()) {
    throw ConfigError("closed prefix order in basis.json does not match its prefixes");
  }
  Matrix full = parse_matrix_text(read_file((fs::path(dir) / "h_full.txt").string()));
  return partition_hankel(std::move(basis), std::move(full));
}

inline Json basis_json(const Basis& b) {
  return Json{{"alphabet", detail::alphabet_json(b.alphabet())},
              {"prefixes", detail::words_json(b.prefixes())},
              {"suffixes", detail::words_json(b.suffixes())}};
}

inline Basis basis_from_json(const Json& j) {
  return Basis(detail::json_alphabet(j.at("alphabet")), detail::json_words(j.at("prefixes")),
               detail::json_words(j.at("suffixes")));
}

// ---- reports ---------------------------------------------------------------

inline Json to_json(const EvalReport& r, const Alphabet& alphabet) {
  Json j{{"pautomac", r.pautomac},
         {"log2_pautomac", r.log2_pautomac},
         {"wer", r.wer},
         {"num_test", r.num_test},
         {"num_prediction_events", r.num_prediction_events},
         {"num_errors", r.num_errors},
         {"p_star_source", r.p_star_source}};
  if (!r.details.empty()) {
    Json d = Json::array();
    for (const EvalDetail& e : r.details) {
      d.push_back(Json{{"word", to_string(e.word, alphabet)},
                       {"count", e.count},
                       {"p_star", e.p_star},
                       {"p_model", e.p_model},
                       {"raw_model", e.raw_model}});
    }
    j["details"] = std::move(d);
  }
  return j;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline const char* kReportCsvHeader = "variant,k,sample_size,seed,pautomac,log2_pautomac,wer";

inline std::string report_csv_row(const std::string& variant, int k, std::uint64_t sample_size, std::uint64_t seed,
                                  const EvalReport& r) {
  return variant + "," + std::to_string(k) + "," + std::to_string(sample_size) + "," + std::to_string(seed) + "," +
         format_double(r.pautomac) + "," + format_double(r.log2_pautomac) + "," + format_double(r.wer);
}

}  // namespace nlwfa

#endif  // NLWFA_SERIALIZE_HPP_
