// nlwfa.cpp
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
// Command-line front end: generate, train, eval, sweep.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nlwfa/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kDiverged = 3, kIo = 4 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<int> rank;
  std::string out;
  std::optional<int> jobs;
  std::string train, validation, test, oracle, model;
  bool details = false;
};

nlwfa::ExperimentConfig resolve(const Flags& f) {
  nlwfa::ExperimentConfig c = f.config.empty() ? nlwfa::ExperimentConfig{}
                                               : nlwfa::config_from_json(nlwfa::load_json(f.config));
  if (f.seed) {
    c.seed = *f.seed;
    c.seeds = {*f.seed};
  }
  if (f.variant) {
    c.variant = nlwfa::variant_from_string(*f.variant);
    c.variants = {c.variant};
  }
  if (f.rank) {
    c.rank = *f.rank;
    c.ranks = {*f.rank};
  }
  if (f.jobs) c.jobs = *f.jobs;
  if (!f.train.empty()) c.data.train = f.train;
  if (!f.validation.empty()) c.data.validation = f.validation;
  if (!f.test.empty()) c.data.test = f.test;
  if (!f.oracle.empty()) c.data.oracle = f.oracle;
  return c;
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON configuration file");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--variant", f.variant, "sp, fac.non, tran.non or both.non");
  app->add_option("--rank", f.rank, "number of states k (0 picks k from the singular-value gap)");
  app->add_option("--jobs", f.jobs, "worker threads for sweeps");
}

int run(int argc, char** argv) {
  CLI::App app{"Spectral and neural learning of weighted automata"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* gen = app.add_subcommand("generate", "sample Dyck train/validation/test sets and an oracle file");
  add_common(gen, f);
  gen->add_option("--out", f.out, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "learn a model from a SPICE training file");
  add_common(train, f);
  train->add_option("--train", f.train, "training SPICE file (overrides data.train)");
  train->add_option("--out", f.out, "output directory for model.json and train_log.csv")->required();

  CLI::App* eval = app.add_subcommand("eval", "score a model on a test set");
  add_common(eval, f);
  eval->add_option("--model", f.model, "model JSON")->required();
  eval->add_option("--test", f.test, "test SPICE file (overrides data.test)");
  eval->add_option("--oracle", f.oracle, "oracle file; empirical test frequencies are used without one");
  eval->add_option("--out", f.out, "also write report.json and report.csv here");
  eval->add_flag("--details", f.details, "include per-string values in the JSON report");

  CLI::App* sweep = app.add_subcommand("sweep", "train and evaluate every grid cell");
  add_common(sweep, f);
  sweep->add_option("--train", f.train, "training SPICE file; Dyck data is generated without one");
  sweep->add_option("--validation", f.validation, "validation SPICE file");
  sweep->add_option("--test", f.test, "test SPICE file");
  sweep->add_option("--oracle", f.oracle, "oracle file");
  sweep->add_option("--out", f.out, "output directory for sweep.csv (stdout without one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (gen->parsed()) {
      nlwfa::cmd_generate(resolve(f), f.out);
    } else if (train->parsed()) {
      const auto out = nlwfa::cmd_train(resolve(f), f.out);
      std::cout << "k=" << out.result.model.states() << " objective_j=" << nlwfa::format_double(out.result.objective)
                << "\n";
    } else if (eval->parsed()) {
      const nlwfa::ExperimentConfig c = resolve(f);
      if (c.data.test.empty()) throw nlwfa::ConfigError("no test file given (--test or data.test)");
      const nlwfa::LoadedModel m = nlwfa::load_model(f.model);
      const nlwfa::EvalReport r = nlwfa::cmd_eval(f.model, c.data.test, c.data.oracle, f.details);
      nlwfa::Json j = nlwfa::to_json(r, m.alphabet());
      j["model"] = {{"variant", m.variant}, {"k", m.k}};
      const std::string csv = std::string(nlwfa::kReportCsvHeader) + "\n" +
                              nlwfa::report_csv_row(m.variant, m.k, m.sample_size, m.seed, r) + "\n";
      std::cout << j.dump(1) << "\n" << csv;
      if (!f.out.empty()) {
        std::filesystem::create_directories(f.out);
        nlwfa::save_json((std::filesystem::path(f.out) / "report.json").string(), j);
        nlwfa::write_file((std::filesystem::path(f.out) / "report.csv").string(), csv);
      }
    } else if (sweep->parsed()) {
      const nlwfa::SweepResult r = nlwfa::cmd_sweep(resolve(f));
      if (f.out.empty()) {
        std::cout << r.csv();
      } else {
        std::filesystem::create_directories(f.out);
        nlwfa::write_file((std::filesystem::path(f.out) / "sweep.csv").string(), r.csv());
      }
    }
  } catch (const nlwfa::TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const nlwfa::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const nlwfa::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kConfig;
  } catch (const nlwfa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
