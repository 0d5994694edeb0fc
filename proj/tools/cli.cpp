// Copyright 2026 The bgnlm-sindy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <cstdlib>
#include <exception>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bgnlm/csv.hpp"
#include "bgnlm/experiment.hpp"

namespace bgnlm::cli {

namespace {

int threads_from_env(int fallback) {
  const char* env = std::getenv("BGNLM_SINDY_THREADS");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    const int n = std::stoi(env);
    if (n >= 1) return n;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("BGNLM_SINDY_THREADS must be a positive integer, got '") + env + "'");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse identification of dynamical systems with Bayesian generalized nonlinear models",
               "bgnlm-sindy"};
  app.set_version_flag("--version", BGNLM_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  int threads = 0;
  bool resume = false;
  auto* run = app.add_subcommand("run", "Run an experiment grid");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--threads", threads, "Worker threads (overridden by BGNLM_SINDY_THREADS)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--resume", resume, "Skip cells already completed in the output directory");

  std::string system;
  std::string dataset_out;
  double dt = 1e-3;
  double horizon = 50.0;
  int noise_k = -1;
  std::uint64_t seed = 1;
  SplitSizes sizes{1000, 1000, 500};
  double interior_lo = SplitRegions{}.interior_lo;
  double interior_hi = -1.0;
  auto* simulate = app.add_subcommand("simulate", "Write one simulated dataset as CSV");
  simulate->add_option("--system", system, "Linear3D, Lorenz3D or Hybrid3D")->required();
  simulate->add_option("--out", dataset_out, "Output CSV path")->required();
  simulate->add_option("--dt", dt, "Step size")->capture_default_str();
  simulate->add_option("--horizon", horizon, "End time")->capture_default_str();
  simulate->add_option("--noise-k", noise_k, "Noise level k (sd 0.1*2^k); noise-free if omitted");
  simulate->add_option("--seed", seed, "Noise and split seed")->capture_default_str();
  simulate->add_option("--train", sizes.train, "Training rows")->capture_default_str();
  simulate->add_option("--insample", sizes.insample, "In-sample test rows")->capture_default_str();
  simulate->add_option("--oos", sizes.oos, "Out-of-sample test rows")->capture_default_str();
  simulate->add_option("--interior-lo", interior_lo, "Start of the interior region")
      ->capture_default_str();
  simulate->add_option("--interior-hi", interior_hi,
                       "End of the interior region (default: horizon - 0.5)");

  std::string curves_in;
  std::string curves_out;
  auto* curves = app.add_subcommand("curves", "Aggregate metrics.csv into curves.csv");
  curves->add_option("--in", curves_in, "metrics.csv")->required();
  curves->add_option("--out", curves_out, "curves.csv")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "Check a config file");
  validate->add_option("path,--config", validate_path, "Experiment config (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << BGNLM_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUserError;
  }

  try {
    if (run->parsed()) {
      ExperimentConfig config = load_config(config_path);
      validate_config(config);
      RunOptions options;
      options.resume = resume;
      options.threads = threads_from_env(threads);
      options.log = &err;
      const RunSummary s = run_experiment(config, options);
      out << "completed " << s.completed << ", skipped " << s.skipped << ", failed " << s.failed
          << '\n';
      return s.failed > 0 ? kExitRuntimeError : kExitOk;
    }
    if (simulate->parsed()) {
      auto id = system_from_name(system);
      if (!id) {
        err << "error: unknown system '" << system << "'\n";
        return kExitUserError;
      }
      if (!(dt > 0.0) || !(horizon > dt)) {
        err << "error: need 0 < dt < horizon\n";
        return kExitUserError;
      }
      const SimulatedSystem sim = simulate_with_derivatives(*id, dt, horizon);
      const double sd = noise_k >= 0 ? noise_sd_for_level(noise_k) : 0.0;
      const SplitRegions regions{interior_lo, interior_hi < 0.0 ? horizon - 0.5 : interior_hi};
      const TrajectoryDataset data = make_dataset(sim, sd, seed, sizes, seed, regions);
      std::ofstream file(dataset_out);
      if (!file) {
        err << "error: cannot write " << dataset_out << '\n';
        return kExitRuntimeError;
      }
      write_dataset_csv(file, data);
      return file ? kExitOk : kExitRuntimeError;
    }
    if (curves->parsed()) {
      std::ifstream in(curves_in);
      if (!in) {
        err << "error: cannot read " << curves_in << '\n';
        return kExitUserError;
      }
      const CurvesResult result = emit_curves(csv::read_table(in));
      for (const auto& m : result.missing) err << "missing cell " << m << '\n';
      std::ofstream file(curves_out);
      if (!file) {
        err << "error: cannot write " << curves_out << '\n';
        return kExitRuntimeError;
      }
      write_curves_csv(file, result);
      return file ? kExitOk : kExitRuntimeError;
    }
    if (validate->parsed()) {
      if (validate_path.empty()) {
        err << "error: validate-config needs a config path\n\n" << validate->help();
        return kExitUserError;
      }
      validate_config(load_config(validate_path));
      out << validate_path << ": ok\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitUserError;
}

}  // namespace bgnlm::cli
