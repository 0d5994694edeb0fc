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

#include "bgnlm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#ifndef BGNLM_VERSION
#define BGNLM_VERSION "unknown"
#endif

namespace bgnlm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Features below this posterior inclusion probability are left out of terms.csv.
constexpr double kTermsFloor = 1e-6;

[[noreturn]] void config_fail(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) config_fail(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      config_fail(where + item.key(), "unknown key");
    }
  }
}

double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) config_fail(where + key, "expected a number");
  return v.get<double>();
}

long long get_integer(const json& obj, const std::string& where, const char* key,
                      long long fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) config_fail(where + key, "expected an integer");
  return v.get<long long>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) config_fail(where + key, "expected true or false");
  return v.get<bool>();
}

template <class T>
void require_field(bool ok, const char* field, const T& what) {
  if (!ok) config_fail(field, what);
}

std::vector<TransformKind> parse_alphabet(const json& v) {
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    if (name == "all") return {all_transforms().begin(), all_transforms().end()};
    if (name == "paper") return paper_faithful_transforms();
    config_fail("transform_alphabet", "expected \"all\", \"paper\" or a list of names");
  }
  if (!v.is_array()) config_fail("transform_alphabet", "expected a list of transform names");
  std::vector<TransformKind> out;
  for (const auto& item : v) {
    if (!item.is_string()) config_fail("transform_alphabet", "entries must be strings");
    auto kind = transform_from_name(item.get<std::string>());
    if (!kind) config_fail("transform_alphabet", "unknown transform '" + item.get<std::string>() + "'");
    if (std::find(out.begin(), out.end(), *kind) == out.end()) out.push_back(*kind);
  }
  return out;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

struct Cell {
  SystemId system;
  int k;
  int replicate;

  std::string id() const {
    return std::string(system_name(system)) + "_k" + std::to_string(k) + "_r" +
           std::to_string(replicate);
  }
};

void write_file_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string rows_to_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) csv::write_row(out, r);
  return out.str();
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "",
             {"systems", "dt", "horizon", "noise_ks", "replicates", "split_sizes", "interior",
              "sampler", "psi", "coefficient_prior", "transform_alphabet", "max_depth",
              "max_complexity", "seed_base",
              "output_dir", "threads", "paper_faithful", "fresh_trajectory_per_noise",
              "write_diagnostics"});

  ExperimentConfig c;
  if (root.contains("systems")) {
    const auto& v = root.at("systems");
    if (!v.is_array()) config_fail("systems", "expected a list of system names");
    for (const auto& s : v) {
      if (!s.is_string()) config_fail("systems", "entries must be strings");
      auto id = system_from_name(s.get<std::string>());
      if (!id) config_fail("systems", "unknown system '" + s.get<std::string>() + "'");
      c.systems.push_back(*id);
    }
  }
  c.dt = get_number(root, "", "dt", c.dt);
  c.horizon = get_number(root, "", "horizon", c.horizon);
  if (root.contains("noise_ks")) {
    const auto& v = root.at("noise_ks");
    if (!v.is_array()) config_fail("noise_ks", "expected a list of integers");
    for (const auto& k : v) {
      if (!k.is_number_integer()) config_fail("noise_ks", "entries must be integers");
      c.noise_ks.push_back(k.get<int>());
    }
  }
  c.replicates = static_cast<int>(get_integer(root, "", "replicates", c.replicates));
  if (root.contains("split_sizes")) {
    const auto& v = root.at("split_sizes");
    check_keys(v, "split_sizes.", {"train", "insample", "oos"});
    auto size = [&](const char* key, std::size_t fallback) {
      const long long n = get_integer(v, "split_sizes.", key, static_cast<long long>(fallback));
      if (n <= 0) config_fail(std::string("split_sizes.") + key, "must be positive");
      return static_cast<std::size_t>(n);
    };
    c.split_sizes.train = size("train", c.split_sizes.train);
    c.split_sizes.insample = size("insample", c.split_sizes.insample);
    c.split_sizes.oos = size("oos", c.split_sizes.oos);
  }
  if (root.contains("interior")) {
    const auto& v = root.at("interior");
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      config_fail("interior", "expected [lo, hi]");
    }
    c.regions.interior_lo = v[0].get<double>();
    c.regions.interior_hi = v[1].get<double>();
  }
  c.sampler.psi = get_number(root, "", "psi", c.sampler.psi);
  if (root.contains("coefficient_prior")) {
    const auto& v = root.at("coefficient_prior");
    auto prior = v.is_string() ? coefficient_prior_from_name(v.get<std::string>()) : std::nullopt;
    if (!prior) config_fail("coefficient_prior", "expected \"unit_information\" or \"flat\"");
    c.sampler.prior = *prior;
  }
  if (root.contains("transform_alphabet")) c.sampler.alphabet = parse_alphabet(root.at("transform_alphabet"));
  c.sampler.limits.max_depth =
      static_cast<int>(get_integer(root, "", "max_depth", c.sampler.limits.max_depth));
  c.sampler.limits.max_complexity =
      static_cast<int>(get_integer(root, "", "max_complexity", c.sampler.limits.max_complexity));
  if (root.contains("seed_base")) {
    const auto& v = root.at("seed_base");
    if (!v.is_number_unsigned() && !v.is_number_integer()) config_fail("seed_base", "expected an integer");
    c.seed_base = v.get<std::uint64_t>();
  }
  if (root.contains("output_dir")) {
    if (!root.at("output_dir").is_string()) config_fail("output_dir", "expected a path string");
    c.output_dir = root.at("output_dir").get<std::string>();
  }
  c.threads = static_cast<int>(get_integer(root, "", "threads", c.threads));
  c.paper_faithful = get_bool(root, "", "paper_faithful", c.paper_faithful);
  c.fresh_trajectory_per_noise =
      get_bool(root, "", "fresh_trajectory_per_noise", c.fresh_trajectory_per_noise);
  c.write_diagnostics = get_bool(root, "", "write_diagnostics", c.write_diagnostics);

  if (root.contains("sampler")) {
    const auto& s = root.at("sampler");
    const std::string w = "sampler.";
    check_keys(s, w,
               {"pop_size", "generations", "chains", "filtration_threshold", "modify_weight",
                "multiply_weight", "keep_originals", "slot_retries", "mjmcmc"});
    auto& t = c.sampler;
    const long long pop = get_integer(s, w, "pop_size", static_cast<long long>(t.pop_size));
    if (pop <= 0) config_fail("sampler.pop_size", "must be positive");
    t.pop_size = static_cast<std::size_t>(pop);
    t.generations = static_cast<int>(get_integer(s, w, "generations", t.generations));
    t.chains = static_cast<int>(get_integer(s, w, "chains", t.chains));
    t.filtration_threshold = get_number(s, w, "filtration_threshold", t.filtration_threshold);
    t.modify_weight = get_number(s, w, "modify_weight", t.modify_weight);
    t.multiply_weight = get_number(s, w, "multiply_weight", t.multiply_weight);
    t.keep_originals = get_bool(s, w, "keep_originals", t.keep_originals);
    t.slot_retries = static_cast<int>(get_integer(s, w, "slot_retries", t.slot_retries));
    if (s.contains("mjmcmc")) {
      const auto& m = s.at("mjmcmc");
      const std::string mw = "sampler.mjmcmc.";
      check_keys(m, mw,
                 {"iterations", "large_jump_min", "large_jump_max", "local_opt_steps",
                  "mode_jump_probability", "randomization_flip_prob"});
      auto& mj = t.mjmcmc;
      mj.iterations = static_cast<int>(get_integer(m, mw, "iterations", mj.iterations));
      mj.large_jump_min = static_cast<int>(get_integer(m, mw, "large_jump_min", mj.large_jump_min));
      mj.large_jump_max = static_cast<int>(get_integer(m, mw, "large_jump_max", mj.large_jump_max));
      mj.local_opt_steps =
          static_cast<int>(get_integer(m, mw, "local_opt_steps", mj.local_opt_steps));
      mj.mode_jump_probability = get_number(m, mw, "mode_jump_probability", mj.mode_jump_probability);
      mj.randomization_flip_prob =
          get_number(m, mw, "randomization_flip_prob", mj.randomization_flip_prob);
    }
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

void validate_config(const ExperimentConfig& c) {
  require_field(!c.systems.empty(), "systems", "must list at least one system");
  require_field(c.dt > 0.0, "dt", "must be positive");
  require_field(c.horizon > 0.0, "horizon", "must be positive");
  {
    const double ratio = c.horizon / c.dt;
    require_field(std::abs(ratio - std::round(ratio)) <= 1e-6, "horizon", "must be a multiple of dt");
    require_field(ratio >= 2.0, "horizon", "must span at least two steps");
  }
  require_field(!c.noise_ks.empty(), "noise_ks", "must list at least one noise level");
  for (int k : c.noise_ks) {
    require_field(k >= 0 && k <= 30, "noise_ks", "entries must lie in [0, 30]");
    if (c.paper_faithful) require_field(k <= 7, "noise_ks", "entries must lie in [0, 7] in paper_faithful mode");
  }
  require_field(c.replicates >= 1, "replicates", "must be at least 1");
  require_field(c.threads >= 1, "threads", "must be at least 1");
  require_field(c.regions.interior_lo < c.regions.interior_hi, "interior", "needs lo < hi");
  if (c.paper_faithful) {
    const auto allowed = paper_faithful_transforms();
    for (auto kind : c.sampler.alphabet) {
      require_field(std::find(allowed.begin(), allowed.end(), kind) != allowed.end(),
                    "transform_alphabet",
                    "'" + std::string(transform_name(kind)) + "' is not allowed in paper_faithful mode");
    }
  }
  try {
    c.sampler.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config field ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  json systems = json::array();
  for (auto s : c.systems) systems.push_back(std::string(system_name(s)));
  j["systems"] = systems;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["noise_ks"] = c.noise_ks;
  j["replicates"] = c.replicates;
  j["split_sizes"] = {{"train", c.split_sizes.train},
                      {"insample", c.split_sizes.insample},
                      {"oos", c.split_sizes.oos}};
  j["interior"] = {c.regions.interior_lo, c.regions.interior_hi};
  j["psi"] = c.sampler.psi;
  j["coefficient_prior"] = std::string(coefficient_prior_name(c.sampler.prior));
  json alphabet = json::array();
  for (auto kind : c.sampler.alphabet) alphabet.push_back(std::string(transform_name(kind)));
  j["transform_alphabet"] = alphabet;
  j["max_depth"] = c.sampler.limits.max_depth;
  j["max_complexity"] = c.sampler.limits.max_complexity;
  j["seed_base"] = c.seed_base;
  j["output_dir"] = c.output_dir.string();
  j["threads"] = c.threads;
  j["paper_faithful"] = c.paper_faithful;
  j["fresh_trajectory_per_noise"] = c.fresh_trajectory_per_noise;
  j["write_diagnostics"] = c.write_diagnostics;
  const auto& t = c.sampler;
  j["sampler"] = {{"pop_size", t.pop_size},
                  {"generations", t.generations},
                  {"chains", t.chains},
                  {"filtration_threshold", t.filtration_threshold},
                  {"modify_weight", t.modify_weight},
                  {"multiply_weight", t.multiply_weight},
                  {"keep_originals", t.keep_originals},
                  {"slot_retries", t.slot_retries},
                  {"mjmcmc",
                   {{"iterations", t.mjmcmc.iterations},
                    {"large_jump_min", t.mjmcmc.large_jump_min},
                    {"large_jump_max", t.mjmcmc.large_jump_max},
                    {"local_opt_steps", t.mjmcmc.local_opt_steps},
                    {"mode_jump_probability", t.mjmcmc.mode_jump_probability},
                    {"randomization_flip_prob", t.mjmcmc.randomization_flip_prob}}}};
  return j.dump(2);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.threads = 1;
  c.output_dir = "";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(c))));
  return buf;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (std::uint64_t p : parts) h = mix(h ^ mix(p));
  return h;
}

CellSeeds cell_seeds(const ExperimentConfig& config, SystemId system, int k, int replicate) {
  const std::uint64_t sys = fnv1a64(system_name(system));
  const auto kk = static_cast<std::uint64_t>(k);
  const auto rep = static_cast<std::uint64_t>(replicate);
  CellSeeds s;
  s.noise = derive_seed(config.seed_base, {fnv1a64("noise"), sys, kk, rep});
  s.splits = config.fresh_trajectory_per_noise
                 ? derive_seed(config.seed_base, {fnv1a64("splits"), sys, kk, rep})
                 : derive_seed(config.seed_base, {fnv1a64("splits"), sys, rep});
  s.chains.resize(kStateDim);
  for (std::size_t eq = 0; eq < kStateDim; ++eq) {
    for (int chain = 0; chain < config.sampler.chains; ++chain) {
      s.chains[eq].push_back(derive_seed(config.seed_base,
                                         {fnv1a64("chain"), sys, kk, rep, eq,
                                          static_cast<std::uint64_t>(chain)}));
    }
  }
  return s;
}

SimulatedSystem simulate_with_derivatives(SystemId id, double dt, double horizon) {
  SimulatedSystem sim;
  sim.spec = make_system(id);
  sim.trajectory = simulate_system(sim.spec, dt, horizon);
  sim.derivatives = finite_difference_derivatives(sim.trajectory.times, sim.trajectory.states);
  return sim;
}

TrajectoryDataset make_dataset(const SimulatedSystem& sim, double noise_sd,
                               std::uint64_t noise_seed, const SplitSizes& sizes,
                               std::uint64_t split_seed, const SplitRegions& regions) {
  TrajectoryDataset d;
  d.times = sim.trajectory.times;
  d.states = sim.trajectory.states;
  d.derivatives = sim.derivatives;
  d.responses = add_noise(sim.derivatives, noise_sd, noise_seed);
  d.noise_sd = noise_sd;
  d.seed = noise_seed;
  d.splits = make_splits(d.times, sizes, split_seed, regions);
  return d;
}

std::vector<EquationResult> fit_cell(const TrajectoryDataset& data, const SystemSpec& spec,
                                     const GmjmcmcTuning& tuning,
                                     const std::vector<std::vector<std::uint64_t>>& chain_seeds) {
  std::vector<EquationResult> out;
  for (std::size_t eq = 0; eq < kStateDim; ++eq) {
    EquationResult r;
    std::vector<ChainResult> chains;
    for (std::size_t c = 0; c < chain_seeds.at(eq).size(); ++c) {
      chains.push_back(run_chain(data, Split::Train, eq, tuning, chain_seeds[eq][c]));
    }
    r.summary = aggregate_chains(chains, eq);
    fit_mpm(r.summary, data);
    r.metrics = evaluate_equation(r.summary, data, spec.true_terms[eq]);
    r.metrics.system = spec.name;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      r.chains.emplace_back(static_cast<int>(c), std::move(chains[c]));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> metrics_header() {
  return {"system",   "noise_sd",    "replicate", "equation",           "power",
          "fdr",      "r2_train",    "r2_insample", "r2_oos",           "excluded_rows_train",
          "excluded_rows_insample", "excluded_rows_oos"};
}

std::vector<std::string> terms_header() {
  return {"system", "noise_sd", "replicate", "equation", "feature", "inclusion_prob", "in_mpm",
          "beta"};
}

std::vector<std::string> curves_header() {
  return {"system", "noise_sd", "metric", "mean", "sd", "n_replicates"};
}

std::vector<std::string> metrics_fields(const MetricsRow& r) {
  return {r.system,
          csv::format_double(r.noise_sd),
          std::to_string(r.replicate),
          std::to_string(r.equation),
          csv::format_double(r.power),
          csv::format_double(r.fdr),
          csv::format_double(r.r2_train),
          csv::format_double(r.r2_insample),
          csv::format_double(r.r2_oos),
          std::to_string(r.excluded_rows_train),
          std::to_string(r.excluded_rows_insample),
          std::to_string(r.excluded_rows_oos)};
}

namespace {

std::vector<std::vector<std::string>> terms_rows(const EquationResult& r) {
  std::vector<std::vector<std::string>> rows;
  const auto& m = r.metrics;
  auto prefix = [&] {
    return std::vector<std::string>{m.system, csv::format_double(m.noise_sd),
                                    std::to_string(m.replicate), std::to_string(m.equation)};
  };
  {
    auto row = prefix();
    row.insert(row.end(), {"intercept", csv::format_double(1.0), "1",
                           csv::format_double(r.summary.mpm_betas(0))});
    rows.push_back(std::move(row));
  }
  for (const auto& [key, prob] : r.summary.inclusion_probs) {
    auto pos = std::find(r.summary.mpm_keys.begin(), r.summary.mpm_keys.end(), key);
    const bool in_mpm = pos != r.summary.mpm_keys.end();
    if (!in_mpm && prob < kTermsFloor) continue;
    double beta = 0.0;
    if (in_mpm) {
      beta = r.summary.mpm_betas(
          static_cast<Eigen::Index>(pos - r.summary.mpm_keys.begin()) + 1);
    }
    auto row = prefix();
    row.insert(row.end(), {key.text, csv::format_double(prob), in_mpm ? "1" : "0",
                           csv::format_double(beta)});
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<std::string>> diagnostic_rows(const EquationResult& r) {
  std::vector<std::vector<std::string>> rows;
  const auto& m = r.metrics;
  for (const auto& [chain, result] : r.chains) {
    for (const auto& d : result.diagnostics) {
      rows.push_back({m.system, csv::format_double(m.noise_sd), std::to_string(m.replicate),
                      std::to_string(m.equation), std::to_string(chain),
                      std::to_string(d.generation), d.feature.text,
                      csv::format_double(d.inclusion_prob)});
    }
  }
  return rows;
}

class Manifest {
 public:
  Manifest(fs::path path, std::string hash, std::string config_json)
      : path_(std::move(path)) {
    doc_["schema_version"] = csv::kSchemaVersion;
    doc_["config_hash"] = std::move(hash);
    doc_["code_version"] = BGNLM_VERSION;
    doc_["created"] = iso_timestamp();
    doc_["config"] = json::parse(config_json);
    doc_["cells"] = json::object();
  }

  /// Loads an existing manifest; returns false if absent or for another config.
  bool load_existing(const std::string& hash) {
    if (!fs::exists(path_)) return false;
    json old = json::parse(read_file(path_));
    if (old.value("config_hash", "") != hash) {
      throw ConfigError("manifest in " + path_.parent_path().string() +
                        " belongs to a different config (hash " +
                        old.value("config_hash", "?") + "); use a fresh output_dir");
    }
    doc_["cells"] = old.value("cells", json::object());
    doc_["created"] = old.value("created", iso_timestamp());
    return true;
  }

  bool completed(const std::string& id) const {
    const auto& cells = doc_["cells"];
    return cells.contains(id) && cells[id].value("status", "") == "completed";
  }

  void record(const std::string& id, json entry) {
    std::lock_guard lock(mutex_);
    doc_["cells"][id] = std::move(entry);
    save_locked();
  }

  void save() {
    std::lock_guard lock(mutex_);
    save_locked();
  }

 private:
  void save_locked() {
    doc_["updated"] = iso_timestamp();
    write_file_atomically(path_, doc_.dump(2) + "\n");
  }

  fs::path path_;
  json doc_;
  std::mutex mutex_;
};

json seeds_json(const CellSeeds& s) {
  json chains = json::array();
  for (const auto& eq : s.chains) chains.push_back(eq);
  return {{"noise", s.noise}, {"splits", s.splits}, {"chains", chains}};
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  validate_config(config);
  std::ostream* log = options.log;
  const fs::path out_dir = config.output_dir;
  const fs::path cell_dir = out_dir / "cells";
  fs::create_directories(cell_dir);

  const std::string hash = config_hash(config);
  Manifest manifest(out_dir / "manifest.json", hash, config_to_json(config));
  if (options.resume) {
    manifest.load_existing(hash);
  } else {
    for (const auto& entry : fs::directory_iterator(cell_dir)) fs::remove(entry.path());
  }

  std::vector<Cell> cells;
  for (SystemId s : config.systems) {
    for (int k : config.noise_ks) {
      for (int r = 0; r < config.replicates; ++r) cells.push_back({s, k, r});
    }
  }

  RunSummary summary;
  std::vector<const Cell*> pending;
  for (const auto& cell : cells) {
    const bool done = manifest.completed(cell.id()) &&
                      fs::exists(cell_dir / (cell.id() + ".metrics.csv")) &&
                      fs::exists(cell_dir / (cell.id() + ".terms.csv"));
    if (done) {
      ++summary.skipped;
    } else {
      pending.push_back(&cell);
    }
  }

  // The trajectory is deterministic, so one simulation per system serves
  // every replicate and noise level.
  std::map<SystemId, SimulatedSystem> sims;
  std::map<SystemId, std::string> sim_errors;
  for (const Cell* cell : pending) {
    if (sims.contains(cell->system) || sim_errors.contains(cell->system)) continue;
    try {
      if (log) *log << "simulating " << system_name(cell->system) << "\n";
      sims.emplace(cell->system, simulate_with_derivatives(cell->system, config.dt, config.horizon));
    } catch (const std::exception& e) {
      sim_errors.emplace(cell->system, e.what());
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> completed{0};
  std::atomic<int> failed{0};
  std::mutex log_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      const Cell& cell = *pending[i];
      const std::string id = cell.id();
      const CellSeeds seeds = cell_seeds(config, cell.system, cell.k, cell.replicate);
      json entry = {{"system", std::string(system_name(cell.system))},
                    {"k", cell.k},
                    {"noise_sd", noise_sd_for_level(cell.k)},
                    {"replicate", cell.replicate},
                    {"seeds", seeds_json(seeds)},
                    {"started", iso_timestamp()}};
      try {
        if (auto err = sim_errors.find(cell.system); err != sim_errors.end()) {
          throw SimulationError(err->second);
        }
        const SimulatedSystem& sim = sims.at(cell.system);
        const TrajectoryDataset data =
            make_dataset(sim, noise_sd_for_level(cell.k), seeds.noise, config.split_sizes,
                         seeds.splits, config.regions);
        auto results = fit_cell(data, sim.spec, config.sampler, seeds.chains);

        std::vector<std::vector<std::string>> metric_rows;
        std::vector<std::vector<std::string>> term_rows;
        std::vector<std::vector<std::string>> diag_rows;
        for (auto& r : results) {
          r.metrics.replicate = cell.replicate;
          metric_rows.push_back(metrics_fields(r.metrics));
          for (auto& row : terms_rows(r)) term_rows.push_back(std::move(row));
          if (config.write_diagnostics) {
            for (auto& row : diagnostic_rows(r)) diag_rows.push_back(std::move(row));
          }
        }
        write_file_atomically(cell_dir / (id + ".terms.csv"), rows_to_text(term_rows));
        if (config.write_diagnostics) {
          write_file_atomically(cell_dir / (id + ".diagnostics.csv"), rows_to_text(diag_rows));
        }
        // Written last: its presence marks the cell as finished.
        write_file_atomically(cell_dir / (id + ".metrics.csv"), rows_to_text(metric_rows));
        entry["status"] = "completed";
        entry["finished"] = iso_timestamp();
        manifest.record(id, entry);
        ++completed;
        if (log) {
          std::lock_guard lock(log_mutex);
          *log << "completed " << id << "\n";
        }
      } catch (const std::exception& e) {
        entry["status"] = "failed";
        entry["message"] = e.what();
        entry["finished"] = iso_timestamp();
        manifest.record(id, entry);
        ++failed;
        if (log) {
          std::lock_guard lock(log_mutex);
          *log << "failed " << id << ": " << e.what() << "\n";
        }
      }
    }
  };

  const int threads = std::max(1, options.threads > 0 ? options.threads : config.threads);
  const auto workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(1, pending.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  summary.completed = completed.load();
  summary.failed = failed.load();

  // Assemble the combined files in grid order from the per-cell fragments.
  std::ostringstream metrics;
  std::ostringstream terms;
  std::ostringstream diagnostics;
  metrics << csv::schema_line() << '\n';
  csv::write_row(metrics, metrics_header());
  terms << csv::schema_line() << '\n';
  csv::write_row(terms, terms_header());
  diagnostics << csv::schema_line() << '\n';
  csv::write_row(diagnostics, {"system", "noise_sd", "replicate", "equation", "chain",
                               "generation", "feature", "inclusion_prob"});
  for (const auto& cell : cells) {
    const fs::path m = cell_dir / (cell.id() + ".metrics.csv");
    const fs::path t = cell_dir / (cell.id() + ".terms.csv");
    if (!fs::exists(m) || !fs::exists(t)) continue;
    metrics << read_file(m);
    terms << read_file(t);
    const fs::path d = cell_dir / (cell.id() + ".diagnostics.csv");
    if (config.write_diagnostics && fs::exists(d)) diagnostics << read_file(d);
  }
  write_file_atomically(out_dir / "metrics.csv", metrics.str());
  write_file_atomically(out_dir / "terms.csv", terms.str());
  if (config.write_diagnostics) write_file_atomically(out_dir / "diagnostics.csv", diagnostics.str());

  std::istringstream metrics_in(metrics.str());
  const CurvesResult curves = emit_curves(csv::read_table(metrics_in));
  std::ostringstream curves_out;
  write_curves_csv(curves_out, curves);
  write_file_atomically(out_dir / "curves.csv", curves_out.str());
  if (log) {
    for (const auto& m : curves.missing) *log << "missing cell " << m << "\n";
  }
  manifest.save();
  return summary;
}

CurvesResult emit_curves(const csv::Table& metrics) {
  const std::size_t c_system = metrics.column("system");
  const std::size_t c_noise = metrics.column("noise_sd");
  const std::size_t c_rep = metrics.column("replicate");
  static const std::vector<std::string> kMetrics = {"power", "fdr", "r2_train", "r2_insample",
                                                    "r2_oos"};
  std::vector<std::size_t> c_metric;
  for (const auto& m : kMetrics) c_metric.push_back(metrics.column(m));

  std::vector<std::string> system_order;
  // (system index, noise sd) -> replicate -> per-metric sums and equation count
  std::map<std::pair<std::size_t, double>, std::map<int, std::pair<std::vector<double>, int>>> groups;
  std::set<int> all_replicates;
  for (const auto& row : metrics.rows) {
    auto it = std::find(system_order.begin(), system_order.end(), row[c_system]);
    const auto sys = static_cast<std::size_t>(it - system_order.begin());
    if (it == system_order.end()) system_order.push_back(row[c_system]);
    const double noise = std::stod(row[c_noise]);
    const int rep = std::stoi(row[c_rep]);
    all_replicates.insert(rep);
    auto& acc = groups[{sys, noise}][rep];
    if (acc.first.empty()) acc.first.assign(kMetrics.size(), 0.0);
    for (std::size_t m = 0; m < kMetrics.size(); ++m) acc.first[m] += std::stod(row[c_metric[m]]);
    ++acc.second;
  }

  CurvesResult out;
  for (const auto& [group, reps] : groups) {
    const auto& [sys, noise] = group;
    for (int r : all_replicates) {
      if (!reps.contains(r)) {
        out.missing.push_back(system_order[sys] + "," + csv::format_double(noise) + "," +
                              std::to_string(r));
      }
    }
    for (std::size_t m = 0; m < kMetrics.size(); ++m) {
      std::vector<double> values;
      for (const auto& [rep, acc] : reps) values.push_back(acc.first[m] / acc.second);
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
      out.rows.push_back({system_order[sys], noise, kMetrics[m], mean, sd, values.size()});
    }
  }
  return out;
}

void write_curves_csv(std::ostream& out, const CurvesResult& curves) {
  out << csv::schema_line() << '\n';
  csv::write_row(out, curves_header());
  for (const auto& r : curves.rows) {
    csv::write_row(out, {r.system, csv::format_double(r.noise_sd), r.metric,
                         csv::format_double(r.mean), csv::format_double(r.sd),
                         std::to_string(r.n_replicates)});
  }
}

}  // namespace bgnlm
