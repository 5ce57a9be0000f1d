// Copyright 2026 The trion-dynamics Authors
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

#include "trion/config.hpp"
#include "trion/fit.hpp"
#include "trion/io.hpp"
#include "trion/validation.hpp"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kUsageError = 2;

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<double> detuning;
  std::vector<std::string> overrides;
};

struct FitOptions {
  std::string kind;
  std::string input;
  std::string model;
  std::string x_column;
  std::string y_column;
  std::optional<double> freq_hint;
  std::string out_dir;
};

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

trion::Table read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return trion::read_csv(is);
}

std::vector<double> column(const trion::Table& t, const std::string& name, std::size_t fallback) {
  std::size_t idx = fallback;
  if (!name.empty()) {
    const auto it = std::find(t.columns.begin(), t.columns.end(), name);
    if (it == t.columns.end()) throw std::invalid_argument("column '" + name + "' not found");
    idx = static_cast<std::size_t>(std::distance(t.columns.begin(), it));
  }
  if (idx >= t.columns.size()) throw std::invalid_argument("input needs at least two columns");
  std::vector<double> v;
  for (const auto& row : t.rows) v.push_back(row[idx]);
  return v;
}

int run_experiment(trion::Experiment experiment, const RunOptions& o) {
  trion::json doc = trion::json::object();
  if (!o.config_path.empty()) {
    try {
      doc = trion::json::parse(read_file(o.config_path));
    } catch (const trion::json::parse_error& e) {
      std::cerr << "config error: " << o.config_path << ": invalid JSON: " << e.what() << "\n";
      return kUsageError;
    }
    if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) doc = doc["config"];
  }
  doc["experiment"] = std::string(trion::to_string(experiment));
  if (!o.out_dir.empty()) doc["output_dir"] = o.out_dir;
  if (o.detuning) doc["sequence"]["detuning"] = *o.detuning;

  trion::RunConfig cfg;
  try {
    for (const auto& s : o.overrides) trion::apply_override(doc, s);
    cfg = trion::parse_config(doc);
  } catch (const trion::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  }

  const trion::RunOutcome res = trion::run(cfg, std::cerr);
  for (const auto& f : res.files) std::cout << (res.directory / f).string() << "\n";
  if (res.exit_code == 0 && experiment == trion::Experiment::coherence) {
    const auto fits = trion::json::parse(read_file((res.directory / "fits.json").string()));
    for (const char* key : {"with_baseline", "without_baseline"}) {
      const auto& f = fits["decay_fit"][key];
      if (f.contains("t2_star_ps")) std::cout << "T2* (" << key << "): " << f["t2_star_ps"].get<double>() << " ps\n";
    }
  }
  return res.exit_code;
}

int run_fit(const FitOptions& o) {
  const trion::Table input = read_table(o.input);
  trion::json out;
  if (o.kind == "sinusoid") {
    if (!o.freq_hint) throw std::invalid_argument("--freq-hint is required for sinusoid fits");
    const auto x = column(input, o.x_column, 0);
    const auto y = column(input, o.y_column, input.columns.size() - 1);
    out = {{"kind", "sinusoid"}, {"fit", trion::to_json(trion::fit_sinusoid(x, y, *o.freq_hint))}};
  } else if (o.kind == "exponential") {
    const auto x = column(input, o.x_column, 0);
    const auto y = column(input, o.y_column, input.columns.size() - 1);
    out = {{"kind", "exponential"},
           {"with_baseline", trion::to_json(trion::fit_exponential(x, y, {true}))},
           {"without_baseline", trion::to_json(trion::fit_exponential(x, y, {false}))}};
  } else {
    if (o.model.empty()) throw std::invalid_argument("--model is required for power fits");
    const trion::Table model = read_table(o.model);
    const auto p = column(input, o.x_column, 0);
    const auto c = column(input, o.y_column, input.columns.size() - 1);
    const auto ma = column(model, "", 0);
    const auto ms = column(model, "", model.columns.size() - 1);
    std::vector<trion::PowerPoint> measured;
    for (std::size_t i = 0; i < p.size(); ++i) measured.push_back({p[i], c[i]});
    std::vector<trion::CurvePoint> curve;
    for (std::size_t i = 0; i < ma.size(); ++i) curve.push_back({ma[i], ms[i]});
    out = {{"kind", "power"}, {"fit", trion::to_json(trion::calibrate_power_axis(measured, curve))}};
  }
  const std::string text = out.dump(2) + "\n";
  if (o.out_dir.empty()) {
    std::cout << text;
  } else {
    std::filesystem::create_directories(o.out_dir);
    std::ofstream os(std::filesystem::path(o.out_dir) / "fits.json");
    os << text;
    std::cout << (std::filesystem::path(o.out_dir) / "fits.json").string() << "\n";
  }
  return 0;
}

int run_selftest(std::uint64_t seed, int cases) {
  const auto results = trion::self_test(seed, cases);
  int failed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    failed += r.passed ? 0 : 1;
  }
  std::cout << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config or manifest")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--detuning", o.detuning, "Laser detuning, GHz");
  cmd->add_option("--set", o.overrides, "Override key=value (dotted or bare key)")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Four-level trion spin dynamics: sweeps, fits and self-checks"};
  app.name("trion-dynamics");
  app.require_subcommand(1);

  RunOptions run_opts;
  const std::vector<std::pair<trion::Experiment, const char*>> experiments = {
      {trion::Experiment::rabi, "Single-pulse signal against pulse area"},
      {trion::Experiment::ramsey, "Two-pulse fine-delay scan"},
      {trion::Experiment::coherence, "Fringe amplitude against coarse delay, with decay fits"},
      {trion::Experiment::map, "Signal over pulse area and fine delay"},
      {trion::Experiment::zeeman, "Optical line positions against magnetic field"},
  };
  std::vector<std::pair<CLI::App*, trion::Experiment>> run_cmds;
  for (const auto& [e, help] : experiments) {
    CLI::App* cmd = app.add_subcommand(std::string(trion::to_string(e)), help);
    add_run_options(cmd, run_opts);
    run_cmds.emplace_back(cmd, e);
  }

  FitOptions fit_opts;
  CLI::App* fit = app.add_subcommand("fit", "Fit a two-column CSV");
  fit->add_option("--kind", fit_opts.kind, "sinusoid | exponential | power")
      ->required()
      ->check(CLI::IsMember({"sinusoid", "exponential", "power"}));
  fit->add_option("--input", fit_opts.input, "CSV with a header line")->required()->check(CLI::ExistingFile);
  fit->add_option("--model", fit_opts.model, "Model curve CSV (area, signal) for power fits")->check(CLI::ExistingFile);
  fit->add_option("--x-column", fit_opts.x_column, "Abscissa column name (default: first)");
  fit->add_option("--y-column", fit_opts.y_column, "Ordinate column name (default: last)");
  fit->add_option("--freq-hint", fit_opts.freq_hint, "Expected frequency, cycles per x unit");
  fit->add_option("--out", fit_opts.out_dir, "Write fits.json here instead of stdout");

  std::uint64_t seed = 20240917;
  int cases = 5;
  CLI::App* selftest = app.add_subcommand("selftest", "Oracle-equivalence and invariant battery");
  selftest->add_option("--seed", seed, "Random seed");
  selftest->add_option("--cases", cases, "Random configurations")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    for (const auto& [cmd, e] : run_cmds)
      if (*cmd) return run_experiment(e, run_opts);
    if (*fit) return run_fit(fit_opts);
    if (*selftest) return run_selftest(seed, cases);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsageError;
}
