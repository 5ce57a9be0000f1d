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

#pragma once

// Run outputs: long-format CSV grids, JSON manifests and fit reports.

#include "trion/config.hpp"
#include "trion/experiments.hpp"
#include "trion/fit.hpp"
#include "trion/morphology.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace trion {

inline constexpr int kManifestVersion = 1;

/// Shortest round-trip decimal; locale independent.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, res.ptr);
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw std::invalid_argument("write_csv: row width does not match header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) throw std::invalid_argument("write_csv: non-finite value in column " + t.columns[c]);
      os << (c ? "," : "") << format_number(row[c]);
    }
    os << '\n';
  }
}

/// Reads a numeric CSV with a header line.
inline Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("read_csv: empty input");
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) {
      while (!col.empty() && (col.back() == '\r' || col.back() == ' ')) col.pop_back();
      t.columns.push_back(col);
    }
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const auto comma = std::min(line.find(',', pos), line.size());
      double v = 0.0;
      const char* first = line.data() + pos;
      while (first < line.data() + comma && *first == ' ') ++first;
      const auto res = std::from_chars(first, line.data() + comma, v);
      if (res.ec != std::errc{} || first == line.data() + comma)
        throw std::invalid_argument("read_csv: line " + std::to_string(lineno) + " has a non-numeric field");
      row.push_back(v);
      pos = comma + 1;
    }
    if (row.size() != t.columns.size())
      throw std::invalid_argument("read_csv: line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                                  " fields, header has " + std::to_string(t.columns.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Long format: one row per filled grid point; axis columns then "signal".
inline Table sweep_table(const SweepResult& r) {
  Table t;
  for (const auto& a : r.axes) t.columns.push_back(a.name);
  t.columns.push_back("signal");
  const std::size_t inner = r.axes.size() == 2 ? r.axes[1].values.size() : 1;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if (i < r.filled.size() && !r.filled[i]) continue;
    std::vector<double> row;
    if (r.axes.size() == 2) {
      row = {r.axes[0].values[i / inner], r.axes[1].values[i % inner]};
    } else {
      row = {r.axes[0].values[i]};
    }
    row.push_back(r.values[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table zeeman_table(const MagnetoModel& m, const std::vector<double>& fields) {
  Table t{{"b_t", "e32_uev", "e42_uev", "e31_uev", "e41_uev", "ground_splitting_uev", "trion_splitting_uev",
           "diamagnetic_shift_uev"},
          {}};
  for (double b : fields) {
    const ZeemanLines z = zeeman_lines(m, b);
    t.rows.push_back({b, z.e32, z.e42, z.e31, z.e41, z.ground_splitting, z.trion_splitting, z.diamagnetic_shift});
  }
  return t;
}

inline json to_json(const FitReport& r) {
  json params = json::object();
  for (const auto& p : r.parameters) params[p.name] = {{"value", p.value}, {"unit", p.unit}, {"std_error", p.std_error}};
  json cov = json::array();
  for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < r.covariance.cols(); ++j) row.push_back(r.covariance(i, j));
    cov.push_back(row);
  }
  return json{{"parameters", params},       {"residual_norm", r.residual_norm}, {"gradient_norm", r.gradient_norm},
              {"converged", r.converged},   {"degenerate", r.degenerate},       {"iterations", r.iterations},
              {"covariance", cov}};
}

inline json to_json(const IntegratorStats& s) {
  return json{{"accepted_steps", s.accepted}, {"rejected_steps", s.rejected}, {"rhs_evaluations", s.rhs_evals}};
}

struct RunOutcome {
  int exit_code = 0;
  std::filesystem::path directory;
  std::vector<std::string> files;
  std::string error;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline void write_table(const std::filesystem::path& path, const Table& t) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  write_csv(os, t);
  write_text(path, os.str());
}

inline json base_manifest(const RunConfig& c) {
  return json{{"manifest_version", kManifestVersion},
              {"tool", "trion-dynamics"},
              {"experiment", std::string(to_string(c.experiment))},
              {"config", serialize(c)},
              {"kappa", c.system.kappa},
              {"laser_frequency_ghz", laser_frequency(c.system, c.sequence.detuning)},
              {"partial", false}};
}

inline void add_sweep_meta(json& m, const SweepResult& r, const std::string& file) {
  m["solver_stats"] = to_json(r.meta.stats);
  m["wall_time_s"] = r.meta.wall_seconds;
  m["timestamp"] = r.meta.timestamp;
  std::vector<double> filled;
  for (std::size_t i = 0; i < r.values.size(); ++i)
    if (i >= r.filled.size() || r.filled[i]) filled.push_back(r.values[i]);
  const auto [mn, mx] = normalize_minmax(filled);
  m["normalization"] = {{"method", "minmax"}, {"file", file}, {"min", mn}, {"max", mx}};
  m["points"] = {{"total", r.values.size()}, {"written", filled.size()}};
  if (r.partial) {
    m["partial"] = true;
    m["error"] = r.error;
  }
}

}  // namespace detail

/// Executes the configured experiment and writes values.csv, manifest.json
/// and, for coherence runs, fringes.csv and fits.json into `output_dir`.
/// A solver abort flushes the completed grid points, marks the manifest
/// partial and returns a nonzero exit code.
inline RunOutcome run(const RunConfig& c, std::ostream& log = std::clog) {
  namespace fs = std::filesystem;
  RunOutcome out;
  out.directory = fs::path(c.output_dir);
  fs::create_directories(out.directory);
  json manifest = detail::base_manifest(c);
  const SweepSettings settings = c.sweep_settings();
  const double det = c.sequence.detuning;

  auto emit = [&](const std::string& name, const Table& t) {
    detail::write_table(out.directory / name, t);
    out.files.push_back(name);
  };
  auto finish_manifest = [&]() {
    manifest["files"] = out.files;
    out.files.push_back("manifest.json");
    detail::write_text(out.directory / "manifest.json", manifest.dump(2) + "\n");
  };
  auto fail_partial = [&](const SweepResult& partial, const std::string& file, const std::string& what) {
    emit(file, sweep_table(partial));
    detail::add_sweep_meta(manifest, partial, file);
    manifest["partial"] = true;
    manifest["error"] = what;
    finish_manifest();
    out.exit_code = 3;
    out.error = what;
    log << "error: " << what << "\n";
    return out;
  };

  switch (c.experiment) {
    case Experiment::rabi: {
      try {
        const SweepResult r = rabi_sweep(c.system, c.area_axis(), det, settings);
        emit("values.csv", sweep_table(r));
        detail::add_sweep_meta(manifest, r, "values.csv");
      } catch (const SweepError& e) {
        return fail_partial(e.partial(), "values.csv", e.what());
      }
      break;
    }
    case Experiment::ramsey: {
      try {
        const SweepResult r = ramsey_fine_scan(c.system, c.sequence.coarse_delay, c.grids.fine_delay->values(), det,
                                               c.sequence.area_pi(), settings);
        emit("values.csv", sweep_table(r));
        detail::add_sweep_meta(manifest, r, "values.csv");
      } catch (const SweepError& e) {
        return fail_partial(e.partial(), "values.csv", e.what());
      }
      break;
    }
    case Experiment::map: {
      try {
        const SweepResult r = control_map(c.system, c.area_axis(), c.grids.fine_delay->values(),
                                          c.sequence.coarse_delay, det, settings);
        emit("values.csv", sweep_table(r));
        detail::add_sweep_meta(manifest, r, "values.csv");
      } catch (const SweepError& e) {
        return fail_partial(e.partial(), "values.csv", e.what());
      }
      break;
    }
    case Experiment::coherence: {
      CoherenceScan scan;
      try {
        scan = coherence_scan(c.system, c.grids.coarse_delay->values(), c.grids.fine_delay->values(), det,
                              c.sequence.area_pi(), settings);
      } catch (const SweepError& e) {
        return fail_partial(e.partial(), "fringes.csv", e.what());
      }
      catch (const FringeFitError& e) {
        out.exit_code = 4;
        out.error = e.what();
        manifest["partial"] = true;
        manifest["error"] = e.what();
        log << "error: " << e.what() << "\n";
        finish_manifest();
        return out;
      }
      emit("values.csv", sweep_table(scan.amplitude));
      emit("fringes.csv", sweep_table(scan.fringes));
      detail::add_sweep_meta(manifest, scan.fringes, "values.csv");
      {
        std::vector<double> amp = scan.amplitude.values;
        const auto [mn, mx] = normalize_minmax(amp);
        manifest["normalization"]["min"] = mn;
        manifest["normalization"]["max"] = mx;
      }

      const auto& coarse = scan.amplitude.axes[0].values;
      json fits{{"fringe_fits", json::array()}};
      for (std::size_t i = 0; i < coarse.size(); ++i)
        fits["fringe_fits"].push_back({{"coarse_delay_ps", coarse[i]}, {"fit", to_json(scan.fringe_fits[i])}});
      json decay = json::object();
      for (bool baseline : {true, false}) {
        const char* key = baseline ? "with_baseline" : "without_baseline";
        try {
          const FitReport fr = fit_exponential(coarse, scan.amplitude.values, {baseline});
          decay[key] = to_json(fr);
          if (!fr.degenerate) decay[key]["t2_star_ps"] = fr.get("tau");
        } catch (const std::exception& e) {
          decay[key] = {{"error", e.what()}};
        }
      }
      fits["decay_fit"] = decay;
      detail::write_text(out.directory / "fits.json", fits.dump(2) + "\n");
      out.files.push_back("fits.json");
      break;
    }
    case Experiment::zeeman: {
      c.magneto.validate();
      const auto start = std::chrono::steady_clock::now();
      emit("values.csv", zeeman_table(c.magneto, linspace(0.0, *c.grids.b_max, *c.grids.b_count)));
      manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      manifest["timestamp"] = utc_timestamp();
      manifest["solver_stats"] = to_json(IntegratorStats{});
      break;
    }
  }
  finish_manifest();
  return out;
}

}  // namespace trion
