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

// Run configuration: strict JSON parsing with defaults, and serialization
// back to the same schema. File units are GHz, ps, fs, ns^-1, ueV and T;
// the schema is described in docs/config.md.

#include "trion/experiments.hpp"
#include "trion/system.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trion {

using nlohmann::json;

/// Configuration problem tied to a (dotted) key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class Experiment { rabi, ramsey, coherence, map, zeeman };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::rabi: return "rabi";
    case Experiment::ramsey: return "ramsey";
    case Experiment::coherence: return "coherence";
    case Experiment::map: return "map";
    case Experiment::zeeman: return "zeeman";
  }
  return "rabi";
}

inline std::optional<Experiment> experiment_from_string(std::string_view s) {
  for (auto e : {Experiment::rabi, Experiment::ramsey, Experiment::coherence, Experiment::map, Experiment::zeeman})
    if (to_string(e) == s) return e;
  return std::nullopt;
}

/// Either an explicit list or `count` evenly spaced points over [start, stop].
struct AxisSpec {
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 0;
  std::vector<double> explicit_values;

  static AxisSpec range(double a, double b, std::size_t n) { return {a, b, n, {}}; }
  std::vector<double> values() const { return explicit_values.empty() ? linspace(start, stop, count) : explicit_values; }

  friend bool operator==(const AxisSpec&, const AxisSpec&) = default;
};

struct Grids {
  std::optional<AxisSpec> area;         // pulse area per pulse, multiples of pi
  std::optional<AxisSpec> peak;         // alternative to area: peak Omega / 2 pi, GHz
  std::optional<AxisSpec> fine_delay;   // fs
  std::optional<AxisSpec> coarse_delay; // ps
  std::optional<double> b_max;          // T
  std::optional<std::size_t> b_count;

  friend bool operator==(const Grids&, const Grids&) = default;
};

/// Pulse-sequence template. Exactly one of area / peak sets the strength.
struct SequenceConfig {
  double fwhm = 23.0;          // ps
  double center = 0.0;         // ps
  std::optional<double> area;  // multiples of pi, per pulse
  std::optional<double> peak;  // GHz
  double coarse_delay = 80.0;  // ps
  double fine_delay = 0.0;     // fs
  double detuning = 0.0;       // GHz

  friend bool operator==(const SequenceConfig&, const SequenceConfig&) = default;

  double area_pi() const {
    if (peak) return pulse_area(Pulse{*peak, fwhm, center}) / std::numbers::pi;
    return area.value_or(0.5);
  }
};

struct RunConfig {
  Experiment experiment = Experiment::rabi;
  SystemParams system;
  SequenceConfig sequence;
  Grids grids;
  SolverSettings solver;
  SignalMode signal = SignalMode::population;
  MagnetoModel magneto;
  std::string output_dir = "out";
  std::uint64_t seed = 20240917;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  SweepSettings sweep_settings() const {
    SweepSettings s;
    s.solver = solver;
    s.mode = signal;
    s.pulse = Pulse{0.0, sequence.fwhm, sequence.center};
    return s;
  }

  /// Area axis in multiples of pi, from either the area or the peak grid.
  std::vector<double> area_axis() const {
    if (grids.peak) {
      std::vector<double> v;
      for (double p : grids.peak->values()) v.push_back(pulse_area(Pulse{p, sequence.fwhm, sequence.center}) / std::numbers::pi);
      return v;
    }
    return grids.area.value_or(AxisSpec{}).values();
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
    for (auto it = j_.begin(); it != j_.end(); ++it) unused_.insert(it.key());
  }

  std::string key_path(std::string_view k) const { return path_.empty() ? std::string(k) : path_ + "." + std::string(k); }

  bool has(std::string_view k) const { return j_.contains(std::string(k)) && !j_.at(std::string(k)).is_null(); }

  const json* take(std::string_view k) {
    unused_.erase(std::string(k));
    if (!has(k)) return nullptr;
    return &j_.at(std::string(k));
  }

  void number(std::string_view k, double& out) {
    if (const json* v = take(k)) {
      if (!v->is_number()) throw ConfigError(key_path(k), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(key_path(k), "must be finite");
    }
  }

  void optional_number(std::string_view k, std::optional<double>& out) {
    if (const json* v = take(k)) {
      if (!v->is_number()) throw ConfigError(key_path(k), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(std::string_view k, int& out) {
    if (const json* v = take(k)) {
      if (!v->is_number_integer()) throw ConfigError(key_path(k), "expected an integer");
      out = v->get<int>();
    }
  }

  void uint64(std::string_view k, std::uint64_t& out) {
    if (const json* v = take(k)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        throw ConfigError(key_path(k), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void string(std::string_view k, std::string& out) {
    if (const json* v = take(k)) {
      if (!v->is_string()) throw ConfigError(key_path(k), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <class Enum>
  void enumeration(std::string_view k, Enum& out, std::initializer_list<std::pair<const char*, Enum>> options) {
    if (const json* v = take(k)) {
      if (!v->is_string()) throw ConfigError(key_path(k), "expected a string");
      const auto s = v->get<std::string>();
      for (const auto& [name, value] : options) {
        if (s == name) {
          out = value;
          return;
        }
      }
      std::string allowed;
      for (const auto& [name, value] : options) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
      throw ConfigError(key_path(k), "unknown value '" + s + "' (expected one of: " + allowed + ")");
    }
  }

  void finish() const {
    if (!unused_.empty()) throw ConfigError(key_path(*unused_.begin()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> unused_;
};

inline AxisSpec parse_axis(const json& j, const std::string& path) {
  AxisSpec a;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError(path, "axis values must be numbers");
      a.explicit_values.push_back(v.get<double>());
    }
    if (a.explicit_values.empty()) throw ConfigError(path, "axis must not be empty");
    return a;
  }
  ObjectReader r(j, path);
  if (!r.has("start") || !r.has("stop") || !r.has("count")) throw ConfigError(path, "axis needs start, stop and count");
  r.number("start", a.start);
  r.number("stop", a.stop);
  int count = 0;
  r.integer("count", count);
  if (count < 1) throw ConfigError(path + ".count", "must be >= 1");
  a.count = static_cast<std::size_t>(count);
  r.finish();
  return a;
}

inline void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw ConfigError(key, msg);
}

inline void apply_grid_defaults(RunConfig& c) {
  auto& g = c.grids;
  switch (c.experiment) {
    case Experiment::rabi:
      if (!g.area && !g.peak) g.area = AxisSpec::range(0.0, 4.25, 81);
      break;
    case Experiment::ramsey:
      if (!g.fine_delay) g.fine_delay = AxisSpec::range(0.0, 11.0, 111);
      break;
    case Experiment::coherence:
      if (!g.coarse_delay) g.coarse_delay = AxisSpec::range(80.0, 180.0, 31);
      if (!g.fine_delay) g.fine_delay = AxisSpec::range(0.0, 11.0, 111);
      break;
    case Experiment::map:
      if (!g.area && !g.peak) g.area = AxisSpec::range(0.0, 2.0, 61);
      if (!g.fine_delay) g.fine_delay = AxisSpec::range(0.0, 11.0, 61);
      break;
    case Experiment::zeeman:
      if (!g.b_max) g.b_max = 5.0;
      if (!g.b_count) g.b_count = 51;
      break;
  }
}

inline void validate_grids(const RunConfig& c) {
  const auto& g = c.grids;
  const bool uses_area = c.experiment == Experiment::rabi || c.experiment == Experiment::map;
  const bool uses_fine = c.experiment == Experiment::ramsey || c.experiment == Experiment::coherence ||
                         c.experiment == Experiment::map;
  const bool uses_coarse = c.experiment == Experiment::coherence;
  const bool uses_b = c.experiment == Experiment::zeeman;
  const std::string exp(to_string(c.experiment));
  require(uses_area || !g.area, "grids.area", "not an axis of the " + exp + " experiment");
  require(uses_area || !g.peak, "grids.peak", "not an axis of the " + exp + " experiment");
  require(!(g.area && g.peak), "grids.peak", "give either grids.area or grids.peak, not both");
  require(uses_fine || !g.fine_delay, "grids.fine_delay", "not an axis of the " + exp + " experiment");
  require(uses_coarse || !g.coarse_delay, "grids.coarse_delay", "not an axis of the " + exp + " experiment");
  require(uses_b || !g.b_max, "grids.b_max", "not a parameter of the " + exp + " experiment");
  require(uses_b || !g.b_count, "grids.b_count", "not a parameter of the " + exp + " experiment");
  if (g.area)
    for (double v : g.area->values()) require(v >= 0.0, "grids.area", "areas must be >= 0");
  if (g.peak)
    for (double v : g.peak->values()) require(v >= 0.0, "grids.peak", "peaks must be >= 0");
  if (g.coarse_delay)
    for (double v : g.coarse_delay->values()) require(v >= 0.0, "grids.coarse_delay", "delays must be >= 0");
  if (g.b_max) require(*g.b_max >= 0.0, "grids.b_max", "must be >= 0");
  if (g.b_count) require(*g.b_count >= 1, "grids.b_count", "must be >= 1");
  if (c.experiment == Experiment::coherence) {
    require(!g.fine_delay || g.fine_delay->values().size() >= 8, "grids.fine_delay",
            "fringe fits need at least 8 fine-delay points");
  }
}

}  // namespace detail

/// Parses and validates a configuration document. A run manifest is also
/// accepted; its embedded "config" object is used.
inline RunConfig parse_config(const json& doc) {
  if (doc.is_object() && doc.contains("manifest_version")) {
    if (!doc.contains("config")) throw ConfigError("config", "manifest has no config section");
    return parse_config(doc.at("config"));
  }
  RunConfig c;
  detail::ObjectReader root(doc, "");
  if (const json* e = root.take("experiment")) {
    if (!e->is_string()) throw ConfigError("experiment", "expected a string");
    const auto ex = experiment_from_string(e->get<std::string>());
    if (!ex) throw ConfigError("experiment", "unknown experiment '" + e->get<std::string>() + "'");
    c.experiment = *ex;
  }

  if (const json* s = root.take("system")) {
    detail::ObjectReader r(*s, "system");
    auto& p = c.system;
    r.number("delta_e_gs", p.delta_e_gs);
    r.number("delta_e_tr", p.delta_e_tr);
    r.number("omega0", p.omega0);
    r.number("gamma_spont", p.gamma_spont);
    r.number("gamma_pump", p.gamma_pump);
    r.number("gamma_deph", p.gamma_deph);
    r.number("alpha_phonon", p.alpha_phonon);
    r.number("kappa", p.kappa);
    r.number("gamma_spin", p.gamma_spin);
    r.enumeration("dephasing_operator", p.dephasing_operator,
                  {{"manifold", DephasingOperator::manifold}, {"per_level", DephasingOperator::per_level}});
    r.enumeration("dephasing_scale", p.dephasing_scale,
                  {{"amplitude", DephasingScale::amplitude}, {"rate", DephasingScale::rate}});
    r.finish();
  }
  {
    const auto& p = c.system;
    for (auto [name, value] : {std::pair{"gamma_spont", p.gamma_spont}, {"gamma_pump", p.gamma_pump},
                               {"gamma_deph", p.gamma_deph}, {"alpha_phonon", p.alpha_phonon},
                               {"kappa", p.kappa}, {"gamma_spin", p.gamma_spin}}) {
      detail::require(value >= 0.0, std::string("system.") + name, "must be >= 0");
    }
    detail::require(p.omega0 > 0.0, "system.omega0", "must be > 0");
    detail::require(p.delta_e_tr > 0.0, "system.delta_e_tr", "must be > 0");
    detail::require(p.delta_e_gs > p.delta_e_tr, "system.delta_e_gs", "must exceed delta_e_tr");
  }

  if (const json* s = root.take("sequence")) {
    detail::ObjectReader r(*s, "sequence");
    auto& q = c.sequence;
    r.number("fwhm", q.fwhm);
    r.number("center", q.center);
    r.optional_number("area", q.area);
    r.optional_number("peak", q.peak);
    r.number("coarse_delay", q.coarse_delay);
    r.number("fine_delay", q.fine_delay);
    r.number("detuning", q.detuning);
    r.finish();
    detail::require(q.fwhm > 0.0, "sequence.fwhm", "must be > 0");
    detail::require(!(q.area && q.peak), "sequence.peak", "give either sequence.area or sequence.peak, not both");
    if (q.area) detail::require(*q.area >= 0.0, "sequence.area", "must be >= 0");
    if (q.peak) detail::require(*q.peak >= 0.0, "sequence.peak", "must be >= 0");
    detail::require(q.coarse_delay >= 0.0, "sequence.coarse_delay", "must be >= 0");
    detail::require(q.coarse_delay * 1e3 + q.fine_delay >= 0.0, "sequence.fine_delay", "total delay must be >= 0");
  }

  if (const json* s = root.take("grids")) {
    detail::ObjectReader r(*s, "grids");
    auto& g = c.grids;
    if (const json* v = r.take("area")) g.area = detail::parse_axis(*v, "grids.area");
    if (const json* v = r.take("peak")) g.peak = detail::parse_axis(*v, "grids.peak");
    if (const json* v = r.take("fine_delay")) g.fine_delay = detail::parse_axis(*v, "grids.fine_delay");
    if (const json* v = r.take("coarse_delay")) g.coarse_delay = detail::parse_axis(*v, "grids.coarse_delay");
    r.optional_number("b_max", g.b_max);
    if (const json* v = r.take("b_count")) {
      if (!v->is_number_integer() || v->get<long>() < 1) throw ConfigError("grids.b_count", "expected an integer >= 1");
      g.b_count = v->get<std::size_t>();
    }
    r.finish();
  }

  if (const json* s = root.take("solver")) {
    detail::ObjectReader r(*s, "solver");
    auto& v = c.solver;
    r.number("tol", v.tol);
    r.number("sample_interval", v.sample_interval);
    r.number("window", v.window);
    r.enumeration("initial_state", v.initial_state,
                  {{"half_mixed", InitialStateMode::half_mixed}, {"steady_state", InitialStateMode::steady_state}});
    r.integer("threads", v.threads);
    r.finish();
    detail::require(v.tol >= 1e-12 && v.tol <= 1e-4, "solver.tol", "must lie in [1e-12, 1e-4]");
    detail::require(v.sample_interval > 0.0, "solver.sample_interval", "must be > 0");
    detail::require(v.window >= 3.2, "solver.window", "must be >= 3.2 (fwhm units)");
    detail::require(v.threads >= 0, "solver.threads", "must be >= 0");
  }

  root.enumeration("signal", c.signal,
                   {{"population", SignalMode::population}, {"integrated_emission", SignalMode::integrated_emission}});

  if (const json* s = root.take("magneto")) {
    detail::ObjectReader r(*s, "magneto");
    r.number("g_e", c.magneto.g_e);
    r.number("g_h", c.magneto.g_h);
    r.number("diamagnetic", c.magneto.diamagnetic);
    r.number("e0", c.magneto.e0);
    r.finish();
    detail::require(c.magneto.g_h > 0.0, "magneto.g_h", "must be > 0");
    detail::require(c.magneto.g_e > c.magneto.g_h, "magneto.g_e", "must exceed g_h");
    detail::require(c.magneto.diamagnetic >= 0.0, "magneto.diamagnetic", "must be >= 0");
  }

  root.string("output_dir", c.output_dir);
  root.uint64("seed", c.seed);
  root.finish();

  detail::validate_grids(c);
  detail::apply_grid_defaults(c);
  return c;
}

inline RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

// String arguments would otherwise be ambiguous between the two overloads.
inline RunConfig parse_config(const std::string& text) { return parse_config(std::string_view(text)); }
inline RunConfig parse_config(const char* text) { return parse_config(std::string_view(text)); }

// ---------------------------------------------------------------------------
// Serialization

inline json axis_to_json(const AxisSpec& a) {
  if (!a.explicit_values.empty()) return a.explicit_values;
  return json{{"start", a.start}, {"stop", a.stop}, {"count", a.count}};
}

inline json to_json(const SystemParams& p) {
  return json{{"delta_e_gs", p.delta_e_gs},
              {"delta_e_tr", p.delta_e_tr},
              {"omega0", p.omega0},
              {"gamma_spont", p.gamma_spont},
              {"gamma_pump", p.gamma_pump},
              {"gamma_deph", p.gamma_deph},
              {"alpha_phonon", p.alpha_phonon},
              {"kappa", p.kappa},
              {"gamma_spin", p.gamma_spin},
              {"dephasing_operator", p.dephasing_operator == DephasingOperator::manifold ? "manifold" : "per_level"},
              {"dephasing_scale", p.dephasing_scale == DephasingScale::amplitude ? "amplitude" : "rate"}};
}

inline json to_json(const SolverSettings& s) {
  return json{{"tol", s.tol},
              {"sample_interval", s.sample_interval},
              {"window", s.window},
              {"initial_state", s.initial_state == InitialStateMode::half_mixed ? "half_mixed" : "steady_state"},
              {"threads", s.threads}};
}

inline json serialize(const RunConfig& c) {
  json seq{{"fwhm", c.sequence.fwhm},
           {"center", c.sequence.center},
           {"coarse_delay", c.sequence.coarse_delay},
           {"fine_delay", c.sequence.fine_delay},
           {"detuning", c.sequence.detuning}};
  if (c.sequence.area) seq["area"] = *c.sequence.area;
  if (c.sequence.peak) seq["peak"] = *c.sequence.peak;

  json grids = json::object();
  if (c.grids.area) grids["area"] = axis_to_json(*c.grids.area);
  if (c.grids.peak) grids["peak"] = axis_to_json(*c.grids.peak);
  if (c.grids.fine_delay) grids["fine_delay"] = axis_to_json(*c.grids.fine_delay);
  if (c.grids.coarse_delay) grids["coarse_delay"] = axis_to_json(*c.grids.coarse_delay);
  if (c.grids.b_max) grids["b_max"] = *c.grids.b_max;
  if (c.grids.b_count) grids["b_count"] = *c.grids.b_count;

  return json{{"experiment", std::string(to_string(c.experiment))},
              {"system", to_json(c.system)},
              {"sequence", seq},
              {"grids", grids},
              {"solver", to_json(c.solver)},
              {"signal", c.signal == SignalMode::population ? "population" : "integrated_emission"},
              {"magneto",
               {{"g_e", c.magneto.g_e}, {"g_h", c.magneto.g_h}, {"diamagnetic", c.magneto.diamagnetic}, {"e0", c.magneto.e0}}},
              {"output_dir", c.output_dir},
              {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Overrides

/// Applies `key=value` to a config document. Dotted keys address nested
/// objects; a bare key is looked up in the known sections. The value is read
/// as JSON when it parses, otherwise as a string.
inline void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError(std::string(assignment), "override must look like key=value");
  std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }

  if (key.find('.') == std::string::npos) {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> sections = {
        {"system", {"delta_e_gs", "delta_e_tr", "omega0", "gamma_spont", "gamma_pump", "gamma_deph", "alpha_phonon",
                    "kappa", "gamma_spin", "dephasing_operator", "dephasing_scale"}},
        {"sequence", {"fwhm", "center", "area", "peak", "coarse_delay", "fine_delay", "detuning"}},
        {"grids", {"b_max", "b_count"}},
        {"solver", {"tol", "sample_interval", "window", "initial_state", "threads"}},
        {"magneto", {"g_e", "g_h", "diamagnetic", "e0"}},
    };
    for (const auto& [section, keys] : sections) {
      if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
        key = section + "." + key;
        break;
      }
    }
  }

  if (!doc.is_object()) doc = json::object();
  json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError(key, "malformed override key");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
    node = &(*node)[part];
    pos = dot + 1;
  }
}

}  // namespace trion
