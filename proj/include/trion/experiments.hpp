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

#include "trion/fit.hpp"
#include "trion/integrator.hpp"
#include "trion/system.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace trion {

enum class SignalMode {
  population,           // rho33 at the readout time
  integrated_emission,  // (gamma_spont / 2) * integral of rho33 over the trajectory
};

struct SolverSettings {
  double tol = 1e-9;
  double sample_interval = 0.1;  // ps, for stored trajectories
  double window = 3.2;           // integration starts this many fwhm before the first pulse
  InitialStateMode initial_state = InitialStateMode::half_mixed;
  int threads = 0;  // 0: TRION_THREADS if set, else hardware concurrency

  friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

/// Worker count: `requested` if positive, else hardware concurrency capped by
/// the TRION_THREADS environment variable.
inline int resolve_thread_count(int requested = 0) {
  if (requested > 0) return requested;
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("TRION_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<int>(n, static_cast<int>(cap));
  }
  return n;
}

// ---------------------------------------------------------------------------
// Single runs

/// Start of the integration window, ns.
inline double window_start(const PulseSequence& seq, const SolverSettings& s = {}) {
  return units::ps_to_ns(seq.pulse.center) - s.window * units::ps_to_ns(seq.pulse.fwhm);
}

/// Readout time t1 = t0 + delay + fwhm, ns. The delay is zero for a single pulse.
inline double readout_time(const PulseSequence& seq) {
  return units::ps_to_ns(seq.pulse.center) + seq.delay_ns() + units::ps_to_ns(seq.pulse.fwhm);
}

/// Integrates the rotating-frame model over [window_start, readout_time].
/// With `keep_samples` the trajectory is sampled every solver.sample_interval.
inline Trajectory simulate(const SystemParams& params, const PulseSequence& seq, const SolverSettings& solver = {},
                           bool keep_samples = true) {
  params.validate();
  seq.validate();
  const LindbladGenerator rhs(trion_model(params, seq));
  IntegratorOptions opt;
  opt.tol = solver.tol;
  opt.sample_interval = keep_samples ? units::ps_to_ns(solver.sample_interval) : 0.0;
  return integrate(initial_state(params, solver.initial_state), rhs, window_start(seq, solver), readout_time(seq), opt);
}

/// Detected-signal observable from a trajectory.
inline double signal(const Trajectory& traj, const PulseSequence& seq, SignalMode mode = SignalMode::population,
                     const SystemParams& params = {}) {
  const double t1 = readout_time(seq);
  const double slack = 1e-12 * std::max(1.0, std::abs(t1));
  if (traj.times.empty() || traj.start() > t1 + slack || traj.end() < t1 - slack) {
    throw std::invalid_argument("signal: trajectory does not cover the readout time");
  }
  if (mode == SignalMode::population) {
    const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t1 - slack);
    const auto k = static_cast<std::size_t>(std::distance(traj.times.begin(), it));
    if (std::abs(traj.times[k] - t1) <= slack) return traj.states[k].population(3);
    const double ta = traj.times[k - 1], tb = traj.times[k];
    const double w = (t1 - ta) / (tb - ta);
    return (1.0 - w) * traj.states[k - 1].population(3) + w * traj.states[k].population(3);
  }
  double integral = 0.0;
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    if (traj.times[k - 1] >= t1) break;
    integral += 0.5 * (traj.times[k] - traj.times[k - 1]) *
                (traj.states[k].population(3) + traj.states[k - 1].population(3));
  }
  return 0.5 * params.gamma_spont * integral;
}

struct PointResult {
  double signal = 0.0;
  IntegratorStats stats;
};

inline PointResult simulate_signal(const SystemParams& params, const PulseSequence& seq, const SolverSettings& solver,
                                   SignalMode mode) {
  const Trajectory traj = simulate(params, seq, solver, mode == SignalMode::integrated_emission);
  return {signal(traj, seq, mode, params), traj.stats};
}

// ---------------------------------------------------------------------------
// Sweep results

struct Axis {
  std::string name;
  std::vector<double> values;

  friend bool operator==(const Axis&, const Axis&) = default;
};

struct RunMetadata {
  SystemParams params;
  PulseSequence sequence;  // template; swept fields are overwritten per point
  SolverSettings solver;
  SignalMode mode = SignalMode::population;
  IntegratorStats stats;
  double wall_seconds = 0.0;
  std::string timestamp;
};

/// Row-major grid over the axes (first axis outermost).
struct SweepResult {
  std::vector<Axis> axes;
  std::vector<double> values;
  std::vector<char> filled;
  RunMetadata meta;
  bool partial = false;
  std::string error;

  std::size_t size() const { return values.size(); }
  std::size_t extent(std::size_t axis) const { return axes.at(axis).values.size(); }
  double at(std::size_t i) const { return values.at(i); }
  double at(std::size_t i, std::size_t j) const { return values.at(i * extent(1) + j); }
};

class SweepError : public std::runtime_error {
 public:
  SweepError(const std::string& what, SweepResult partial) : std::runtime_error(what), partial_(std::move(partial)) {}
  const SweepResult& partial() const { return partial_; }

 private:
  SweepResult partial_;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Evaluates point(i) for i in [0, n) on a pool of workers. Each point writes
/// only its own slot. The first failure stops scheduling of further points;
/// the result is then returned with `partial` set and `error` filled.
template <class PointFn>
SweepResult run_grid(std::vector<Axis> axes, RunMetadata meta, const PointFn& point) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  SweepResult out;
  out.axes = std::move(axes);
  out.values.assign(n, 0.0);
  out.filled.assign(n, 0);
  std::vector<IntegratorStats> stats(n);

  const auto start = std::chrono::steady_clock::now();
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex error_mutex;
  std::optional<std::pair<std::size_t, std::string>> first_error;

  auto worker = [&]() {
    while (!abort.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        const PointResult r = point(i);
        out.values[i] = r.signal;
        stats[i] = r.stats;
        out.filled[i] = 1;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error || i < first_error->first) first_error = {i, e.what()};
        abort.store(true);
      }
    }
  };
  const int threads = std::min<int>(resolve_thread_count(meta.solver.threads), static_cast<int>(std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
  }

  for (const auto& s : stats) meta.stats += s;
  meta.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  meta.timestamp = utc_timestamp();
  out.meta = std::move(meta);
  if (first_error) {
    out.partial = true;
    out.error = "grid point " + std::to_string(first_error->first) + ": " + first_error->second;
  }
  return out;
}

namespace detail {
inline SweepResult finish(SweepResult r) {
  if (r.partial) {
    const std::string msg = r.error;
    throw SweepError(msg, std::move(r));
  }
  return r;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments

struct SweepSettings {
  SolverSettings solver;
  SignalMode mode = SignalMode::population;
  Pulse pulse;  // fwhm and center; the peak is set from the swept area
};

/// Single-pulse signal against pulse area (multiples of pi).
inline SweepResult rabi_sweep(const SystemParams& params, std::span<const double> areas_pi, double detuning,
                              const SweepSettings& s = {}) {
  PulseSequence tmpl;
  tmpl.pulse = s.pulse;
  tmpl.detuning = detuning;
  tmpl.second_pulse = false;
  std::vector<Axis> axes{{"area_pi", {areas_pi.begin(), areas_pi.end()}}};
  RunMetadata meta{params, tmpl, s.solver, s.mode, {}, 0.0, {}};
  const std::vector<double> areas(areas_pi.begin(), areas_pi.end());
  return detail::finish(run_grid(std::move(axes), std::move(meta), [&](std::size_t i) {
    PulseSequence seq = tmpl;
    seq.pulse.peak = peak_for_area(areas[i] * std::numbers::pi, seq.pulse.fwhm);
    return simulate_signal(params, seq, s.solver, s.mode);
  }));
}

/// Two-pulse signal against fine delay (fs) at fixed coarse delay (ps). Each
/// pulse has area `area_pi` (pi/2 by default).
inline SweepResult ramsey_fine_scan(const SystemParams& params, double coarse_delay_ps,
                                    std::span<const double> fine_delays_fs, double detuning, double area_pi = 0.5,
                                    const SweepSettings& s = {}) {
  PulseSequence tmpl;
  tmpl.pulse = s.pulse;
  tmpl.pulse.peak = peak_for_area(area_pi * std::numbers::pi, s.pulse.fwhm);
  tmpl.detuning = detuning;
  tmpl.second_pulse = true;
  tmpl.coarse_delay = coarse_delay_ps;
  std::vector<Axis> axes{{"fine_delay_fs", {fine_delays_fs.begin(), fine_delays_fs.end()}}};
  RunMetadata meta{params, tmpl, s.solver, s.mode, {}, 0.0, {}};
  const std::vector<double> fine(fine_delays_fs.begin(), fine_delays_fs.end());
  return detail::finish(run_grid(std::move(axes), std::move(meta), [&](std::size_t i) {
    PulseSequence seq = tmpl;
    seq.fine_delay = fine[i];
    return simulate_signal(params, seq, s.solver, s.mode);
  }));
}

/// Expected fringe frequency against fine delay, cycles per fs: omega_L / 2 pi.
inline double fringe_frequency_hint(const SystemParams& params, double detuning) {
  return laser_frequency(params, detuning) * 1e-6;
}

struct CoherenceScan {
  SweepResult amplitude;  // axis coarse_delay_ps; value = fitted fringe amplitude
  SweepResult fringes;    // axes coarse_delay_ps x fine_delay_fs
  std::vector<FitReport> fringe_fits;
};

class FringeFitError : public std::runtime_error {
 public:
  FringeFitError(const std::string& what, double coarse_delay_ps)
      : std::runtime_error(what), coarse_delay_(coarse_delay_ps) {}
  double coarse_delay() const { return coarse_delay_; }

 private:
  double coarse_delay_;
};

/// Ramsey fine scans at each coarse delay; the fringe amplitude of each scan
/// comes from fit_sinusoid.
inline CoherenceScan coherence_scan(const SystemParams& params, std::span<const double> coarse_delays_ps,
                                    std::span<const double> fine_grid_fs, double detuning, double area_pi = 0.5,
                                    const SweepSettings& s = {}) {
  PulseSequence tmpl;
  tmpl.pulse = s.pulse;
  tmpl.pulse.peak = peak_for_area(area_pi * std::numbers::pi, s.pulse.fwhm);
  tmpl.detuning = detuning;
  tmpl.second_pulse = true;
  const std::vector<double> coarse(coarse_delays_ps.begin(), coarse_delays_ps.end());
  const std::vector<double> fine(fine_grid_fs.begin(), fine_grid_fs.end());
  std::vector<Axis> axes{{"coarse_delay_ps", coarse}, {"fine_delay_fs", fine}};
  RunMetadata meta{params, tmpl, s.solver, s.mode, {}, 0.0, {}};

  CoherenceScan out;
  out.fringes = detail::finish(run_grid(std::move(axes), meta, [&](std::size_t idx) {
    PulseSequence seq = tmpl;
    seq.coarse_delay = coarse[idx / fine.size()];
    seq.fine_delay = fine[idx % fine.size()];
    return simulate_signal(params, seq, s.solver, s.mode);
  }));

  out.amplitude.axes = {{"coarse_delay_ps", coarse}};
  out.amplitude.meta = out.fringes.meta;
  const double hint = fringe_frequency_hint(params, detuning);
  for (std::size_t c = 0; c < coarse.size(); ++c) {
    const std::span<const double> row(out.fringes.values.data() + c * fine.size(), fine.size());
    FitReport fr;
    try {
      fr = fit_sinusoid(fine, row, hint);
    } catch (const std::exception& e) {
      throw FringeFitError("fringe fit failed at coarse delay " + std::to_string(coarse[c]) + " ps: " + e.what(),
                           coarse[c]);
    }
    if (!fr.converged) {
      throw FringeFitError("fringe fit did not converge at coarse delay " + std::to_string(coarse[c]) + " ps",
                           coarse[c]);
    }
    out.amplitude.values.push_back(fr.get("amplitude"));
    out.amplitude.filled.push_back(1);
    out.fringe_fits.push_back(std::move(fr));
  }
  return out;
}

/// Two-pulse signal over (area per pulse, fine delay) at fixed coarse delay.
inline SweepResult control_map(const SystemParams& params, std::span<const double> areas_pi,
                               std::span<const double> fine_delays_fs, double coarse_delay_ps, double detuning,
                               const SweepSettings& s = {}) {
  PulseSequence tmpl;
  tmpl.pulse = s.pulse;
  tmpl.detuning = detuning;
  tmpl.second_pulse = true;
  tmpl.coarse_delay = coarse_delay_ps;
  const std::vector<double> areas(areas_pi.begin(), areas_pi.end());
  const std::vector<double> fine(fine_delays_fs.begin(), fine_delays_fs.end());
  std::vector<Axis> axes{{"area_pi", areas}, {"fine_delay_fs", fine}};
  RunMetadata meta{params, tmpl, s.solver, s.mode, {}, 0.0, {}};
  return detail::finish(run_grid(std::move(axes), std::move(meta), [&](std::size_t idx) {
    PulseSequence seq = tmpl;
    seq.pulse.peak = peak_for_area(areas[idx / fine.size()] * std::numbers::pi, seq.pulse.fwhm);
    seq.fine_delay = fine[idx % fine.size()];
    return simulate_signal(params, seq, s.solver, s.mode);
  }));
}

/// Evenly spaced grid of `count` points over [start, stop].
inline std::vector<double> linspace(double start, double stop, std::size_t count) {
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = start;
    return v;
  }
  for (std::size_t i = 0; i < count; ++i) v[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  return v;
}

}  // namespace trion
