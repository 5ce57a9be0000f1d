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

// Cross-checks of the solver against independent references: physical
// invariants along trajectories, matrix-exponential propagation, the closed
// two-level limit and the laboratory frame.

#include "trion/experiments.hpp"
#include "trion/expm.hpp"
#include "trion/integrator.hpp"
#include "trion/system.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace trion {

struct RandomCase {
  SystemParams params;
  PulseSequence sequence;
  InitialStateMode initial = InitialStateMode::half_mixed;
};

/// Draws parameters around the default set: rates scaled by [0.5, 2],
/// detuning within +-20 GHz, area per pulse up to 4 pi, one or two pulses.
inline RandomCase random_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto scale = [&]() { return std::exp(std::log(0.5) + unit(rng) * std::log(4.0)); };
  RandomCase c;
  auto& p = c.params;
  p.gamma_spont *= scale();
  p.gamma_pump *= scale();
  p.gamma_deph *= scale();
  p.alpha_phonon *= scale();
  p.delta_e_gs *= 0.8 + 0.4 * unit(rng);
  p.delta_e_tr *= 0.8 + 0.4 * unit(rng);
  if (unit(rng) < 0.3) p.gamma_spin = 0.5 * unit(rng);
  if (unit(rng) < 0.3) p.dephasing_operator = DephasingOperator::per_level;
  auto& s = c.sequence;
  s.detuning = -20.0 + 40.0 * unit(rng);
  s.pulse.fwhm = 18.0 + 10.0 * unit(rng);
  s.pulse.peak = peak_for_area(4.0 * std::numbers::pi * unit(rng), s.pulse.fwhm);
  s.second_pulse = unit(rng) < 0.6;
  if (s.second_pulse) {
    s.coarse_delay = 20.0 + 160.0 * unit(rng);
    s.fine_delay = 11.0 * unit(rng);
  }
  if (unit(rng) < 0.3) c.initial = InitialStateMode::steady_state;
  return c;
}

struct InvariantReport {
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 1.0;
  std::size_t samples = 0;

  bool within(const PhysicalTolerances& tol = {}) const {
    return max_trace_error < tol.trace && max_hermiticity_error < tol.hermiticity &&
           min_eigenvalue > tol.min_eigenvalue;
  }
};

/// Integrates a case with dense sampling and collects the worst invariant
/// deviations over all samples. The integrator's own aborts are disabled so
/// the numbers are reported rather than thrown.
inline InvariantReport invariant_report(const RandomCase& c, double sample_interval_ns = 2e-4) {
  SolverSettings solver;
  solver.initial_state = c.initial;
  IntegratorOptions opt;
  opt.sample_interval = sample_interval_ns;
  opt.check_invariants = false;
  const LindbladGenerator rhs(trion_model(c.params, c.sequence));
  const Trajectory traj = integrate(initial_state(c.params, c.initial), rhs, window_start(c.sequence, solver),
                                    readout_time(c.sequence), opt);
  InvariantReport r;
  for (const auto& rho : traj.states) {
    r.max_trace_error = std::max(r.max_trace_error, std::abs(rho.trace() - 1.0));
    r.max_hermiticity_error = std::max(r.max_hermiticity_error, rho.hermiticity_error());
    r.min_eigenvalue = std::min(r.min_eigenvalue, rho.min_eigenvalue());
  }
  r.samples = traj.states.size();
  return r;
}

/// Slice layout for the exponential oracle. The midpoint rule's local error
/// is driven by the drive's time derivatives, so the slice density follows the
/// cube root of |Omega'| + 0.3 |Omega''| (in fwhm units, normalized to the
/// peak), with a small floor for the field-free stretches.
inline std::vector<double> oracle_slices(const PulseSequence& seq, double t0, double t1, int n_slices) {
  const double peak = units::ghz_to_rad_per_ns(seq.pulse.peak);
  if (!(peak > 0.0)) return slice_boundaries(t0, t1, n_slices, [](double) { return 1.0; });
  const double w = units::ps_to_ns(seq.pulse.fwhm);
  const double k = 4.0 * std::numbers::ln2 / (w * w);
  std::vector<double> centers{units::ps_to_ns(seq.pulse.center)};
  if (seq.second_pulse) centers.push_back(centers[0] + seq.delay_ns());
  return slice_boundaries(t0, t1, n_slices, [&](double t) {
    double d1 = 0.0, d2 = 0.0;
    for (double c : centers) {
      const double x = t - c;
      const double e = std::exp(-k * x * x);
      d1 += -2.0 * k * x * e;
      d2 += (4.0 * k * k * x * x - 2.0 * k) * e;
    }
    return std::cbrt(std::abs(d1) * w + 0.3 * std::abs(d2) * w * w + 1e-4);
  });
}

/// Largest entrywise difference between the adaptive integrator and sliced
/// matrix-exponential propagation at the readout time.
inline double oracle_deviation(const RandomCase& c, int n_slices = 2000, double tol = 1e-9) {
  SolverSettings solver;
  solver.initial_state = c.initial;
  const LindbladModel model = trion_model(c.params, c.sequence);
  const DensityMatrix rho0 = initial_state(c.params, c.initial);
  const double t0 = window_start(c.sequence, solver), t1 = readout_time(c.sequence);
  IntegratorOptions opt;
  opt.tol = tol;
  opt.sample_interval = 0.0;
  const DensityMatrix a = integrate(rho0, LindbladGenerator(model), t0, t1, opt).final_state();
  const DensityMatrix b = expm_propagate(rho0, model, oracle_slices(c.sequence, t0, t1, n_slices));
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

/// Resonant single pulse of area pi with default parameters.
inline RandomCase pi_pulse_case() {
  RandomCase c;
  c.sequence.pulse.peak = peak_for_area(std::numbers::pi, c.sequence.pulse.fwhm);
  return c;
}

/// Closed two-level limit: dissipation off, start in |2>, one resonant pulse
/// of the given area. Reports rho33 at the readout time t1 and once the pulse
/// is over (t1 plus 2.2 fwhm), next to the pulse-area law sin^2(theta / 2) with
/// theta the area delivered by each time.
struct TwoLevelResult {
  double at_readout = 0.0;
  double expected_at_readout = 0.0;
  double after_pulse = 0.0;
  double expected_after_pulse = 0.0;

  double error() const {
    return std::max(std::abs(at_readout - expected_at_readout), std::abs(after_pulse - expected_after_pulse));
  }
};

inline TwoLevelResult two_level_limit(double area_rad, double tol = 1e-10) {
  const SystemParams p = SystemParams{}.closed();
  PulseSequence seq;
  seq.pulse.peak = peak_for_area(area_rad, seq.pulse.fwhm);
  IntegratorOptions opt;
  opt.tol = tol;
  opt.sample_interval = 0.0;
  const LindbladGenerator rhs(trion_model(p, seq));
  const double t1 = readout_time(seq);
  const double t_end = t1 + 2.2 * units::ps_to_ns(seq.pulse.fwhm);
  TwoLevelResult r;
  const Trajectory a = integrate(DensityMatrix::pure_level(2), rhs, window_start(seq), t1, opt);
  r.at_readout = a.final_state().population(3);
  r.expected_at_readout = std::pow(std::sin(0.5 * delivered_area(seq.pulse, t1)), 2);
  const Trajectory b = integrate(a.final_state(), rhs, t1, t_end, opt);
  r.after_pulse = b.final_state().population(3);
  r.expected_after_pulse = std::pow(std::sin(0.5 * delivered_area(seq.pulse, t_end)), 2);
  return r;
}

/// A configuration with omega0 reduced so the optical carrier is resolvable.
inline RandomCase reduced_frame_case(std::mt19937_64& rng, double omega0_ghz = 500.0) {
  RandomCase c = random_case(rng);
  c.params.omega0 = omega0_ghz;
  c.initial = InitialStateMode::half_mixed;
  return c;
}

/// |rho33(t1)| difference between rotating-frame and laboratory-frame runs.
inline double frame_deviation(const RandomCase& c, double tol = 1e-10) {
  IntegratorOptions opt;
  opt.tol = tol;
  opt.sample_interval = 0.0;
  const DensityMatrix rho0 = initial_state(c.params, c.initial);
  const double t0 = window_start(c.sequence), t1 = readout_time(c.sequence);
  const double rot =
      integrate(rho0, LindbladGenerator(trion_model(c.params, c.sequence)), t0, t1, opt).final_state().population(3);
  const double lab = integrate(rho0, LindbladGenerator(lab_frame_model(c.params, c.sequence)), t0, t1, opt)
                         .final_state()
                         .population(3);
  return std::abs(rot - lab);
}

// ---------------------------------------------------------------------------
// Battery

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The quick battery behind `trion-dynamics selftest`.
inline std::vector<CheckResult> self_test(std::uint64_t seed = 20240917, int random_cases = 5) {
  std::vector<CheckResult> out;
  auto record = [&](std::string name, const std::function<std::pair<bool, std::string>()>& fn) {
    try {
      auto [ok, detail] = fn();
      out.push_back({std::move(name), ok, std::move(detail)});
    } catch (const std::exception& e) {
      out.push_back({std::move(name), false, std::string("exception: ") + e.what()});
    }
  };
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
  };

  std::mt19937_64 rng(seed);
  std::vector<RandomCase> cases;
  for (int i = 0; i < random_cases; ++i) cases.push_back(random_case(rng));

  record("invariants", [&] {
    bool ok = true;
    double tr = 0, he = 0, ev = 1;
    for (const auto& c : cases) {
      const auto r = invariant_report(c);
      ok = ok && r.within();
      tr = std::max(tr, r.max_trace_error);
      he = std::max(he, r.max_hermiticity_error);
      ev = std::min(ev, r.min_eigenvalue);
    }
    return std::pair{ok, "trace " + fmt(tr) + ", hermiticity " + fmt(he) + ", min eigenvalue " + fmt(ev)};
  });
  record("oracle pi pulse", [&] {
    const double d = oracle_deviation(pi_pulse_case());
    return std::pair{d < 1e-6, "max |delta rho| " + fmt(d)};
  });
  record("oracle random", [&] {
    double worst = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(cases.size(), 2); ++i)
      worst = std::max(worst, oracle_deviation(cases[i]));
    return std::pair{worst < 1e-6, "max |delta rho| " + fmt(worst)};
  });
  record("two-level limit", [&] {
    double worst = 0.0;
    for (double a : {0.5, 1.0, 2.0, 3.0}) {
      worst = std::max(worst, two_level_limit(a * std::numbers::pi).error());
    }
    return std::pair{worst < 1e-4, "max error " + fmt(worst)};
  });
  record("frame cross-check", [&] {
    std::mt19937_64 frng(seed + 1);
    const double d = frame_deviation(reduced_frame_case(frng));
    return std::pair{d < 1e-4, "rho33 difference " + fmt(d)};
  });
  return out;
}

}  // namespace trion
