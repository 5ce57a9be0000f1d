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

// The four-level double-Lambda trion system: levels 1 = |up>, 2 = |down>
// (electron spin ground states, 1 lower), 3 and 4 the two trion states
// (3 lower). Transitions 1<->4 and 2<->3 are driven; 2<->3 is the qubit.

#include "trion/expm.hpp"
#include "trion/lindblad.hpp"
#include "trion/units.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace trion {

/// Which operator carries the pure trion dephasing.
enum class DephasingOperator {
  manifold,   // one channel on s33 + s44
  per_level,  // independent channels on s33 and s44
};

/// How gamma_deph scales the dephasing operator. `amplitude` uses the
/// numerical value of gamma_deph as the operator prefactor (coherence decay
/// gamma_deph^2 / 2); `rate` uses sqrt(gamma_deph) (decay gamma_deph / 2).
enum class DephasingScale { amplitude, rate };

/// Physical parameters in publication units: frequencies in GHz (E / 2 pi),
/// rates in ns^-1.
struct SystemParams {
  double delta_e_gs = 104.2;       // ground-state Zeeman splitting, GHz
  double delta_e_tr = 15.1;        // trion splitting, GHz
  double omega0 = 333.0e3;         // zero-field transition frequency, GHz
  double gamma_spont = 1.0;        // total spontaneous decay rate per trion, ns^-1
  double gamma_pump = 50.0 / 420.0;  // above-band pumping rate, ns^-1
  double gamma_deph = 1.0 / 145e-3;  // trion pure dephasing, ns^-1
  double alpha_phonon = 1.0 / 3.6e-3;  // excitation-induced dephasing coefficient, ns^-1
  double kappa = 5.7e-3;           // dimensionless calibration of the phonon channel
  double gamma_spin = 0.0;         // ground spin dephasing, ns^-1 (off by default)
  DephasingOperator dephasing_operator = DephasingOperator::manifold;
  DephasingScale dephasing_scale = DephasingScale::amplitude;

  friend bool operator==(const SystemParams&, const SystemParams&) = default;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("SystemParams: ") + what);
    };
    require(gamma_spont >= 0.0, "gamma_spont must be >= 0");
    require(gamma_pump >= 0.0, "gamma_pump must be >= 0");
    require(gamma_deph >= 0.0, "gamma_deph must be >= 0");
    require(alpha_phonon >= 0.0, "alpha_phonon must be >= 0");
    require(kappa >= 0.0, "kappa must be >= 0");
    require(gamma_spin >= 0.0, "gamma_spin must be >= 0");
    require(omega0 > 0.0, "omega0 must be > 0");
    require(delta_e_tr > 0.0, "delta_e_tr must be > 0");
    require(delta_e_gs > delta_e_tr, "delta_e_gs must exceed delta_e_tr");
  }

  /// Parameters with every incoherent process switched off.
  SystemParams closed() const {
    SystemParams p = *this;
    p.gamma_spont = p.gamma_pump = p.gamma_deph = p.alpha_phonon = p.gamma_spin = 0.0;
    return p;
  }
};

/// Gaussian amplitude envelope. peak in GHz (Omega / 2 pi), fwhm and center
/// in ps.
struct Pulse {
  double peak = 0.0;
  double fwhm = 23.0;
  double center = 0.0;

  friend bool operator==(const Pulse&, const Pulse&) = default;
};

struct PulseSequence {
  Pulse pulse;                // template for both copies
  double coarse_delay = 0.0;  // ps
  double fine_delay = 0.0;    // fs
  double detuning = 0.0;      // GHz
  bool second_pulse = false;

  friend bool operator==(const PulseSequence&, const PulseSequence&) = default;

  /// Interpulse delay in ns; zero in single-pulse mode.
  double delay_ns() const {
    if (!second_pulse) return 0.0;
    return units::ps_to_ns(coarse_delay) + units::fs_to_ns(fine_delay);
  }

  void validate() const {
    if (!(pulse.peak >= 0.0)) throw std::invalid_argument("Pulse: peak must be >= 0");
    if (!(pulse.fwhm > 0.0)) throw std::invalid_argument("Pulse: fwhm must be > 0");
    if (second_pulse && !(units::ps_to_ns(coarse_delay) + units::fs_to_ns(fine_delay) >= 0.0)) {
      throw std::invalid_argument("PulseSequence: total delay must be >= 0");
    }
  }
};

// ---------------------------------------------------------------------------
// Pulses

namespace detail {
inline const double kGaussianExponent = 4.0 * std::numbers::ln2;
// integral of exp(-4 ln2 x^2 / w^2) dx = w * sqrt(pi / (4 ln 2))
inline const double kGaussianAreaFactor = std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
}  // namespace detail

/// Driving strength Omega(t) in rad/ns for time t in ns.
inline double envelope(const Pulse& p, double t_ns) {
  const double w = units::ps_to_ns(p.fwhm);
  const double x = (t_ns - units::ps_to_ns(p.center)) / w;
  return units::ghz_to_rad_per_ns(p.peak) * std::exp(-detail::kGaussianExponent * x * x);
}

/// Closed-form integral of Omega(t) over all time, rad.
inline double envelope_integral(const Pulse& p) {
  return units::ghz_to_rad_per_ns(p.peak) * units::ps_to_ns(p.fwhm) * detail::kGaussianAreaFactor;
}

/// Pulse area A = 2 * integral Omega dt (A = pi inverts a closed two-level system).
inline double pulse_area(const Pulse& p) { return 2.0 * envelope_integral(p); }

/// Area delivered by a single pulse up to time t_ns: 2 * integral of Omega
/// from -infinity to t.
inline double delivered_area(const Pulse& p, double t_ns) {
  const double x = (t_ns - units::ps_to_ns(p.center)) / units::ps_to_ns(p.fwhm);
  return 0.5 * pulse_area(p) * std::erfc(-std::sqrt(detail::kGaussianExponent) * x);
}

/// Peak strength (GHz) giving area `area_rad` at the given fwhm (ps).
inline double peak_for_area(double area_rad, double fwhm_ps) {
  return area_rad / (2.0 * units::two_pi * units::ps_to_ns(fwhm_ps) * detail::kGaussianAreaFactor);
}

/// Laser frequency omega_L / 2 pi in GHz.
inline double laser_frequency(const SystemParams& p, double detuning_ghz) {
  return p.omega0 - 0.5 * p.delta_e_tr - 0.5 * p.delta_e_gs - detuning_ghz;
}

/// omega_L * delay reduced into [0, 2 pi). The product is formed in extended
/// precision as a cycle count so the fractional part survives.
inline double second_pulse_phase(const SystemParams& p, const PulseSequence& seq) {
  if (!seq.second_pulse) return 0.0;
  const long double f_ghz = static_cast<long double>(p.omega0) - 0.5L * p.delta_e_tr - 0.5L * p.delta_e_gs -
                            static_cast<long double>(seq.detuning);
  const long double delay_ns =
      static_cast<long double>(seq.coarse_delay) * 1e-3L + static_cast<long double>(seq.fine_delay) * 1e-6L;
  const long double cycles = f_ghz * delay_ns;
  const long double frac = cycles - std::floor(cycles);
  return static_cast<double>(2.0L * std::numbers::pi_v<long double> * frac);
}

/// Combined real envelope Omega(t) + Omega(t - delay).
inline double total_envelope(const PulseSequence& seq, double t_ns) {
  double e = envelope(seq.pulse, t_ns);
  if (seq.second_pulse) e += envelope(seq.pulse, t_ns - seq.delay_ns());
  return e;
}

/// Drive coefficient on s14 and s23: Omega(t) + Omega(t - delay) exp(i omega_L delay).
inline Complex drive_coefficient(const PulseSequence& seq, double phase, double t_ns) {
  Complex g = envelope(seq.pulse, t_ns);
  if (seq.second_pulse) g += envelope(seq.pulse, t_ns - seq.delay_ns()) * std::polar(1.0, phase);
  return g;
}

// ---------------------------------------------------------------------------
// Hamiltonians and channels

/// Diagonal of H0 - omega_L (s33 + s44), rad/ns.
inline std::array<double, 4> rotating_frame_levels(const SystemParams& p, double detuning_ghz) {
  using units::ghz_to_rad_per_ns;
  const double gs = ghz_to_rad_per_ns(p.delta_e_gs);
  const double tr = ghz_to_rad_per_ns(p.delta_e_tr);
  const double det = ghz_to_rad_per_ns(detuning_ghz);
  return {-0.5 * gs, 0.5 * gs, 0.5 * gs + det, tr + 0.5 * gs + det};
}

/// Lab-frame H0 diagonal, rad/ns.
inline std::array<double, 4> lab_frame_levels(const SystemParams& p) {
  using units::ghz_to_rad_per_ns;
  const double gs = ghz_to_rad_per_ns(p.delta_e_gs);
  const double tr = ghz_to_rad_per_ns(p.delta_e_tr);
  const double w0 = ghz_to_rad_per_ns(p.omega0);
  return {-0.5 * gs, 0.5 * gs, w0 - 0.5 * tr, w0 + 0.5 * tr};
}

inline ComplexMatrix4 driven_transitions() { return level_op(1, 4) + level_op(2, 3); }

/// Hamiltonian in the frame rotating at omega_L, rad/ns, for t in ns.
inline ComplexMatrix4 rotating_hamiltonian(const SystemParams& p, const PulseSequence& seq, double t_ns) {
  const auto lv = rotating_frame_levels(p, seq.detuning);
  ComplexMatrix4 h = ComplexMatrix4::Zero();
  for (int k = 0; k < kLevels; ++k) h(k, k) = lv[k];
  const Complex g = drive_coefficient(seq, second_pulse_phase(p, seq), t_ns);
  const ComplexMatrix4 a = driven_transitions();
  h += g * a + std::conj(g) * a.adjoint();
  return h;
}

/// Decay, pumping, dephasing and the two excitation-dependent phonon channels.
inline std::vector<CollapseChannel> collapse_channels(const SystemParams& p, const PulseSequence& seq) {
  std::vector<CollapseChannel> out;
  const double half_spont = 0.5 * p.gamma_spont;
  out.push_back(CollapseChannel::constant(level_op(1, 3), half_spont, "decay_31"));
  out.push_back(CollapseChannel::constant(level_op(2, 3), half_spont, "decay_32"));
  out.push_back(CollapseChannel::constant(level_op(1, 4), half_spont, "decay_41"));
  out.push_back(CollapseChannel::constant(level_op(2, 4), half_spont, "decay_42"));

  const double half_pump = 0.5 * p.gamma_pump;
  out.push_back(CollapseChannel::constant(level_op(3, 1), half_pump, "pump_13"));
  out.push_back(CollapseChannel::constant(level_op(3, 2), half_pump, "pump_23"));
  out.push_back(CollapseChannel::constant(level_op(4, 1), half_pump, "pump_14"));
  out.push_back(CollapseChannel::constant(level_op(4, 2), half_pump, "pump_24"));

  const double deph_rate =
      p.dephasing_scale == DephasingScale::amplitude ? p.gamma_deph * p.gamma_deph : p.gamma_deph;
  if (p.dephasing_operator == DephasingOperator::manifold) {
    out.push_back(CollapseChannel::constant(level_op(3, 3) + level_op(4, 4), deph_rate, "dephasing"));
  } else {
    out.push_back(CollapseChannel::constant(level_op(3, 3), deph_rate, "dephasing_3"));
    out.push_back(CollapseChannel::constant(level_op(4, 4), deph_rate, "dephasing_4"));
  }

  if (p.gamma_spin > 0.0) out.push_back(CollapseChannel::constant(level_op(2, 2), p.gamma_spin, "spin_dephasing"));

  const double scale = std::sqrt(p.alpha_phonon) * p.kappa;
  auto amplitude = [seq, scale](double t) { return scale * total_envelope(seq, t); };
  out.push_back(CollapseChannel::time_dependent(level_op(3, 3), amplitude, "phonon_3"));
  out.push_back(CollapseChannel::time_dependent(level_op(4, 4), amplitude, "phonon_4"));
  return out;
}

/// The full open-system model in the rotating frame.
inline LindbladModel trion_model(const SystemParams& p, const PulseSequence& seq) {
  LindbladModel m;
  const auto lv = rotating_frame_levels(p, seq.detuning);
  for (int k = 0; k < kLevels; ++k) m.static_hamiltonian(k, k) = lv[k];
  const double phase = second_pulse_phase(p, seq);
  m.drives.push_back({driven_transitions(), [seq, phase](double t) { return drive_coefficient(seq, phase, t); }});
  m.channels = collapse_channels(p, seq);
  return m;
}

/// The same physics in the laboratory frame: H0 carries omega0 and the drive
/// carries the optical carrier exp(i omega_L t). Only affordable with an
/// artificially small omega0; used to cross-check the frame transformation.
inline LindbladModel lab_frame_model(const SystemParams& p, const PulseSequence& seq) {
  LindbladModel m;
  const auto lv = lab_frame_levels(p);
  for (int k = 0; k < kLevels; ++k) m.static_hamiltonian(k, k) = lv[k];
  const double phase = second_pulse_phase(p, seq);
  const double w_laser = units::ghz_to_rad_per_ns(laser_frequency(p, seq.detuning));
  m.drives.push_back({driven_transitions(), [seq, phase, w_laser](double t) {
                        return drive_coefficient(seq, phase, t) * std::polar(1.0, w_laser * t);
                      }});
  m.channels = collapse_channels(p, seq);
  return m;
}

// ---------------------------------------------------------------------------
// Initial state

enum class InitialStateMode {
  half_mixed,    // 1/2 (s11 + s22)
  steady_state,  // undriven fixed point of pumping and decay
};

class SteadyStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline DensityMatrix initial_state(const SystemParams& p, InitialStateMode mode = InitialStateMode::half_mixed) {
  if (mode == InitialStateMode::half_mixed) return DensityMatrix::diagonal(0.5, 0.5, 0.0, 0.0);
  if (!(p.gamma_spont > 0.0)) throw SteadyStateError("initial_state: steady state needs gamma_spont > 0");

  std::vector<ComplexMatrix4> ops;
  const double half_spont = 0.5 * p.gamma_spont;
  const double half_pump = 0.5 * p.gamma_pump;
  for (auto [i, j] : {std::pair{1, 3}, {2, 3}, {1, 4}, {2, 4}}) ops.push_back(std::sqrt(half_spont) * level_op(i, j));
  for (auto [i, j] : {std::pair{3, 1}, {3, 2}, {4, 1}, {4, 2}}) ops.push_back(std::sqrt(half_pump) * level_op(i, j));
  const Superoperator l = liouvillian(ComplexMatrix4::Zero(), ops);

  // Relax by repeated squaring of the one-nanosecond propagator.
  VecState v = vectorize(DensityMatrix::diagonal(0.25, 0.25, 0.25, 0.25).matrix());
  Superoperator step = expm(Superoperator(l));
  double elapsed = 0.0;
  double chunk = 1.0;
  constexpr double kLimit = 1e4;
  while (true) {
    if ((l * v).cwiseAbs().maxCoeff() < 1e-12) return DensityMatrix(unvectorize(v));
    if (elapsed + chunk > kLimit) break;
    v = step * v;
    elapsed += chunk;
    step = step * step;
    chunk *= 2.0;
  }
  throw SteadyStateError("initial_state: steady state not reached after 1e4 ns of relaxation");
}

// ---------------------------------------------------------------------------
// Magneto-optical line positions

struct MagnetoModel {
  double g_e = 1.49;
  double g_h = 0.22;
  double diamagnetic = 7.13;  // ueV / T^2
  double e0 = 333.0e3 * units::planck_uev_per_ghz;  // ueV

  friend bool operator==(const MagnetoModel&, const MagnetoModel&) = default;

  void validate() const {
    if (!(g_h > 0.0 && g_e > g_h)) throw std::invalid_argument("MagnetoModel: requires g_e > g_h > 0");
    if (!(diamagnetic >= 0.0)) throw std::invalid_argument("MagnetoModel: diamagnetic must be >= 0");
  }
};

/// Transition energies (ueV) of the four optical lines, named by the
/// trion -> ground pair: e32 lowest outer, e41 highest outer, e31 and e42 inner.
struct ZeemanLines {
  double b = 0.0;
  double e31 = 0.0;
  double e32 = 0.0;
  double e41 = 0.0;
  double e42 = 0.0;
  double ground_splitting = 0.0;  // ueV
  double trion_splitting = 0.0;   // ueV
  double diamagnetic_shift = 0.0; // ueV
};

inline ZeemanLines zeeman_lines(const MagnetoModel& m, double b_tesla) {
  if (!(b_tesla >= 0.0)) throw std::invalid_argument("zeeman_lines: b must be >= 0");
  ZeemanLines z;
  z.b = b_tesla;
  z.ground_splitting = m.g_e * units::bohr_magneton_uev_per_t * b_tesla;
  z.trion_splitting = m.g_h * units::bohr_magneton_uev_per_t * b_tesla;
  z.diamagnetic_shift = m.diamagnetic * b_tesla * b_tesla;
  const double mid = m.e0 + z.diamagnetic_shift;
  const double gs = 0.5 * z.ground_splitting;
  const double tr = 0.5 * z.trion_splitting;
  z.e31 = mid - tr + gs;
  z.e32 = mid - tr - gs;
  z.e41 = mid + tr + gs;
  z.e42 = mid + tr - gs;
  return z;
}

}  // namespace trion
