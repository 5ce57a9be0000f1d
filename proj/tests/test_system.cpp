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

#include "trion/expm.hpp"
#include "trion/integrator.hpp"
#include "trion/system.hpp"
#include "trion/validation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace trion {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Envelope, PeakValueAndSymmetry) {
  const Pulse p{4.46, 23.0, 5.0};
  EXPECT_DOUBLE_EQ(envelope(p, units::ps_to_ns(5.0)), 2.0 * kPi * 4.46);
  for (double dt : {1.0, 7.5, 23.0, 40.0})
    EXPECT_NEAR(envelope(p, units::ps_to_ns(5.0 + dt)), envelope(p, units::ps_to_ns(5.0 - dt)), 1e-13);
  EXPECT_NEAR(envelope(p, units::ps_to_ns(5.0 + 11.5)), 0.5 * 2.0 * kPi * 4.46, 1e-12);
  EXPECT_EQ(envelope(Pulse{0.0, 23.0, 0.0}, 0.01), 0.0);
}

TEST(Envelope, NegligibleBeyondWindow) {
  const Pulse p{4.46, 23.0, 0.0};
  const double peak = envelope(p, 0.0);
  EXPECT_LT(envelope(p, units::ps_to_ns(3.2 * 23.0 + 1e-3)) / peak, 1e-12);
}

TEST(Envelope, IntegralMatchesClosedFormAndQuadrature) {
  const Pulse p{4.46, 23.0, 0.0};
  EXPECT_NEAR(envelope_integral(p), 0.686, 5e-4);
  // Composite Simpson over +-10 fwhm.
  const double a = -0.23, b = 0.23;
  const int n = 20000;
  const double h = (b - a) / n;
  double s = envelope(p, a) + envelope(p, b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * envelope(p, a + k * h);
  EXPECT_NEAR(s * h / 3.0, envelope_integral(p), 1e-12);
}

TEST(PulseArea, PeakForAreaInverts) {
  for (double area : {0.5 * kPi, kPi, 4.25 * kPi}) {
    const Pulse p{peak_for_area(area, 23.0), 23.0, 0.0};
    EXPECT_NEAR(pulse_area(p), area, 1e-12);
  }
  const Pulse p{peak_for_area(kPi, 23.0), 23.0, 0.0};
  EXPECT_NEAR(delivered_area(p, -1.0), 0.0, 1e-15);
  EXPECT_NEAR(delivered_area(p, 0.0), 0.5 * kPi, 1e-14);
  EXPECT_NEAR(delivered_area(p, 1.0), kPi, 1e-14);
}

TEST(LaserFrequency, Reconstruction) {
  const SystemParams p;
  EXPECT_NEAR(laser_frequency(p, 0.0), 332940.35, 1e-9);
  EXPECT_NEAR(laser_frequency(p, 14.5), 333000.0 - 7.55 - 52.1 - 14.5, 1e-9);
  // Fringe period in fs.
  EXPECT_NEAR(1e6 / laser_frequency(p, 0.0), 3.0036, 1e-4);
  EXPECT_NEAR(1e6 / laser_frequency(p, 14.5), 3.0036, 2e-4);
}

TEST(SecondPulsePhase, ReducedModuloTwoPi) {
  const SystemParams p;
  PulseSequence seq;
  seq.second_pulse = true;
  seq.coarse_delay = 80.0;
  seq.fine_delay = 2.5;
  const double phase = second_pulse_phase(p, seq);
  EXPECT_GE(phase, 0.0);
  EXPECT_LT(phase, 2.0 * kPi);
  const long double cycles = 332940.35L * (80e-3L + 2.5e-6L);
  const long double frac = cycles - std::floor(cycles);
  EXPECT_NEAR(phase, static_cast<double>(2.0L * std::numbers::pi_v<long double> * frac), 1e-9);
  seq.second_pulse = false;
  EXPECT_EQ(second_pulse_phase(p, seq), 0.0);
}

TEST(RotatingHamiltonian, DiagonalFarFromPulses) {
  const SystemParams p;
  PulseSequence seq;
  seq.pulse.peak = 10.0;
  const ComplexMatrix4 h = rotating_hamiltonian(p, seq, 1.0);
  const double expect[4] = {-52.1, 52.1, 52.1, 67.2};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(h(k, k).real(), 2.0 * kPi * expect[k], 1e-9);
  EXPECT_LT((h - ComplexMatrix4(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RotatingHamiltonian, CoincidentPulsesDoubleTheDrive) {
  const SystemParams p;
  PulseSequence seq;
  seq.pulse.peak = 3.0;
  seq.second_pulse = true;
  EXPECT_EQ(second_pulse_phase(p, seq), 0.0);
  const ComplexMatrix4 h = rotating_hamiltonian(p, seq, 0.004);
  const double omega = envelope(seq.pulse, 0.004);
  EXPECT_NEAR(std::abs(h(0, 3) - 2.0 * omega), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(h(1, 2) - 2.0 * omega), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(h(3, 0) - 2.0 * omega), 0.0, 1e-12);
  EXPECT_EQ(h(0, 2), Complex(0.0, 0.0));
}

TEST(RotatingHamiltonian, HermitianEverywhere) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 10; ++k) {
    const RandomCase c = random_case(rng);
    for (double t = -0.08; t < 0.3; t += 0.005)
      EXPECT_LT(hermiticity_error(rotating_hamiltonian(c.params, c.sequence, t)), 1e-12);
  }
}

TEST(CollapseChannels, RatesAndOperators) {
  const SystemParams p;
  PulseSequence seq;
  seq.pulse.peak = 5.0;
  const auto ch = collapse_channels(p, seq);
  ASSERT_EQ(ch.size(), 11u);
  for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(ch[static_cast<std::size_t>(k)].weight(0.0), 0.5);
  for (int k = 4; k < 8; ++k) EXPECT_NEAR(ch[static_cast<std::size_t>(k)].weight(0.0), 0.5 * 50.0 / 420.0, 1e-15);
  EXPECT_NEAR(50.0 / 420.0, 0.119, 5e-4);
  EXPECT_EQ(ch[0].op, level_op(1, 3));
  EXPECT_EQ(ch[4].op, level_op(3, 1));
  EXPECT_EQ(ch[8].op, level_op(3, 3) + level_op(4, 4));
  EXPECT_NEAR(ch[8].weight(0.0), p.gamma_deph * p.gamma_deph, 1e-9);
  // Phonon channels follow sqrt(alpha) kappa Omega(t).
  const double amp = std::sqrt(p.alpha_phonon) * p.kappa * envelope(seq.pulse, 0.0);
  EXPECT_NEAR(ch[9].weight(0.0), amp * amp, 1e-9);
  EXPECT_NEAR(ch[10].weight(0.0), amp * amp, 1e-9);
}

TEST(CollapseChannels, ConventionsAreSelectable) {
  SystemParams p;
  p.dephasing_scale = DephasingScale::rate;
  p.dephasing_operator = DephasingOperator::per_level;
  p.gamma_spin = 0.25;
  const auto ch = collapse_channels(p, PulseSequence{});
  ASSERT_EQ(ch.size(), 13u);
  EXPECT_EQ(ch[8].op, level_op(3, 3));
  EXPECT_EQ(ch[9].op, level_op(4, 4));
  EXPECT_NEAR(ch[8].weight(0.0), p.gamma_deph, 1e-12);
  EXPECT_EQ(ch[10].op, level_op(2, 2));
  EXPECT_DOUBLE_EQ(ch[10].weight(0.0), 0.25);
}

TEST(CollapseChannels, ZeroRatesLeaveUnitaryEvolution) {
  const SystemParams p = SystemParams{}.closed();
  PulseSequence seq;
  seq.pulse.peak = peak_for_area(2.3 * kPi, seq.pulse.fwhm);
  for (const auto& c : collapse_channels(p, seq))
    for (double t : {-0.02, 0.0, 0.01}) EXPECT_EQ(c.effective(t).cwiseAbs().maxCoeff(), 0.0) << c.label;
  IntegratorOptions opt;
  opt.sample_interval = 0.0;
  opt.tol = 1e-10;
  ComplexMatrix4 m = ComplexMatrix4::Zero();
  m(1, 1) = 0.7;
  m(0, 0) = 0.3;
  m(0, 1) = m(1, 0) = 0.2;
  const DensityMatrix rho0(m);
  const DensityMatrix r =
      integrate(rho0, LindbladGenerator(trion_model(p, seq)), window_start(seq), readout_time(seq), opt).final_state();
  EXPECT_NEAR(r.purity(), rho0.purity(), 1e-9);
}

TEST(CollapseChannels, DecayBranchesEqually) {
  SystemParams p = SystemParams{}.closed();
  p.gamma_spont = 1.0;
  p.kappa = 0.0;
  const LindbladGenerator rhs(trion_model(p, PulseSequence{}));
  IntegratorOptions opt;
  opt.sample_interval = 0.1;
  const Trajectory tr = integrate(DensityMatrix::pure_level(3), rhs, 0.0, 2.0, opt);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double expect = 0.5 * (1.0 - std::exp(-tr.times[k]));
    EXPECT_NEAR(tr.states[k].population(1), expect, 1e-7);
    EXPECT_NEAR(tr.states[k].population(2), expect, 1e-7);
  }
}

TEST(InitialState, HalfMixedDefault) {
  EXPECT_TRUE(initial_state(SystemParams{}) == DensityMatrix::diagonal(0.5, 0.5, 0.0, 0.0));
}

TEST(InitialState, SteadyStateWithoutPumpingIsHalfMixed) {
  SystemParams p;
  p.gamma_pump = 0.0;
  const DensityMatrix r = initial_state(p, InitialStateMode::steady_state);
  EXPECT_LT((r.matrix() - DensityMatrix::diagonal(0.5, 0.5, 0, 0).matrix()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(InitialState, SteadyStateMatchesRateBalanceAndLongRun) {
  const SystemParams p;
  const DensityMatrix r = initial_state(p, InitialStateMode::steady_state);
  const double trion = p.gamma_pump / (p.gamma_pump + p.gamma_spont);
  EXPECT_NEAR(r.population(3) + r.population(4), trion, 1e-10);
  EXPECT_NEAR(r.population(3), r.population(4), 1e-12);
  EXPECT_NEAR(r.population(1), r.population(2), 1e-12);
  // Long undriven run with the oracle from the half-mixed start.
  const LindbladModel m = trion_model(p, PulseSequence{});
  const DensityMatrix long_run = expm_propagate(DensityMatrix::diagonal(0.5, 0.5, 0, 0), m, 0.0, 400.0, 4);
  EXPECT_LT((long_run.matrix() - r.matrix()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(InitialState, SteadyStateNeedsRelaxation) {
  SystemParams p;
  p.gamma_pump = 0.0;
  p.gamma_spont = 0.0;
  EXPECT_THROW(initial_state(p, InitialStateMode::steady_state), SteadyStateError);
  p.gamma_spont = 1e-7;  // relaxation time far beyond the 1e4 ns cap
  EXPECT_THROW(initial_state(p, InitialStateMode::steady_state), SteadyStateError);
}

TEST(Validation, ParameterInvariants) {
  SystemParams p;
  EXPECT_NO_THROW(p.validate());
  p.gamma_pump = -0.1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = SystemParams{};
  p.delta_e_tr = 200.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  PulseSequence s;
  s.pulse.fwhm = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = PulseSequence{};
  s.second_pulse = true;
  s.coarse_delay = 0.0;
  s.fine_delay = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(TwoLevelLimit, PulseAreaLaw) {
  for (double a : {0.5, 1.0, 2.0, 3.0}) {
    const TwoLevelResult r = two_level_limit(a * kPi);
    EXPECT_LT(r.error(), 1e-4) << a;
    EXPECT_NEAR(r.expected_after_pulse, std::pow(std::sin(0.5 * a * kPi), 2), 1e-12);
  }
}

TEST(FrameCrossCheck, ReducedLabFrameAgrees) {
  std::mt19937_64 rng(31);
  EXPECT_LT(frame_deviation(reduced_frame_case(rng)), 1e-4);
}

TEST(Zeeman, ZeroFieldIsDegenerate) {
  const ZeemanLines z = zeeman_lines(MagnetoModel{}, 0.0);
  const double e0 = MagnetoModel{}.e0;
  for (double e : {z.e31, z.e32, z.e41, z.e42}) EXPECT_DOUBLE_EQ(e, e0);
}

TEST(Zeeman, FiveTesla) {
  const ZeemanLines z = zeeman_lines(MagnetoModel{}, 5.0);
  EXPECT_NEAR(z.ground_splitting / units::planck_uev_per_ghz, 104.3, 0.05);
  EXPECT_NEAR(z.trion_splitting / units::planck_uev_per_ghz, 15.4, 0.05);
  EXPECT_NEAR(z.diamagnetic_shift, 178.25, 1e-9);
  EXPECT_NEAR(0.5 * (z.e31 + z.e42) - MagnetoModel{}.e0, 178.25, 1e-6);
}

TEST(Zeeman, InnerOuterPairing) {
  const MagnetoModel m;
  for (double b = 0.0; b <= 8.0; b += 0.5) {
    const ZeemanLines z = zeeman_lines(m, b);
    EXPECT_NEAR(std::abs(z.e31 - z.e42), std::abs(m.g_e - m.g_h) * units::bohr_magneton_uev_per_t * b, 1e-6);
    EXPECT_NEAR(std::abs(z.e41 - z.e32), (m.g_e + m.g_h) * units::bohr_magneton_uev_per_t * b, 1e-6);
  }
  EXPECT_THROW(zeeman_lines(m, -1.0), std::invalid_argument);
  MagnetoModel bad;
  bad.g_h = 2.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace trion
