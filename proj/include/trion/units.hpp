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

#include <numbers>

// Internal unit system: hbar = 1, time in ns, angular frequency in rad/ns.
// External files and user-facing structs carry ordinary frequency in GHz and
// times in ps / fs; conversion happens only through the helpers below.
namespace trion::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Ordinary frequency (GHz) to angular frequency (rad/ns).
constexpr double ghz_to_rad_per_ns(double f_ghz) { return two_pi * f_ghz; }
constexpr double rad_per_ns_to_ghz(double w) { return w / two_pi; }

constexpr double ps_to_ns(double t_ps) { return t_ps * 1e-3; }
constexpr double fs_to_ns(double t_fs) { return t_fs * 1e-6; }
constexpr double ns_to_ps(double t_ns) { return t_ns * 1e3; }

/// Bohr magneton, ueV / T.
inline constexpr double bohr_magneton_uev_per_t = 57.88;
/// Planck constant expressed as ueV per GHz.
inline constexpr double planck_uev_per_ghz = 4.135667696;

constexpr double uev_to_ghz(double e_uev) { return e_uev / planck_uev_per_ghz; }

}  // namespace trion::units
