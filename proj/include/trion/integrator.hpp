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

#include "trion/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace trion {

/// Raised when the adaptive integrator cannot continue: step-size underflow,
/// step budget exhausted, or a physical invariant breached.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t, double h)
      : std::runtime_error(what), time_(t), step_(h) {}
  double time() const { return time_; }
  double step() const { return step_; }

 private:
  double time_;
  double step_;
};

struct IntegratorOptions {
  double tol = 1e-9;               // relative and absolute error target
  double sample_interval = 1e-4;   // ns between stored samples; <= 0 keeps only the endpoints
  double min_step = 1e-9;          // ns
  double max_step = 0.0;           // ns; 0 means unbounded
  std::int64_t max_steps = 50'000'000;
  bool check_invariants = true;
  PhysicalTolerances tolerances{};
};

struct IntegratorStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t rhs_evals = 0;

  IntegratorStats& operator+=(const IntegratorStats& o) {
    accepted += o.accepted;
    rejected += o.rejected;
    rhs_evals += o.rhs_evals;
    return *this;
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  IntegratorStats stats;

  const DensityMatrix& final_state() const { return states.back(); }
  double start() const { return times.front(); }
  double end() const { return times.back(); }
};

namespace detail {

// Dormand-Prince 5(4) tableau with Hairer's dense-output coefficients.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

inline double error_norm(const ComplexMatrix4& err, const ComplexMatrix4& y0, const ComplexMatrix4& y1,
                         double tol) {
  double sum = 0.0;
  for (int i = 0; i < kLevels; ++i) {
    for (int j = 0; j < kLevels; ++j) {
      const double scale = tol + tol * std::max(std::abs(y0(i, j)), std::abs(y1(i, j)));
      const double e = std::abs(err(i, j)) / scale;
      sum += e * e;
    }
  }
  return std::sqrt(sum / (kLevels * kLevels));
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration of d rho / dt = rhs(t, rho) from
/// t0 to t1. Samples are stored on the uniform grid t0 + k * sample_interval
/// (through the continuous extension) plus the exact endpoint t1.
template <class Rhs>
Trajectory integrate(const DensityMatrix& rho0, const Rhs& rhs, double t0, double t1,
                     const IntegratorOptions& opt = {}) {
  if (!(t1 > t0)) throw std::invalid_argument("integrate: requires t1 > t0");
  if (!(opt.tol >= 1e-12 && opt.tol <= 1e-4)) throw std::invalid_argument("integrate: tol must lie in [1e-12, 1e-4]");

  using T = detail::Dopri5;
  Trajectory traj;
  traj.times.push_back(t0);
  traj.states.push_back(rho0);

  const double span = t1 - t0;
  const double max_step = opt.max_step > 0.0 ? opt.max_step : span;
  const bool sampling = opt.sample_interval > 0.0;
  std::int64_t next_sample = 1;
  auto sample_time = [&](std::int64_t k) { return t0 + static_cast<double>(k) * opt.sample_interval; };

  ComplexMatrix4 y = rho0.matrix();
  double t = t0;
  ComplexMatrix4 k1 = rhs(t, y);
  traj.stats.rhs_evals = 1;

  // Initial step from the scale of y and y' (Hairer, Norsett & Wanner II.4).
  double h;
  {
    const double d0 = detail::error_norm(y, y, y, opt.tol);
    const double d1 = detail::error_norm(k1, y, y, opt.tol);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    h = std::clamp(h, opt.min_step, max_step);
  }

  constexpr double safety = 0.9, min_factor = 0.2, max_factor = 10.0;
  double err_prev = 1e-4;
  bool last_rejected = false;

  while (t < t1) {
    if (traj.stats.accepted + traj.stats.rejected >= opt.max_steps) {
      throw IntegrationError("integrate: step budget exhausted", t, h);
    }
    bool final_step = false;
    if (t + 1.01 * h >= t1) {
      h = t1 - t;
      final_step = true;
    }
    if (h < opt.min_step && !final_step) {
      std::ostringstream os;
      os << "integrate: step size underflow (h = " << h << " ns at t = " << t << " ns)";
      throw IntegrationError(os.str(), t, h);
    }

    const ComplexMatrix4 k2 = rhs(t + T::c2 * h, y + h * (T::a21 * k1));
    const ComplexMatrix4 k3 = rhs(t + T::c3 * h, y + h * (T::a31 * k1 + T::a32 * k2));
    const ComplexMatrix4 k4 = rhs(t + T::c4 * h, y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
    const ComplexMatrix4 k5 =
        rhs(t + T::c5 * h, y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
    const ComplexMatrix4 k6 =
        rhs(t + h, y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5));
    const ComplexMatrix4 y_new =
        y + h * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 + T::a76 * k6);
    const double t_new = final_step ? t1 : t + h;
    const ComplexMatrix4 k7 = rhs(t_new, y_new);
    traj.stats.rhs_evals += 6;

    const ComplexMatrix4 err =
        h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    const double en = detail::error_norm(err, y, y_new, opt.tol);

    if (en <= 1.0) {
      // Continuous extension for samples inside (t, t_new).
      if (sampling) {
        const ComplexMatrix4 ydiff = y_new - y;
        const ComplexMatrix4 bspl = h * k1 - ydiff;
        const ComplexMatrix4 r4 = ydiff - h * k7 - bspl;
        const ComplexMatrix4 r5 =
            h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 + T::d6 * k6 + T::d7 * k7);
        while (sample_time(next_sample) < t_new && sample_time(next_sample) < t1 - 1e-9 * opt.sample_interval) {
          const double theta = (sample_time(next_sample) - t) / h;
          const double theta1 = 1.0 - theta;
          const ComplexMatrix4 ys = y + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)));
          traj.times.push_back(sample_time(next_sample));
          traj.states.emplace_back(ys);
          if (opt.check_invariants) {
            if (auto v = physical_violation(traj.states.back(), opt.tolerances); !v.empty()) {
              throw IntegrationError("integrate: invariant breach at sample: " + v, traj.times.back(), h);
            }
          }
          ++next_sample;
        }
      }

      ++traj.stats.accepted;
      t = t_new;
      y = y_new;
      k1 = k7;

      if (opt.check_invariants) {
        const double tr_err = std::abs(y.trace() - Complex(1.0, 0.0));
        const double herm = hermiticity_error(y);
        if (!(tr_err < opt.tolerances.trace) || !(herm < opt.tolerances.hermiticity)) {
          std::ostringstream os;
          os << "integrate: invariant breach at t = " << t << " ns (trace error " << tr_err
             << ", hermiticity error " << herm << ")";
          throw IntegrationError(os.str(), t, h);
        }
      }

      // PI step-size control.
      const double e = std::max(en, 1e-10);
      double factor = safety * std::pow(e, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
      factor = std::clamp(factor, min_factor, max_factor);
      if (last_rejected) factor = std::min(factor, 1.0);
      err_prev = e;
      last_rejected = false;
      h = std::min(h * factor, max_step);
    } else {
      ++traj.stats.rejected;
      const double factor = std::isfinite(en) ? std::max(min_factor, safety * std::pow(en, -0.2)) : min_factor;
      h *= factor;
      last_rejected = true;
      if (h < opt.min_step) {
        std::ostringstream os;
        os << "integrate: step size underflow (h = " << h << " ns at t = " << t << " ns)";
        throw IntegrationError(os.str(), t, h);
      }
    }
  }

  traj.times.push_back(t1);
  traj.states.emplace_back(y);
  if (opt.check_invariants) {
    if (auto v = physical_violation(traj.states.back(), opt.tolerances); !v.empty()) {
      throw IntegrationError("integrate: invariant breach at final time: " + v, t1, h);
    }
  }
  return traj;
}

}  // namespace trion
