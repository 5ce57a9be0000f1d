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

#include "trion/experiments.hpp"
#include "trion/fit.hpp"
#include "trion/morphology.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace trion {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class Model>
double jacobian_error(const Model& m, const Eigen::VectorXd& p) {
  const Eigen::MatrixXd analytic = m.jacobian(p);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(p(k)));
    Eigen::VectorXd a = p, b = p;
    a(k) += h;
    b(k) -= h;
    const Eigen::VectorXd fd = (m.residuals(a) - m.residuals(b)) / (2.0 * h);
    const double scale = std::max(1e-8, fd.cwiseAbs().maxCoeff());
    worst = std::max(worst, (fd - analytic.col(k)).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

std::vector<double> sinusoid(std::span<const double> x, double amp, double freq, double phase, double offset) {
  std::vector<double> y;
  for (double v : x) y.push_back(offset + amp * std::cos(kTwoPi * freq * v + phase));
  return y;
}

bool nonincreasing(const std::vector<double>& c) {
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] > c[i - 1] * (1.0 + 1e-14)) return false;
  return true;
}

TEST(FitSinusoid, RecoversExactParameters) {
  const auto x = linspace(0.0, 11.0, 111);
  const auto y = sinusoid(x, 0.3, 1.0 / 3.0, 0.7, 0.5);
  const FitReport r = fit_sinusoid(x, y, 1.0 / 3.0036);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.get("amplitude"), 0.3, 1e-9);
  EXPECT_NEAR(r.get("frequency"), 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.get("phase"), 0.7, 1e-9);
  EXPECT_NEAR(r.get("offset"), 0.5, 1e-9);
  EXPECT_LT(r.residual_norm, 1e-10);
  EXPECT_TRUE(nonincreasing(r.cost_history));
}

TEST(FitSinusoid, ConstantDataHasNoAmplitude) {
  const auto x = linspace(0.0, 11.0, 111);
  const std::vector<double> y(x.size(), 0.25);
  const FitReport r = fit_sinusoid(x, y, 1.0 / 3.0);
  EXPECT_LT(std::abs(r.get("amplitude")), 1e-12);
  EXPECT_NEAR(r.get("offset"), 0.25, 1e-12);
}

TEST(FitSinusoid, ShiftingXShiftsPhase) {
  const auto x = linspace(0.0, 11.0, 111);
  const double f = 1.0 / 3.0036, shift = 0.8;
  const auto y = sinusoid(x, 0.2, f, 0.3, 0.4);
  std::vector<double> xs;
  for (double v : x) xs.push_back(v + shift);
  const FitReport a = fit_sinusoid(x, y, f);
  const FitReport b = fit_sinusoid(xs, y, f);
  EXPECT_NEAR(detail::wrap_phase(b.get("phase") - (a.get("phase") - kTwoPi * f * shift)), 0.0, 1e-8);
}

TEST(FitSinusoid, NoisyDataStaysClose) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto x = linspace(0.0, 11.0, 111);
  auto y = sinusoid(x, 0.3, 1.0 / 3.0, -1.2, 0.5);
  for (double& v : y) v += noise(rng);
  const FitReport r = fit_sinusoid(x, y, 0.3);
  EXPECT_NEAR(r.get("amplitude"), 0.3, 0.01);
  EXPECT_NEAR(r.get("frequency"), 1.0 / 3.0, 2e-3);
  EXPECT_GT(r.parameters[0].std_error, 0.0);
}

TEST(FitSinusoid, RejectsBadInput) {
  const auto x = linspace(0.0, 1.0, 5);
  EXPECT_THROW(fit_sinusoid(x, x, 1.0), std::invalid_argument);
  const auto x2 = linspace(0.0, 11.0, 20);
  EXPECT_THROW(fit_sinusoid(x2, x2, 0.0), std::invalid_argument);
  std::vector<double> y(x2.size(), 0.0);
  y[3] = std::nan("");
  EXPECT_THROW(fit_sinusoid(x2, y, 0.3), std::invalid_argument);
}

TEST(FitSinusoid, JacobianMatchesFiniteDifferences) {
  const auto x = linspace(0.0, 11.0, 40);
  const auto y = sinusoid(x, 0.3, 0.33, 0.1, 0.5);
  const SinusoidModel m{x, y, 5.5};
  Eigen::VectorXd p(4);
  p << 0.4, 0.1, -0.2, 0.31;
  EXPECT_LT(jacobian_error(m, p), 1e-5);
}

TEST(FitExponential, RecoversDecayTimeOnCoarseGrid) {
  const auto x = linspace(80.0, 180.0, 31);
  std::vector<double> y;
  for (double v : x) y.push_back(0.4 * std::exp(-v / 43.0));
  const FitReport r = fit_exponential(x, y, {.with_baseline = false});
  EXPECT_LT(std::abs(r.get("tau") / 43.0 - 1.0), 5e-3);
  EXPECT_NEAR(r.get("a0"), 0.4, 1e-6);
  const FitReport b = fit_exponential(x, y);
  EXPECT_LT(std::abs(b.get("tau") / 43.0 - 1.0), 5e-3);
  EXPECT_NEAR(b.get("baseline"), 0.0, 1e-8);
  EXPECT_TRUE(nonincreasing(b.cost_history));
}

TEST(FitExponential, BaselineIsSeparated) {
  const auto x = linspace(80.0, 180.0, 31);
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * std::exp(-v / 30.0) + 0.05);
  const FitReport r = fit_exponential(x, y);
  EXPECT_NEAR(r.get("tau"), 30.0, 1e-6);
  EXPECT_NEAR(r.get("baseline"), 0.05, 1e-8);
}

TEST(FitExponential, FlatDataIsDegenerate) {
  const auto x = linspace(80.0, 180.0, 31);
  const std::vector<double> y(x.size(), 0.2);
  const FitReport r = fit_exponential(x, y);
  EXPECT_TRUE(r.degenerate);
}

TEST(FitExponential, RejectsNegativeData) {
  const auto x = linspace(0.0, 1.0, 6);
  std::vector<double> y{1, 0.5, 0.2, -0.1, 0.05, 0.01};
  EXPECT_THROW(fit_exponential(x, y), std::invalid_argument);
}

TEST(FitExponential, JacobianMatchesFiniteDifferences) {
  const auto x = linspace(80.0, 180.0, 31);
  std::vector<double> y(x.size(), 0.1);
  for (bool base : {true, false}) {
    const ExponentialModel m{x, y, 80.0, base};
    Eigen::VectorXd p(m.n_params());
    p(0) = 0.3;
    p(1) = std::log(40.0);
    if (base) p(2) = 0.01;
    EXPECT_LT(jacobian_error(m, p), 1e-5);
  }
}

std::vector<CurvePoint> rabi_like_curve() {
  std::vector<CurvePoint> c;
  for (double a : linspace(0.0, 4.25 * std::numbers::pi, 200))
    c.push_back({a, 0.5 * std::pow(std::sin(0.5 * a), 2) * std::exp(-0.05 * a)});
  return c;
}

std::vector<PowerPoint> measured_from(const std::vector<CurvePoint>& c, double k, double scale, double offset,
                                      double noise_rel, std::uint64_t seed) {
  std::vector<double> ax, ay;
  for (const auto& p : c) {
    ax.push_back(p.area);
    ay.push_back(p.signal);
  }
  const CubicSpline s(ax, ay);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<PowerPoint> m;
  for (double pw : linspace(0.5, 150.0, 40)) {
    const double clean = scale * s.value(k * std::sqrt(pw)) + offset;
    m.push_back({pw, clean * (1.0 + noise_rel * n(rng))});
  }
  return m;
}

TEST(PowerAxis, RecoversSyntheticCalibration) {
  const auto curve = rabi_like_curve();
  const auto m = measured_from(curve, 1.0, 1000.0, 50.0, 0.0, 1);
  const FitReport r = calibrate_power_axis(m, curve);
  EXPECT_NEAR(r.get("area_per_sqrt_power"), 1.0, 1e-6);
  EXPECT_NEAR(r.get("counts_scale"), 1000.0, 1e-3);
  EXPECT_NEAR(r.get("counts_offset"), 50.0, 1e-3);
  EXPECT_TRUE(nonincreasing(r.cost_history));
}

TEST(PowerAxis, ToleratesNoise) {
  const auto curve = rabi_like_curve();
  const auto m = measured_from(curve, 1.0, 1000.0, 50.0, 0.05, 2);
  const FitReport r = calibrate_power_axis(m, curve);
  EXPECT_NEAR(r.get("area_per_sqrt_power"), 1.0, 0.05);
}

TEST(PowerAxis, RejectsEmptyOrUnorderedInput) {
  const auto curve = rabi_like_curve();
  EXPECT_THROW(calibrate_power_axis(std::vector<PowerPoint>{}, curve), std::invalid_argument);
  auto m = measured_from(curve, 1.0, 1000.0, 50.0, 0.0, 1);
  std::swap(m[2], m[3]);
  EXPECT_THROW(calibrate_power_axis(m, curve), std::invalid_argument);
}

TEST(PowerAxis, JacobianMatchesFiniteDifferences) {
  const auto curve = rabi_like_curve();
  std::vector<double> ax, ay;
  for (const auto& p : curve) {
    ax.push_back(p.area);
    ay.push_back(p.signal);
  }
  const CubicSpline s(ax, ay);
  const auto m = measured_from(curve, 1.0, 1000.0, 50.0, 0.0, 1);
  const PowerAxisModel model{m, &s};
  Eigen::VectorXd p(3);
  p << 0.93, 900.0, 40.0;
  EXPECT_LT(jacobian_error(model, p), 1e-5);
}

TEST(Spline, InterpolatesKnotsAndCubics) {
  std::vector<double> x = linspace(0.0, 2.0, 21), y;
  for (double v : x) y.push_back(std::sin(v));
  const CubicSpline s(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(s.value(x[i]), y[i], 1e-14);
  EXPECT_NEAR(s.value(1.05), std::sin(1.05), 1e-5);
  EXPECT_NEAR(s.derivative(1.05), std::cos(1.05), 1e-3);
}

TEST(LevenbergMarquardt, ScaledGradientIgnoresColumnUnits) {
  Eigen::MatrixXd j(3, 2);
  j << 1, 1000, 0, 2000, 1, 0;
  Eigen::VectorXd r(3);
  r << 0.1, -0.2, 0.3;
  Eigen::MatrixXd j2 = j;
  j2.col(1) /= 1000.0;
  EXPECT_NEAR(scaled_gradient_norm(j, r), scaled_gradient_norm(j2, r), 1e-14);
}

TEST(Morphology, ExtremaAreRefined) {
  const auto x = linspace(0.0, 4.0, 41);
  std::vector<double> y;
  for (double v : x) y.push_back(-(v - 1.23) * (v - 1.23));
  const auto mx = local_maxima(x, y);
  ASSERT_EQ(mx.size(), 1u);
  EXPECT_NEAR(mx[0].x, 1.23, 1e-12);
  EXPECT_NEAR(mx[0].value, 0.0, 1e-12);
  EXPECT_TRUE(local_minima(x, y).empty());
}

TEST(Morphology, NormalizeMinmax) {
  std::vector<double> v{2, 4, 3};
  const auto [lo, hi] = normalize_minmax(v);
  EXPECT_EQ(lo, 2.0);
  EXPECT_EQ(hi, 4.0);
  EXPECT_EQ(v, (std::vector<double>{0, 1, 0.5}));
  std::vector<double> flat{1, 1};
  normalize_minmax(flat);
  EXPECT_EQ(flat, (std::vector<double>{0, 0}));
}

TEST(Morphology, CountsSeparatedAndMergedLobes) {
  const std::size_t rows = 20, cols = 30;
  auto map = [&](double separation) {
    std::vector<double> g;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const double y = static_cast<double>(r) - 10.0;
        const double x1 = static_cast<double>(c) - 15.0 + separation, x2 = static_cast<double>(c) - 15.0 - separation;
        g.push_back(std::exp(-(x1 * x1 + y * y) / 8.0) + std::exp(-(x2 * x2 + y * y) / 8.0));
      }
    return g;
  };
  EXPECT_EQ(count_lobes(map(6.0), rows, cols), 2);
  EXPECT_EQ(count_lobes(map(0.5), rows, cols), 1);
  EXPECT_THROW(count_lobes(map(1.0), rows, cols + 1), std::invalid_argument);
}

TEST(Morphology, RidgeProfileAndProminence) {
  const std::vector<double> grid{1, 5, 2, 0, 0, 3, 7, 1, 4};
  EXPECT_EQ(ridge_profile(grid, 3, 3), (std::vector<double>{5, 3, 7}));
  EXPECT_THROW(ridge_profile(grid, 2, 3), std::invalid_argument);

  const auto x = linspace(0.0, 10.0, 11);
  const std::vector<double> y{0, 1, 10, 9.9, 10.05, 3, 0, 6, 0, 0.05, 0};
  EXPECT_EQ(local_maxima(x, y).size(), 4u);
  EXPECT_NEAR(prominence(y, 2), 0.1, 1e-12);
  EXPECT_NEAR(prominence(y, 4), 10.05, 1e-12);
  EXPECT_NEAR(prominence(y, 7), 6.0, 1e-12);
  const auto big = prominent_maxima(x, y, 0.02);
  ASSERT_EQ(big.size(), 2u);
  EXPECT_EQ(big[0].index, 4u);
  EXPECT_EQ(big[1].index, 7u);
}

}  // namespace
}  // namespace trion
