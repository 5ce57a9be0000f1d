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

// Least-squares fitting: a damped Gauss-Newton (Levenberg-Marquardt) core
// and the three models used on simulated and measured data.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trion {

struct FitParameter {
  std::string name;
  double value = 0.0;
  std::string unit;
  double std_error = 0.0;
};

struct FitReport {
  std::vector<FitParameter> parameters;
  double residual_norm = 0.0;  // root-mean-square residual
  double gradient_norm = 0.0;
  bool converged = false;
  bool degenerate = false;
  int iterations = 0;
  Eigen::MatrixXd covariance;
  std::vector<double> cost_history;  // 0.5 * |r|^2 after each accepted step
  std::vector<double> residuals;

  double get(std::string_view name) const {
    for (const auto& p : parameters)
      if (p.name == name) return p.value;
    throw std::out_of_range("FitReport: no parameter named " + std::string(name));
  }
};

struct LevenbergMarquardtOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-10;  // converged when gradient_norm < gradient_tol * (1 + rms)
  double initial_damping = 1e-3;
  double max_damping = 1e16;
};

struct LevenbergMarquardtResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double gradient_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> cost_history;
};

/// Column-scaled gradient: max_k |J_k . r| / |J_k|. Invariant under
/// rescaling of individual parameters; zero columns are skipped.
inline double scaled_gradient_norm(const Eigen::MatrixXd& j, const Eigen::VectorXd& r) {
  double g = 0.0;
  for (Eigen::Index k = 0; k < j.cols(); ++k) {
    const double cn = j.col(k).norm();
    if (cn > 0.0) g = std::max(g, std::abs(j.col(k).dot(r)) / cn);
  }
  return g;
}

/// Minimizes 0.5 |r(x)|^2. `Model` provides
///   Eigen::VectorXd residuals(const Eigen::VectorXd&) const
///   Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const
/// Steps solve (J^T J + lambda (diag(J^T J) + eps)) dx = -J^T r; the damping
/// adapts with the gain ratio (Nielsen's update). A failed factorization or a
/// non-finite trial point only raises the damping.
template <class Model>
LevenbergMarquardtResult levenberg_marquardt(const Model& model, Eigen::VectorXd x,
                                             const LevenbergMarquardtOptions& opt = {}) {
  LevenbergMarquardtResult res;
  Eigen::VectorXd r = model.residuals(x);
  Eigen::MatrixXd j = model.jacobian(x);
  double cost = 0.5 * r.squaredNorm();
  res.cost_history.push_back(cost);

  Eigen::MatrixXd a = j.transpose() * j;
  Eigen::VectorXd g = j.transpose() * r;
  const double diag_max = a.diagonal().cwiseAbs().maxCoeff();
  double lambda = opt.initial_damping;
  double nu = 2.0;
  const double eps = 1e-12 * std::max(diag_max, 1e-300);

  auto is_converged = [&]() {
    const double rms = std::sqrt(r.squaredNorm() / std::max<Eigen::Index>(1, r.size()));
    res.gradient_norm = scaled_gradient_norm(j, r);
    return res.gradient_norm < opt.gradient_tol * (1.0 + rms);
  };

  int it = 0;
  bool converged = is_converged();
  while (!converged && it < opt.max_iterations) {
    ++it;
    Eigen::MatrixXd damped = a;
    for (Eigen::Index k = 0; k < a.rows(); ++k) damped(k, k) += lambda * (a(k, k) + eps);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
    Eigen::VectorXd dx;
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
      dx = ldlt.solve(-g);
      ok = dx.allFinite();
    }
    if (!ok) {
      lambda *= nu;
      nu *= 2.0;
      if (lambda > opt.max_damping) break;
      continue;
    }
    const Eigen::VectorXd x_new = x + dx;
    const Eigen::VectorXd r_new = model.residuals(x_new);
    const double cost_new = r_new.allFinite() ? 0.5 * r_new.squaredNorm() : std::numeric_limits<double>::infinity();
    Eigen::VectorXd scaled = dx;
    for (Eigen::Index k = 0; k < a.rows(); ++k) scaled(k) *= lambda * (a(k, k) + eps);
    const double predicted = 0.5 * dx.dot(scaled - g);
    if (cost_new < cost) {
      const double rho = predicted > 0.0 ? (cost - cost_new) / predicted : 1.0;
      x = x_new;
      r = r_new;
      j = model.jacobian(x);
      a = j.transpose() * j;
      g = j.transpose() * r;
      cost = cost_new;
      res.cost_history.push_back(cost);
      lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      converged = is_converged();
      if (!converged && dx.norm() <= 1e-15 * (x.norm() + 1e-15)) break;
    } else {
      lambda *= nu;
      nu *= 2.0;
      if (lambda > opt.max_damping) break;
    }
  }
  if (!converged) converged = is_converged();
  res.x = std::move(x);
  res.residuals = std::move(r);
  res.jacobian = std::move(j);
  res.converged = converged;
  res.iterations = it;
  return res;
}

namespace detail {

// sigma^2 (J^T J)^+ with sigma^2 = SSR / (m - n).
inline Eigen::MatrixXd covariance_of(const Eigen::MatrixXd& j, const Eigen::VectorXd& r) {
  const Eigen::Index m = j.rows(), n = j.cols();
  const double dof = m > n ? static_cast<double>(m - n) : 1.0;
  const double s2 = r.squaredNorm() / dof;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(j.transpose() * j);
  return s2 * cod.pseudoInverse();
}

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

inline double wrap_phase(double phi) {
  constexpr double pi = std::numbers::pi;
  phi = std::remainder(phi, 2.0 * pi);  // [-pi, pi]
  if (phi <= -pi) phi += 2.0 * pi;
  return phi;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sinusoid: y = offset + a cos(2 pi f (x - xc)) + b sin(2 pi f (x - xc))

/// Residual model for the sinusoid fit. Parameters (offset, a, b, f); x is
/// measured from the center `xc` for conditioning.
struct SinusoidModel {
  std::span<const double> x;
  std::span<const double> y;
  double xc = 0.0;

  Eigen::VectorXd residuals(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double th = 2.0 * std::numbers::pi * p(3) * (x[i] - xc);
      r(static_cast<Eigen::Index>(i)) = p(0) + p(1) * std::cos(th) + p(2) * std::sin(th) - y[i];
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
    Eigen::MatrixXd jm(static_cast<Eigen::Index>(x.size()), 4);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = x[i] - xc;
      const double th = 2.0 * std::numbers::pi * p(3) * u;
      const double c = std::cos(th), s = std::sin(th);
      const auto row = static_cast<Eigen::Index>(i);
      jm(row, 0) = 1.0;
      jm(row, 1) = c;
      jm(row, 2) = s;
      jm(row, 3) = 2.0 * std::numbers::pi * u * (-p(1) * s + p(2) * c);
    }
    return jm;
  }
};

/// Fits y = offset + amplitude cos(2 pi frequency x + phase). Frequency is in
/// cycles per unit of x. A linear least-squares scan over frequencies within
/// 30% of freq_hint seeds a nonlinear polish of all four parameters.
inline FitReport fit_sinusoid(std::span<const double> x, std::span<const double> y, double freq_hint,
                              const LevenbergMarquardtOptions& opt = {}) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_sinusoid: x and y differ in length");
  if (x.size() < 8) throw std::invalid_argument("fit_sinusoid: needs at least 8 points");
  if (!(freq_hint > 0.0)) throw std::invalid_argument("fit_sinusoid: freq_hint must be > 0");
  detail::require_finite(x, "fit_sinusoid");
  detail::require_finite(y, "fit_sinusoid");
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  const double span = *xmax_it - *xmin_it;
  if (span * freq_hint < 1.5) throw std::invalid_argument("fit_sinusoid: data must span >= 1.5 periods of freq_hint");

  const double xc = 0.5 * (*xmin_it + *xmax_it);
  const auto n = static_cast<Eigen::Index>(x.size());

  // Linear scan.
  Eigen::Vector3d best_coef = Eigen::Vector3d::Zero();
  double best_f = freq_hint;
  double best_sse = std::numeric_limits<double>::infinity();
  constexpr int kScan = 601;
  for (int s = 0; s < kScan; ++s) {
    const double f = freq_hint * (0.7 + 0.6 * s / (kScan - 1));
    Eigen::MatrixXd basis(n, 3);
    Eigen::VectorXd yy(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double th = 2.0 * std::numbers::pi * f * (x[static_cast<std::size_t>(i)] - xc);
      basis(i, 0) = 1.0;
      basis(i, 1) = std::cos(th);
      basis(i, 2) = std::sin(th);
      yy(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector3d coef = basis.colPivHouseholderQr().solve(yy);
    const double sse = (basis * coef - yy).squaredNorm();
    if (sse < best_sse) {
      best_sse = sse;
      best_coef = coef;
      best_f = f;
    }
  }

  SinusoidModel model{x, y, xc};
  Eigen::VectorXd p0(4);
  p0 << best_coef(0), best_coef(1), best_coef(2), best_f;
  const auto lm = levenberg_marquardt(model, p0, opt);

  const double offset = lm.x(0), a = lm.x(1), b = lm.x(2), f = lm.x(3);
  const double amp = std::hypot(a, b);
  const double phase_c = std::atan2(-b, a);
  const double phase = detail::wrap_phase(phase_c - 2.0 * std::numbers::pi * f * xc);

  // Covariance of (offset, amplitude, frequency, phase) by the delta method.
  const Eigen::MatrixXd cov_raw = detail::covariance_of(lm.jacobian, lm.residuals);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(4, 4);
  t(0, 0) = 1.0;
  if (amp > 0.0) {
    t(1, 1) = a / amp;
    t(1, 2) = b / amp;
    t(3, 1) = b / (amp * amp);
    t(3, 2) = -a / (amp * amp);
  }
  t(2, 3) = 1.0;
  t(3, 3) = -2.0 * std::numbers::pi * xc;
  const Eigen::MatrixXd cov = t * cov_raw * t.transpose();

  FitReport rep;
  rep.parameters = {{"amplitude", amp, "signal", std::sqrt(std::max(0.0, cov(1, 1)))},
                    {"frequency", f, "cycles per x unit", std::sqrt(std::max(0.0, cov(2, 2)))},
                    {"phase", phase, "rad", std::sqrt(std::max(0.0, cov(3, 3)))},
                    {"offset", offset, "signal", std::sqrt(std::max(0.0, cov(0, 0)))}};
  rep.residual_norm = std::sqrt(lm.residuals.squaredNorm() / static_cast<double>(n));
  rep.gradient_norm = lm.gradient_norm;
  rep.converged = lm.converged;
  rep.iterations = lm.iterations;
  rep.covariance = cov;
  rep.cost_history = lm.cost_history;
  rep.residuals.assign(lm.residuals.data(), lm.residuals.data() + n);
  return rep;
}

// ---------------------------------------------------------------------------
// Exponential: y = a_ref exp(-(x - x0) / tau) [+ baseline], tau = exp(u)

struct ExponentialModel {
  std::span<const double> x;
  std::span<const double> y;
  double x0 = 0.0;
  bool with_baseline = true;

  Eigen::Index n_params() const { return with_baseline ? 3 : 2; }

  Eigen::VectorXd residuals(const Eigen::VectorXd& p) const {
    const double tau = std::exp(p(1));
    const double base = with_baseline ? p(2) : 0.0;
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
      r(static_cast<Eigen::Index>(i)) = p(0) * std::exp(-(x[i] - x0) / tau) + base - y[i];
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
    const double tau = std::exp(p(1));
    Eigen::MatrixXd jm(static_cast<Eigen::Index>(x.size()), n_params());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double u = (x[i] - x0) / tau;
      const double e = std::exp(-u);
      jm(row, 0) = e;
      jm(row, 1) = p(0) * e * u;
      if (with_baseline) jm(row, 2) = 1.0;
    }
    return jm;
  }
};

struct ExponentialFitOptions {
  bool with_baseline = true;
  LevenbergMarquardtOptions lm{};
};

/// Fits y = a0 exp(-x / tau) + baseline (baseline optional). Reports a0 at
/// x = 0, tau in units of x, and baseline.
inline FitReport fit_exponential(std::span<const double> x, std::span<const double> y,
                                 const ExponentialFitOptions& opt = {}) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_exponential: x and y differ in length");
  if (x.size() < 5) throw std::invalid_argument("fit_exponential: needs at least 5 points");
  detail::require_finite(x, "fit_exponential");
  detail::require_finite(y, "fit_exponential");
  for (double v : y)
    if (v < 0.0) throw std::invalid_argument("fit_exponential: y must be non-negative");

  const auto n = static_cast<Eigen::Index>(x.size());
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  const double ymin = *ymin_it, ymax = *ymax_it;
  const double x0 = *std::min_element(x.begin(), x.end());
  const double xspan = *std::max_element(x.begin(), x.end()) - x0;

  FitReport rep;
  if (ymax - ymin <= 1e-12 * std::max(1.0, std::abs(ymax)) || xspan <= 0.0) {
    rep.degenerate = true;
    rep.converged = false;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    rep.parameters = {{"a0", 0.0, "signal", 0.0},
                      {"tau", std::numeric_limits<double>::quiet_NaN(), "x unit", 0.0},
                      {"baseline", mean, "signal", 0.0}};
    rep.residuals.assign(n, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) rep.residuals[i] = mean - y[i];
    return rep;
  }

  // Log-linear start on (y - floor) where floor is min(y) with a baseline
  // and zero without.
  const double floor = opt.with_baseline ? ymin : 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = y[i] - floor;
    if (z <= 1e-3 * (ymax - floor)) continue;
    const double lx = x[i] - x0, ly = std::log(z);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  double tau0 = xspan;
  double a_ref0 = ymax - floor;
  if (m >= 2 && m * sxx - sx * sx > 0.0) {
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icept = (sy - slope * sx) / m;
    if (slope < 0.0) tau0 = -1.0 / slope;
    a_ref0 = std::exp(icept);
  }

  ExponentialModel model{x, y, x0, opt.with_baseline};
  Eigen::VectorXd p0(model.n_params());
  p0(0) = a_ref0;
  p0(1) = std::log(tau0);
  if (opt.with_baseline) p0(2) = floor;
  const auto lm = levenberg_marquardt(model, p0, opt.lm);

  const double tau = std::exp(lm.x(1));
  const double a0 = lm.x(0) * std::exp(x0 / tau);
  const Eigen::MatrixXd cov_raw = detail::covariance_of(lm.jacobian, lm.residuals);
  // d a0 / d a_ref = exp(x0/tau); d a0 / d u = -a0 x0 / tau; d tau / d u = tau
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(model.n_params(), model.n_params());
  t(0, 0) = std::exp(x0 / tau);
  t(0, 1) = -a0 * x0 / tau;
  t(1, 1) = tau;
  if (opt.with_baseline) t(2, 2) = 1.0;
  const Eigen::MatrixXd cov = t * cov_raw * t.transpose();

  rep.parameters = {{"a0", a0, "signal", std::sqrt(std::max(0.0, cov(0, 0)))},
                    {"tau", tau, "x unit", std::sqrt(std::max(0.0, cov(1, 1)))}};
  rep.parameters.push_back(
      {"baseline", opt.with_baseline ? lm.x(2) : 0.0, "signal", opt.with_baseline ? std::sqrt(std::max(0.0, cov(2, 2))) : 0.0});
  rep.residual_norm = std::sqrt(lm.residuals.squaredNorm() / static_cast<double>(n));
  rep.gradient_norm = lm.gradient_norm;
  rep.converged = lm.converged;
  rep.iterations = lm.iterations;
  rep.covariance = cov;
  rep.cost_history = lm.cost_history;
  rep.residuals.assign(lm.residuals.data(), lm.residuals.data() + n);
  return rep;
}

// ---------------------------------------------------------------------------
// Power-axis calibration

/// Natural cubic spline; constant extrapolation beyond the end knots.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw std::invalid_argument("CubicSpline: needs >= 3 matching points");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("CubicSpline: x must be strictly increasing");
    // Tridiagonal solve for second derivatives.
    m_.assign(n, 0.0);
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      const double diag = 2.0 * (h0 + h1);
      const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      const double denom = diag - h0 * c[i - 1];
      c[i] = h1 / denom;
      d[i] = (rhs - h0 * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

  double value(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const std::size_t i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  double derivative(double t) const {
    if (t <= x_.front() || t >= x_.back()) return 0.0;
    const std::size_t i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h + ((1.0 - 3.0 * a * a) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
  }

 private:
  std::size_t segment(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    return static_cast<std::size_t>(std::distance(x_.begin(), it)) - 1;
  }

  std::vector<double> x_, y_, m_;
};

struct PowerPoint {
  double power = 0.0;
  double counts = 0.0;
};

struct CurvePoint {
  double area = 0.0;
  double signal = 0.0;
};

/// counts(p) = scale * model(k sqrt(p)) + offset; parameters (k, scale, offset).
struct PowerAxisModel {
  std::span<const PowerPoint> measured;
  const CubicSpline* curve = nullptr;

  Eigen::VectorXd residuals(const Eigen::VectorXd& p) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(measured.size()));
    for (std::size_t i = 0; i < measured.size(); ++i) {
      const double area = p(0) * std::sqrt(measured[i].power);
      r(static_cast<Eigen::Index>(i)) = p(1) * curve->value(area) + p(2) - measured[i].counts;
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
    Eigen::MatrixXd jm(static_cast<Eigen::Index>(measured.size()), 3);
    for (std::size_t i = 0; i < measured.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double sp = std::sqrt(measured[i].power);
      const double area = p(0) * sp;
      jm(row, 0) = p(1) * curve->derivative(area) * sp;
      jm(row, 1) = curve->value(area);
      jm(row, 2) = 1.0;
    }
    return jm;
  }
};

/// Maps measured (power, counts) onto a model (area, signal) curve assuming
/// area proportional to sqrt(power). A scan over the proportionality constant
/// with linear scale/offset solves seeds the damped least-squares polish.
inline FitReport calibrate_power_axis(std::span<const PowerPoint> measured, std::span<const CurvePoint> model_curve,
                                      const LevenbergMarquardtOptions& opt = {}) {
  if (measured.size() < 6) throw std::invalid_argument("calibrate_power_axis: needs at least 6 measured points");
  if (model_curve.size() < 4) throw std::invalid_argument("calibrate_power_axis: model curve needs at least 4 points");
  for (std::size_t i = 0; i < measured.size(); ++i) {
    if (!(measured[i].power >= 0.0) || !std::isfinite(measured[i].counts))
      throw std::invalid_argument("calibrate_power_axis: measured power must be >= 0 and counts finite");
    if (i > 0 && !(measured[i].power > measured[i - 1].power))
      throw std::invalid_argument("calibrate_power_axis: measured power must be increasing");
  }
  std::vector<double> ax, ay;
  for (const auto& c : model_curve) {
    ax.push_back(c.area);
    ay.push_back(c.signal);
  }
  const CubicSpline curve(std::move(ax), std::move(ay));
  const double pmax = measured.back().power;
  if (!(pmax > 0.0)) throw std::invalid_argument("calibrate_power_axis: measured power range is empty");

  PowerAxisModel model{measured, &curve};
  const auto n = static_cast<Eigen::Index>(measured.size());
  const double k_max = curve.back() / std::sqrt(pmax);
  Eigen::VectorXd best(3);
  double best_sse = std::numeric_limits<double>::infinity();
  constexpr int kScan = 800;
  for (int s = 1; s <= kScan; ++s) {
    const double k = k_max * s / kScan;
    Eigen::MatrixXd basis(n, 2);
    Eigen::VectorXd yy(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      basis(i, 0) = curve.value(k * std::sqrt(measured[static_cast<std::size_t>(i)].power));
      basis(i, 1) = 1.0;
      yy(i) = measured[static_cast<std::size_t>(i)].counts;
    }
    const Eigen::Vector2d coef = basis.colPivHouseholderQr().solve(yy);
    const double sse = (basis * coef - yy).squaredNorm();
    if (sse < best_sse) {
      best_sse = sse;
      best << k, coef(0), coef(1);
    }
  }

  const auto lm = levenberg_marquardt(model, best, opt);
  const Eigen::MatrixXd cov = detail::covariance_of(lm.jacobian, lm.residuals);
  FitReport rep;
  rep.parameters = {{"area_per_sqrt_power", lm.x(0), "area unit per sqrt(power unit)", std::sqrt(std::max(0.0, cov(0, 0)))},
                    {"counts_scale", lm.x(1), "counts", std::sqrt(std::max(0.0, cov(1, 1)))},
                    {"counts_offset", lm.x(2), "counts", std::sqrt(std::max(0.0, cov(2, 2)))}};
  rep.residual_norm = std::sqrt(lm.residuals.squaredNorm() / static_cast<double>(n));
  rep.gradient_norm = lm.gradient_norm;
  rep.converged = lm.converged;
  rep.iterations = lm.iterations;
  rep.covariance = cov;
  rep.cost_history = lm.cost_history;
  rep.residuals.assign(lm.residuals.data(), lm.residuals.data() + n);
  return rep;
}

}  // namespace trion
