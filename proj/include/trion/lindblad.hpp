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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace trion {

using Complex = std::complex<double>;
using ComplexMatrix4 = Eigen::Matrix<Complex, 4, 4>;

inline constexpr int kLevels = 4;

/// Matrix unit |i><j| for 1-indexed levels i, j in [1, 4].
inline ComplexMatrix4 level_op(int i, int j) {
  if (i < 1 || i > kLevels || j < 1 || j > kLevels) {
    throw std::out_of_range("level_op: level index outside [1, 4]");
  }
  ComplexMatrix4 m = ComplexMatrix4::Zero();
  m(i - 1, j - 1) = 1.0;
  return m;
}

/// Largest entry of |A - A^dagger|.
inline double hermiticity_error(const ComplexMatrix4& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

class NonHermitianHamiltonian : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// 4x4 density matrix. Construction does not validate; call
/// `check_physical` where the invariants must hold.
class DensityMatrix {
 public:
  DensityMatrix() : m_(ComplexMatrix4::Zero()) {}
  explicit DensityMatrix(const ComplexMatrix4& m) : m_(m) {}

  /// Diagonal state from four populations.
  static DensityMatrix diagonal(double p1, double p2, double p3, double p4) {
    ComplexMatrix4 m = ComplexMatrix4::Zero();
    m(0, 0) = p1;
    m(1, 1) = p2;
    m(2, 2) = p3;
    m(3, 3) = p4;
    return DensityMatrix(m);
  }

  /// Pure state |k><k|, 1-indexed.
  static DensityMatrix pure_level(int k) { return DensityMatrix(level_op(k, k)); }

  const ComplexMatrix4& matrix() const { return m_; }

  /// Population of level k (1-indexed).
  double population(int k) const { return m_(k - 1, k - 1).real(); }
  Complex element(int i, int j) const { return m_(i - 1, j - 1); }

  Complex trace() const { return m_.trace(); }
  double hermiticity_error() const { return trion::hermiticity_error(m_); }

  /// Smallest eigenvalue of the Hermitian part.
  double min_eigenvalue() const {
    const ComplexMatrix4 h = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix4> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  double purity() const { return (m_ * m_).trace().real(); }

  friend bool operator==(const DensityMatrix& a, const DensityMatrix& b) { return a.m_ == b.m_; }

 private:
  ComplexMatrix4 m_;
};

struct PhysicalTolerances {
  double trace = 1e-8;
  double hermiticity = 1e-10;
  double min_eigenvalue = -1e-7;
};

/// Empty string when rho satisfies the tolerances, otherwise a description
/// of the first violated invariant.
inline std::string physical_violation(const DensityMatrix& rho, const PhysicalTolerances& tol = {}) {
  const double tr_err = std::abs(rho.trace() - Complex(1.0, 0.0));
  if (!(tr_err < tol.trace)) return "trace deviates from 1 by " + std::to_string(tr_err);
  const double herm = rho.hermiticity_error();
  if (!(herm < tol.hermiticity)) return "hermiticity error " + std::to_string(herm);
  const double lmin = rho.min_eigenvalue();
  if (!(lmin > tol.min_eigenvalue)) return "negative eigenvalue " + std::to_string(lmin);
  return {};
}

// ---------------------------------------------------------------------------
// Collapse channels

/// Constant channel: the operator is scaled by sqrt(rate).
struct ConstantRate {
  double rate = 0.0;  // ns^-1
};

/// Time-dependent channel: the operator is scaled by amplitude(t), a real
/// prefactor in ns^-1/2.
struct TimeDependentAmplitude {
  std::function<double(double)> amplitude;
};

struct CollapseChannel {
  ComplexMatrix4 op = ComplexMatrix4::Zero();
  std::variant<ConstantRate, TimeDependentAmplitude> law = ConstantRate{};
  std::string label;

  static CollapseChannel constant(ComplexMatrix4 op, double rate, std::string label = {}) {
    if (!(rate >= 0.0)) throw std::invalid_argument("collapse channel rate must be >= 0");
    return {std::move(op), ConstantRate{rate}, std::move(label)};
  }

  static CollapseChannel time_dependent(ComplexMatrix4 op, std::function<double(double)> amplitude,
                                        std::string label = {}) {
    return {std::move(op), TimeDependentAmplitude{std::move(amplitude)}, std::move(label)};
  }

  bool is_constant() const { return std::holds_alternative<ConstantRate>(law); }

  /// Squared prefactor multiplying D[op] at time t.
  double weight(double t) const {
    if (const auto* c = std::get_if<ConstantRate>(&law)) return c->rate;
    const double a = std::get<TimeDependentAmplitude>(law).amplitude(t);
    return a * a;
  }

  /// The effective collapse operator at time t.
  ComplexMatrix4 effective(double t) const {
    if (const auto* c = std::get_if<ConstantRate>(&law)) return std::sqrt(c->rate) * op;
    return std::get<TimeDependentAmplitude>(law).amplitude(t) * op;
  }
};

/// D[c]rho = c rho c^dagger - 1/2 {c^dagger c, rho}.
inline ComplexMatrix4 lindblad_dissipator(const ComplexMatrix4& c, const ComplexMatrix4& rho) {
  const ComplexMatrix4 cdc = c.adjoint() * c;
  return c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

inline ComplexMatrix4 lindblad_dissipator(const ComplexMatrix4& c, const DensityMatrix& rho) {
  return lindblad_dissipator(c, rho.matrix());
}

inline constexpr double kHamiltonianHermiticityLimit = 1e-9;

/// Reference right-hand side -i[H(t), rho] + sum_j D[c_j(t)]rho, evaluated
/// densely. Throws NonHermitianHamiltonian when H(t) fails the Hermiticity
/// check.
template <class HamiltonianFn>
ComplexMatrix4 master_rhs(double t, const ComplexMatrix4& rho, const HamiltonianFn& hamiltonian,
                          std::span<const CollapseChannel> channels) {
  const ComplexMatrix4 h = hamiltonian(t);
  if (hermiticity_error(h) > kHamiltonianHermiticityLimit) {
    throw NonHermitianHamiltonian("master_rhs: hamiltonian is not Hermitian at t = " + std::to_string(t) +
                                  " ns");
  }
  const Complex minus_i(0.0, -1.0);
  ComplexMatrix4 out = minus_i * (h * rho - rho * h);
  for (const auto& ch : channels) out += lindblad_dissipator(ch.effective(t), rho);
  return out;
}

template <class HamiltonianFn>
ComplexMatrix4 master_rhs(double t, const DensityMatrix& rho, const HamiltonianFn& hamiltonian,
                          std::span<const CollapseChannel> channels) {
  return master_rhs(t, rho.matrix(), hamiltonian, channels);
}

// ---------------------------------------------------------------------------
// Open-system model with a structured Hamiltonian

/// Contributes coefficient(t) * op + conj(coefficient(t)) * op^dagger to H.
struct DriveTerm {
  ComplexMatrix4 op = ComplexMatrix4::Zero();
  std::function<Complex(double)> coefficient;
};

/// H(t) = static_hamiltonian + sum of drive terms, plus collapse channels.
/// Hermitian by construction as long as static_hamiltonian is.
struct LindbladModel {
  ComplexMatrix4 static_hamiltonian = ComplexMatrix4::Zero();
  std::vector<DriveTerm> drives;
  std::vector<CollapseChannel> channels;

  ComplexMatrix4 hamiltonian(double t) const {
    ComplexMatrix4 h = static_hamiltonian;
    for (const auto& d : drives) {
      const Complex g = d.coefficient(t);
      h += g * d.op + std::conj(g) * d.op.adjoint();
    }
    return h;
  }

  std::vector<ComplexMatrix4> effective_channels(double t) const {
    std::vector<ComplexMatrix4> out;
    out.reserve(channels.size());
    for (const auto& c : channels) out.push_back(c.effective(t));
    return out;
  }
};

/// Fast evaluator of the Lindblad right-hand side for a LindbladModel.
/// Folds the anticommutator into a non-Hermitian effective Hamiltonian and
/// applies the jump terms through each operator's nonzero pattern.
class LindbladGenerator {
 public:
  explicit LindbladGenerator(LindbladModel model) : model_(std::move(model)) {
    if (hermiticity_error(model_.static_hamiltonian) > kHamiltonianHermiticityLimit) {
      throw NonHermitianHamiltonian("LindbladGenerator: static hamiltonian is not Hermitian");
    }
    static_decay_ = ComplexMatrix4::Zero();
    for (const auto& ch : model_.channels) {
      Sparse s = sparse_of(ch.op);
      if (s.empty()) continue;
      if (const auto* c = std::get_if<ConstantRate>(&ch.law)) {
        if (c->rate == 0.0) continue;
        static_decay_ += c->rate * (ch.op.adjoint() * ch.op);
        constant_jumps_.push_back({std::move(s), c->rate});
      } else {
        td_jumps_.push_back({std::move(s), ch.op.adjoint() * ch.op, &ch});
      }
    }
  }

  LindbladGenerator(const LindbladGenerator& other) : LindbladGenerator(other.model_) {}
  LindbladGenerator& operator=(const LindbladGenerator&) = delete;

  const LindbladModel& model() const { return model_; }

  ComplexMatrix4 operator()(double t, const ComplexMatrix4& rho) const {
    ComplexMatrix4 k = static_decay_;
    thread_local std::vector<double> td_weight;
    td_weight.resize(td_jumps_.size());
    for (std::size_t n = 0; n < td_jumps_.size(); ++n) {
      td_weight[n] = td_jumps_[n].channel->weight(t);
      k += td_weight[n] * td_jumps_[n].cdc;
    }
    const Complex minus_i(0.0, -1.0);
    const ComplexMatrix4 h_eff = model_.hamiltonian(t) - 0.5 * Complex(0.0, 1.0) * k;
    ComplexMatrix4 out = minus_i * (h_eff * rho) - minus_i * (rho * h_eff.adjoint());
    for (const auto& j : constant_jumps_) add_jump(out, j.entries, j.weight, rho);
    for (std::size_t n = 0; n < td_jumps_.size(); ++n) add_jump(out, td_jumps_[n].entries, td_weight[n], rho);
    return out;
  }

 private:
  struct Entry {
    int row;
    int col;
    Complex value;
  };
  using Sparse = std::vector<Entry>;
  struct ConstantJump {
    Sparse entries;
    double weight;
  };
  struct TimeDependentJump {
    Sparse entries;
    ComplexMatrix4 cdc;
    const CollapseChannel* channel;
  };

  static Sparse sparse_of(const ComplexMatrix4& m) {
    Sparse s;
    for (int i = 0; i < kLevels; ++i)
      for (int j = 0; j < kLevels; ++j)
        if (m(i, j) != Complex(0.0, 0.0)) s.push_back({i, j, m(i, j)});
    return s;
  }

  // out += w * c rho c^dagger
  static void add_jump(ComplexMatrix4& out, const Sparse& c, double w, const ComplexMatrix4& rho) {
    if (w == 0.0) return;
    for (const auto& a : c)
      for (const auto& b : c) out(a.row, b.row) += w * a.value * rho(a.col, b.col) * std::conj(b.value);
  }

  LindbladModel model_;
  ComplexMatrix4 static_decay_;
  std::vector<ConstantJump> constant_jumps_;
  std::vector<TimeDependentJump> td_jumps_;
};

}  // namespace trion
