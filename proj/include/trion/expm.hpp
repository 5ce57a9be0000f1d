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

// Piecewise-constant propagation through the exponential of the vectorized
// Liouvillian. Independent of the Runge-Kutta path and used as its oracle.

#include "trion/lindblad.hpp"

#include <Eigen/LU>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace trion {

using Superoperator = Eigen::Matrix<Complex, 16, 16>;
using VecState = Eigen::Matrix<Complex, 16, 1>;

/// Column-stacking vectorization: vec(rho)[i + 4 j] = rho(i, j).
inline VecState vectorize(const ComplexMatrix4& rho) {
  VecState v;
  for (int j = 0; j < kLevels; ++j)
    for (int i = 0; i < kLevels; ++i) v(i + kLevels * j) = rho(i, j);
  return v;
}

inline ComplexMatrix4 unvectorize(const VecState& v) {
  ComplexMatrix4 m;
  for (int j = 0; j < kLevels; ++j)
    for (int i = 0; i < kLevels; ++i) m(i, j) = v(i + kLevels * j);
  return m;
}

namespace detail {

// vec(A X B) = (B^T kron A) vec(X)
inline Superoperator kron(const ComplexMatrix4& a, const ComplexMatrix4& b) {
  Superoperator k;
  for (int i = 0; i < kLevels; ++i)
    for (int j = 0; j < kLevels; ++j) k.block<4, 4>(kLevels * i, kLevels * j) = a(i, j) * b;
  return k;
}

}  // namespace detail

/// Liouvillian L with vec(d rho / dt) = L vec(rho), for a Hamiltonian and a
/// set of already-scaled collapse operators.
inline Superoperator liouvillian(const ComplexMatrix4& h, std::span<const ComplexMatrix4> collapse_ops) {
  const ComplexMatrix4 id = ComplexMatrix4::Identity();
  const Complex i(0.0, 1.0);
  Superoperator l = -i * detail::kron(id, h) + i * detail::kron(h.transpose(), id);
  for (const auto& c : collapse_ops) {
    const ComplexMatrix4 cdc = c.adjoint() * c;
    l += detail::kron(c.conjugate(), c) - 0.5 * detail::kron(id, cdc) - 0.5 * detail::kron(cdc.transpose(), id);
  }
  return l;
}

/// Matrix exponential by scaling and squaring with the degree-13 Pade
/// approximant (Higham 2005). Accurate to roughly unit roundoff times the
/// condition of the problem for any finite input norm.
template <class Derived>
typename Derived::PlainObject expm(const Eigen::MatrixBase<Derived>& a_in) {
  using Matrix = typename Derived::PlainObject;
  using Scalar = typename Derived::Scalar;
  Matrix a = a_in;
  const Eigen::Index n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("expm: matrix must be square");

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm1)) throw std::overflow_error("expm: non-finite input");
  constexpr double theta13 = 5.371920351148152;
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    if (squarings > 1000) throw std::overflow_error("expm: input norm too large for scaling");
    a /= std::ldexp(1.0, squarings);
  }

  constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                          1187353796428800.0,  129060195264000.0,   10559470521600.0,
                          670442572800.0,      33522128640.0,       1323241920.0,
                          40840800.0,          960960.0,            16380.0,
                          182.0,               1.0};
  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u_inner = a6 * (Scalar(b[13]) * a6 + Scalar(b[11]) * a4 + Scalar(b[9]) * a2) +
                         Scalar(b[7]) * a6 + Scalar(b[5]) * a4 + Scalar(b[3]) * a2 + Scalar(b[1]) * id;
  const Matrix u = a * u_inner;
  const Matrix v = a6 * (Scalar(b[12]) * a6 + Scalar(b[10]) * a4 + Scalar(b[8]) * a2) + Scalar(b[6]) * a6 +
                   Scalar(b[4]) * a4 + Scalar(b[2]) * a2 + Scalar(b[0]) * id;
  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

/// Slice boundaries over [t0, t1] that equidistribute the integral of a
/// positive density; a constant density gives equal slices.
template <class DensityFn>
std::vector<double> slice_boundaries(double t0, double t1, int n_slices, const DensityFn& density) {
  if (n_slices < 1) throw std::invalid_argument("slice_boundaries: n_slices must be >= 1");
  if (!(t1 >= t0)) throw std::invalid_argument("slice_boundaries: requires t1 >= t0");
  const int m = 32 * n_slices;
  std::vector<double> grid(static_cast<std::size_t>(m) + 1), cum(static_cast<std::size_t>(m) + 1, 0.0);
  double prev = density(t0);
  grid[0] = t0;
  for (int k = 1; k <= m; ++k) {
    const double t = t0 + (t1 - t0) * k / m;
    const double w = density(t);
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("slice_boundaries: density must be positive");
    grid[static_cast<std::size_t>(k)] = t;
    cum[static_cast<std::size_t>(k)] = cum[static_cast<std::size_t>(k) - 1] + 0.5 * (prev + w) * (t - grid[k - 1]);
    prev = w;
  }
  std::vector<double> b(static_cast<std::size_t>(n_slices) + 1);
  b.front() = t0;
  b.back() = t1;
  std::size_t j = 0;
  for (int s = 1; s < n_slices; ++s) {
    const double target = cum.back() * s / n_slices;
    while (cum[j + 1] < target) ++j;
    const double f = (target - cum[j]) / (cum[j + 1] - cum[j]);
    b[static_cast<std::size_t>(s)] = grid[j] + f * (grid[j + 1] - grid[j]);
  }
  return b;
}

/// Propagates rho0 across consecutive slices [b_k, b_k+1], each with the
/// Hamiltonian and collapse operators frozen at the slice midpoint.
template <class HamiltonianFn>
DensityMatrix expm_propagate(const DensityMatrix& rho0, const HamiltonianFn& hamiltonian,
                             std::span<const CollapseChannel> channels, std::span<const double> boundaries) {
  if (boundaries.size() < 2) throw std::invalid_argument("expm_propagate: needs at least one slice");
  VecState v = vectorize(rho0.matrix());
  std::vector<ComplexMatrix4> ops(channels.size());
  for (std::size_t s = 0; s + 1 < boundaries.size(); ++s) {
    const double dt = boundaries[s + 1] - boundaries[s];
    if (!(dt >= 0.0)) throw std::invalid_argument("expm_propagate: boundaries must be non-decreasing");
    const double tm = boundaries[s] + 0.5 * dt;
    for (std::size_t k = 0; k < channels.size(); ++k) ops[k] = channels[k].effective(tm);
    const Superoperator step = expm(Superoperator(dt * liouvillian(hamiltonian(tm), ops)));
    v = step * v;
  }
  return DensityMatrix(unvectorize(v));
}

/// Equal-slice variant.
template <class HamiltonianFn>
DensityMatrix expm_propagate(const DensityMatrix& rho0, const HamiltonianFn& hamiltonian,
                             std::span<const CollapseChannel> channels, double t0, double t1, int n_slices) {
  const auto b = slice_boundaries(t0, t1, n_slices, [](double) { return 1.0; });
  return expm_propagate(rho0, hamiltonian, channels, std::span<const double>(b));
}

inline DensityMatrix expm_propagate(const DensityMatrix& rho0, const LindbladModel& model, double t0, double t1,
                                    int n_slices) {
  return expm_propagate(
      rho0, [&model](double t) { return model.hamiltonian(t); }, model.channels, t0, t1, n_slices);
}

inline DensityMatrix expm_propagate(const DensityMatrix& rho0, const LindbladModel& model,
                                    std::span<const double> boundaries) {
  return expm_propagate(
      rho0, [&model](double t) { return model.hamiltonian(t); }, model.channels, boundaries);
}

}  // namespace trion
