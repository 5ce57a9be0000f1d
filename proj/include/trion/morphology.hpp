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

// Shape descriptors for sweep curves and maps.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace trion {

struct Extremum {
  double x = 0.0;
  double value = 0.0;
  std::size_t index = 0;
};

namespace detail {
// Vertex of the parabola through three equally spaced samples.
inline Extremum refine(std::span<const double> x, std::span<const double> y, std::size_t i) {
  const double ym = y[i - 1], y0 = y[i], yp = y[i + 1];
  const double denom = ym - 2.0 * y0 + yp;
  if (denom == 0.0) return {x[i], y0, i};
  const double shift = 0.5 * (ym - yp) / denom;
  const double h = 0.5 * (x[i + 1] - x[i - 1]);
  return {x[i] + shift * h, y0 - 0.25 * (ym - yp) * shift, i};
}

template <class Better>
std::vector<Extremum> interior_extrema(std::span<const double> x, std::span<const double> y, Better better) {
  if (x.size() != y.size()) throw std::invalid_argument("extrema: x and y differ in length");
  std::vector<Extremum> out;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (better(y[i], y[i - 1]) && better(y[i], y[i + 1])) out.push_back(refine(x, y, i));
  }
  return out;
}
}  // namespace detail

/// Interior local maxima with parabolic refinement of position and height.
inline std::vector<Extremum> local_maxima(std::span<const double> x, std::span<const double> y) {
  return detail::interior_extrema(x, y, [](double a, double b) { return a > b; });
}

inline std::vector<Extremum> local_minima(std::span<const double> x, std::span<const double> y) {
  return detail::interior_extrema(x, y, [](double a, double b) { return a < b; });
}

/// Min-max normalization onto [0, 1]. Returns (min, max) of the input.
inline std::pair<double, double> normalize_minmax(std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double mn = *lo, mx = *hi;
  const double range = mx - mn;
  for (double& e : v) e = range > 0.0 ? (e - mn) / range : 0.0;
  return {mn, mx};
}

/// Number of distinct lobes in a rows x cols map: connected components
/// (8-neighbour) of the set where the min-max normalized signal is at least
/// `level`.
inline int count_lobes(std::span<const double> grid, std::size_t rows, std::size_t cols, double level = 0.9) {
  if (grid.size() != rows * cols) throw std::invalid_argument("count_lobes: grid size mismatch");
  std::vector<double> v(grid.begin(), grid.end());
  normalize_minmax(v);
  std::vector<int> label(v.size(), 0);
  int lobes = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < v.size(); ++s) {
    if (v[s] < level || label[s] != 0) continue;
    ++lobes;
    label[s] = lobes;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const auto r = static_cast<long>(c / cols), q = static_cast<long>(c % cols);
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dq = -1; dq <= 1; ++dq) {
          const long rr = r + dr, qq = q + dq;
          if (rr < 0 || qq < 0 || rr >= static_cast<long>(rows) || qq >= static_cast<long>(cols)) continue;
          const std::size_t nb = static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(qq);
          if (v[nb] >= level && label[nb] == 0) {
            label[nb] = lobes;
            stack.push_back(nb);
          }
        }
      }
    }
  }
  return lobes;
}

/// Row-wise maximum of a rows x cols grid: the upper envelope along the
/// column axis.
inline std::vector<double> ridge_profile(std::span<const double> grid, std::size_t rows, std::size_t cols) {
  if (grid.size() != rows * cols || cols == 0) throw std::invalid_argument("ridge_profile: grid size mismatch");
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = grid.subspan(r * cols, cols);
    out[r] = *std::max_element(row.begin(), row.end());
  }
  return out;
}

/// Topographic prominence of the local maximum at index i: its height above
/// the higher of the two lowest points reached before climbing to a taller
/// sample (or the series end) on either side.
inline double prominence(std::span<const double> y, std::size_t i) {
  double left = y[i], right = y[i];
  for (std::size_t k = i; k-- > 0;) {
    if (y[k] > y[i]) break;
    left = std::min(left, y[k]);
  }
  for (std::size_t k = i + 1; k < y.size(); ++k) {
    if (y[k] > y[i]) break;
    right = std::min(right, y[k]);
  }
  return y[i] - std::max(left, right);
}

/// Local maxima whose prominence is at least `min_fraction` of the series range.
inline std::vector<Extremum> prominent_maxima(std::span<const double> x, std::span<const double> y,
                                              double min_fraction = 0.02) {
  std::vector<Extremum> out;
  if (y.empty()) return out;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = *hi - *lo;
  for (const auto& e : local_maxima(x, y))
    if (range > 0.0 && prominence(y, e.index) >= min_fraction * range) out.push_back(e);
  return out;
}

}  // namespace trion
