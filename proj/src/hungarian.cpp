#include "sinkmatch/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sinkmatch/errors.hpp"

namespace sinkmatch {

namespace {

// Exact min-cost perfect assignment on a square matrix (Kuhn-Munkres with
// potentials, the classic O(n^3) formulation). Returns row_of_col.
std::vector<std::size_t> solve_square_min(const Matrix<double>& a) {
  const std::size_t n = a.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (!std::isfinite(delta)) {
        throw InternalError("assignment: no augmenting path");
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_of_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
  return row_of_col;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> max_weight_matching(
    const Matrix<double>& weights, const Matrix<std::uint8_t>& allowed) {
  const std::size_t m = weights.rows();
  const std::size_t n = weights.cols();
  if (allowed.rows() != m || allowed.cols() != n) {
    throw DataError("max_weight_matching: mask shape mismatch");
  }
  if (m == 0 || n == 0) return {};

  double max_abs = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(weights(i, j))) {
        throw DataError("max_weight_matching: non-finite weight");
      }
      if (allowed(i, j)) max_abs = std::max(max_abs, std::abs(weights(i, j)));
    }
  }
  // Forbidden cells get a cost so large that any all-dummy completion beats
  // them, yet finite so potential updates stay well-defined.
  const double forbidden = max_abs * static_cast<double>(m + n + 1) * 4.0;

  // Square (m+n) x (m+n) min-cost instance: real cells cost -w, each row and
  // column also has a free dummy partner, so staying unmatched costs 0.
  const std::size_t s = m + n;
  Matrix<double> cost(s, s, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cost(i, j) = allowed(i, j) ? -weights(i, j) : forbidden;
    }
  }

  const auto row_of_col = solve_square_min(cost);
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t i = row_of_col[j];
    if (i < m && allowed(i, j) && weights(i, j) > 0.0) {
      matches.emplace_back(i, j);
    }
  }
  std::sort(matches.begin(), matches.end());
  return matches;
}

std::vector<std::pair<std::size_t, std::size_t>> max_weight_matching(
    const Matrix<double>& weights) {
  Matrix<std::uint8_t> allowed(weights.rows(), weights.cols(), 1);
  return max_weight_matching(weights, allowed);
}

}  // namespace sinkmatch
