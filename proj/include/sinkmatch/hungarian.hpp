#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sinkmatch/matrix.hpp"

namespace sinkmatch {

/// Maximum-weight bipartite matching over an m x n weight matrix; cells with
/// allowed(i, j) == 0 can never be matched. The matching is partial: a row
/// or column stays unmatched when no allowed cell improves the total (so
/// negative-weight cells are never chosen). Returns (row, col) pairs in row
/// order. O((m+n)^3) via reduction to a square assignment problem with
/// zero-cost dummy partners.
std::vector<std::pair<std::size_t, std::size_t>> max_weight_matching(
    const Matrix<double>& weights, const Matrix<std::uint8_t>& allowed);

/// Convenience overload: every cell allowed.
std::vector<std::pair<std::size_t, std::size_t>> max_weight_matching(
    const Matrix<double>& weights);

}  // namespace sinkmatch
