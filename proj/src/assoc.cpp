#include "sinkmatch/assoc.hpp"

#include <cmath>
#include <limits>

#include "sinkmatch/hungarian.hpp"

namespace sinkmatch {

AffinityMatrix affinity_scores(const Matrix<double>& h_inter,
                               const CandidateGraph& graph, const Model& model,
                               double s_slack, bool use_iou) {
  if (h_inter.rows() != graph.node_count()) {
    throw DataError("affinity_scores: interaction features do not cover all "
                    "graph nodes");
  }
  ScalarCtx<double> ctx;
  const std::vector<double> edge_scores =
      edge_affinities<double>(graph, h_inter, model, use_iou, ctx);

  AffinityMatrix out;
  out.m = graph.m;
  out.n = graph.n;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  out.scores = Matrix<double>(graph.m + 1, graph.n + 1, neg_inf);
  out.gated = Matrix<std::uint8_t>(graph.m, graph.n, 1);
  for (std::size_t i = 0; i <= graph.m; ++i) out.scores(i, graph.n) = s_slack;
  for (std::size_t j = 0; j <= graph.n; ++j) out.scores(graph.m, j) = s_slack;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto [i, j] = graph.edges[e];
    out.scores(i, j) = edge_scores[e];
    out.gated(i, j) = 0;
  }
  return out;
}

NormalizedAssignment sinkhorn(const AffinityMatrix& s, double l, int iters) {
  if (s.scores.rows() != s.m + 1 || s.scores.cols() != s.n + 1) {
    throw DataError("sinkhorn: affinity matrix shape mismatch");
  }
  if (l <= 0.0) throw DataError("sinkhorn: l must be positive");

  Matrix<double> kernel(s.m + 1, s.n + 1, 0.0);
  for (std::size_t i = 0; i <= s.m; ++i) {
    for (std::size_t j = 0; j <= s.n; ++j) {
      const bool forbidden = i < s.m && j < s.n && s.gated(i, j);
      kernel(i, j) = forbidden ? 0.0 : std::exp(l * s.scores(i, j));
      if (!std::isfinite(kernel(i, j))) {
        throw InternalError("sinkhorn: exp overflow in kernel");
      }
    }
  }

  ScalarCtx<double> ctx;
  NormalizedAssignment out;
  out.m = s.m;
  out.n = s.n;
  out.s_star = sinkhorn_scale(std::move(kernel), s.m, s.n, iters, ctx);
  out.row_marginals.assign(s.m + 1, 0.0);
  out.col_marginals.assign(s.n + 1, 0.0);
  for (std::size_t i = 0; i <= s.m; ++i) {
    for (std::size_t j = 0; j <= s.n; ++j) {
      out.row_marginals[i] += out.s_star(i, j);
      out.col_marginals[j] += out.s_star(i, j);
    }
  }
  return out;
}

MatchResult binarize_and_assign(const Matrix<double>& s_star, double s_thres) {
  if (s_star.rows() < 1 || s_star.cols() < 1) {
    throw DataError("binarize_and_assign: matrix must be augmented");
  }
  const std::size_t m = s_star.rows() - 1;
  const std::size_t n = s_star.cols() - 1;

  Matrix<double> weights(m, n, 0.0);
  Matrix<std::uint8_t> allowed(m, n, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      weights(i, j) = s_star(i, j);
      allowed(i, j) = s_star(i, j) >= s_thres ? 1 : 0;
    }
  }

  MatchResult out;
  out.matches = max_weight_matching(weights, allowed);
  std::vector<char> row_used(m, 0), col_used(n, 0);
  for (const auto& [i, j] : out.matches) {
    row_used[i] = 1;
    col_used[j] = 1;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!row_used[i]) out.deaths.push_back(i);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!col_used[j]) out.births.push_back(j);
  }
  return out;
}

}  // namespace sinkmatch
