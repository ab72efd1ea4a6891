#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sinkmatch/gcnn.hpp"
#include "sinkmatch/graph.hpp"

namespace sinkmatch {

/// Knobs of the per-frame association pipeline. use_edges = false zeroes all
/// graph edge weights so propagation degenerates to a per-node map (the
/// feed-forward ablation); use_iou = false feeds (cosine, 0) to the affinity
/// head (the appearance-only ablation).
struct PipelineConfig {
  double s_slack = 0.2;
  double l = 5.0;
  int sinkhorn_iters = 8;
  bool use_edges = true;
  bool use_iou = true;
};

/// Augmented affinity matrix. Inner cell (i, j) scores tracklet i against
/// detection j; row m and column n are the slack row/column absorbing
/// unmatched objects. Gated pairs (no graph edge) carry -infinity and a set
/// gated-mask bit; they can never receive assignment mass.
struct AffinityMatrix {
  std::size_t m = 0;
  std::size_t n = 0;
  Matrix<double> scores;       // (m+1) x (n+1)
  Matrix<std::uint8_t> gated;  // m x n; 1 = forbidden
};

/// Result of the normalization: the scaled matrix plus its achieved
/// marginals (row targets (1,...,1, n), column targets (1,...,1, m)).
struct NormalizedAssignment {
  std::size_t m = 0;
  std::size_t n = 0;
  Matrix<double> s_star;  // (m+1) x (n+1)
  std::vector<double> row_marginals;
  std::vector<double> col_marginals;
};

/// Hard assignment: matched (tracklet, detection) pairs, plus unmatched
/// detections (births) and unmatched tracklets (deaths).
struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::vector<std::size_t> births;
  std::vector<std::size_t> deaths;
};

/// Cosine similarity with the zero-vector case defined as 0 (neutral), not
/// an error. Exact 1.0 when both arguments are the same vector.
template <typename T>
T cosine_similarity(std::span<const T> a, std::span<const T> b,
                    ScalarCtx<T> ctx) {
  using std::sqrt;
  if (a.size() != b.size()) {
    throw DataError("cosine_similarity: length mismatch");
  }
  if (a.empty()) return ctx.constant(0.0);
  T dot = a[0] * b[0];
  T na = a[0] * a[0];
  T nb = b[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (value_of(na) == 0.0 || value_of(nb) == 0.0) return ctx.constant(0.0);
  return dot / sqrt(na * nb);
}

/// Affinity score per graph edge: f_affinity((cosine of the two interaction
/// vectors, IoU of the two boxes)). IoU is data, not a function of
/// parameters, so it enters as a constant.
template <typename T>
std::vector<T> edge_affinities(const CandidateGraph& g,
                               const Matrix<T>& h_inter,
                               const ModelT<T>& model, bool use_iou,
                               ScalarCtx<T> ctx) {
  std::vector<T> out;
  out.reserve(g.edges.size());
  for (const auto& [ti, dj] : g.edges) {
    const std::size_t u = ti;
    const std::size_t v = g.detection_node(dj);
    T cos = cosine_similarity<T>(h_inter.row(u), h_inter.row(v), ctx);
    T iou_term = ctx.constant(use_iou ? iou(g.boxes[u], g.boxes[v]) : 0.0);
    std::vector<T> features{std::move(cos), std::move(iou_term)};
    out.push_back(linear_forward<T>(model.f_affinity, features).at(0));
  }
  return out;
}

/// Builds the positive kernel exp(l * score) over the augmented
/// (m+1) x (n+1) shape: gated inner cells are exactly 0, slack row/column
/// and corner carry exp(l * s_slack). The exponential is taken once, here;
/// the normalization below only rescales.
template <typename T>
Matrix<T> augmented_kernel(const CandidateGraph& g,
                           const std::vector<T>& edge_scores, double s_slack,
                           double l, ScalarCtx<T> ctx) {
  using std::exp;
  if (edge_scores.size() != g.edges.size()) {
    throw DataError("augmented_kernel: score count mismatch");
  }
  if (l <= 0.0) throw DataError("augmented_kernel: l must be positive");
  Matrix<T> k(g.m + 1, g.n + 1, ctx.constant(0.0));
  const T slack = ctx.constant(std::exp(l * s_slack));
  for (std::size_t i = 0; i <= g.m; ++i) k(i, g.n) = slack;
  for (std::size_t j = 0; j <= g.n; ++j) k(g.m, j) = slack;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto [i, j] = g.edges[e];
    k(i, j) = exp(edge_scores[e] * l);
    if (!std::isfinite(value_of(k(i, j)))) {
      throw InternalError("augmented_kernel: exp overflow");
    }
  }
  return k;
}

/// Marginal targets: each real tracklet row must emit mass 1, each real
/// detection column must receive mass 1, the slack row absorbs n and the
/// slack column absorbs m. Row-target total m + n equals column-target
/// total n + m, so the constraints are mutually feasible.
inline double sinkhorn_row_target(std::size_t i, std::size_t m,
                                  std::size_t n) {
  return i < m ? 1.0 : static_cast<double>(n);
}
inline double sinkhorn_col_target(std::size_t j, std::size_t m,
                                  std::size_t n) {
  return j < n ? 1.0 : static_cast<double>(m);
}

/// Alternating proportional scaling of a non-negative kernel toward the
/// marginal targets above. One iteration = one row pass then one column
/// pass, so after any full iteration the column sums are exact and the row
/// sums converge as iterations grow. Differentiable end to end: the loop is
/// a fixed composition of sums, divisions, and products.
template <typename T>
Matrix<T> sinkhorn_scale(Matrix<T> k, std::size_t m, std::size_t n, int iters,
                         ScalarCtx<T> ctx) {
  if (k.rows() != m + 1 || k.cols() != n + 1) {
    throw DataError("sinkhorn_scale: kernel must be (m+1) x (n+1)");
  }
  if (iters < 1) throw DataError("sinkhorn_scale: iters must be >= 1");

  auto scale_line = [&](bool row, std::size_t idx, double target) {
    const std::size_t len = row ? k.cols() : k.rows();
    auto cell = [&](std::size_t t) -> T& {
      return row ? k(idx, t) : k(t, idx);
    };
    if (target == 0.0) {
      // Degenerate augmented shapes (m = 0 or n = 0): the slack line's
      // target is zero, so it is cleared outright instead of divided.
      for (std::size_t t = 0; t < len; ++t) cell(t) = ctx.constant(0.0);
      return;
    }
    T sum = cell(0);
    for (std::size_t t = 1; t < len; ++t) sum += cell(t);
    const double sv = value_of(sum);
    if (!std::isfinite(sv)) throw InternalError("sinkhorn_scale: mass blew up");
    if (sv <= 0.0) {
      throw InternalError(
          "sinkhorn_scale: a line with positive target has zero mass");
    }
    const T factor = ctx.constant(target) / sum;
    for (std::size_t t = 0; t < len; ++t) cell(t) = cell(t) * factor;
  };

  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i <= m; ++i) {
      scale_line(true, i, sinkhorn_row_target(i, m, n));
    }
    for (std::size_t j = 0; j <= n; ++j) {
      scale_line(false, j, sinkhorn_col_target(j, m, n));
    }
  }
  return k;
}

/// Whole differentiable pipeline for one frame pair: edge scoring, K-layer
/// propagation, affinity head, kernel, normalization. Instantiated with
/// double for tracking and with tape variables for training, so inference
/// and the learned gradients can never disagree on semantics.
template <typename T>
Matrix<T> associate(const CandidateGraph& g, const ModelT<T>& model,
                    const PipelineConfig& cfg, ScalarCtx<T> ctx) {
  LiftedGraph<T> lifted = lift_graph(g, ctx);
  std::vector<T> z0;
  if (cfg.use_edges) {
    z0 = initial_edge_weights(g, lifted, model);
  } else {
    z0.assign(g.edges.size(), ctx.constant(0.0));
  }
  Matrix<T> h_inter =
      gcn_forward_t(g, lifted, model, std::move(z0), cfg.use_edges, ctx);
  std::vector<T> scores =
      edge_affinities(g, h_inter, model, cfg.use_iou, ctx);
  Matrix<T> kernel = augmented_kernel(g, scores, cfg.s_slack, cfg.l, ctx);
  return sinkhorn_scale(std::move(kernel), g.m, g.n, cfg.sinkhorn_iters, ctx);
}

/// Augmented affinity matrix with slack entries at s_slack and gated cells
/// at -infinity (they become kernel zeros).
AffinityMatrix affinity_scores(const Matrix<double>& h_inter,
                               const CandidateGraph& graph, const Model& model,
                               double s_slack, bool use_iou = true);

/// Kernel + scaling + achieved marginals for a prebuilt affinity matrix.
NormalizedAssignment sinkhorn(const AffinityMatrix& s, double l, int iters);

/// Drops the slack row/column, forbids cells below s_thres, and solves the
/// maximum-weight assignment over what remains.
MatchResult binarize_and_assign(const Matrix<double>& s_star, double s_thres);

}  // namespace sinkmatch
