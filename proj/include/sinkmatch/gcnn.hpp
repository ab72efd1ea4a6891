#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "sinkmatch/graph.hpp"

namespace sinkmatch {

/// Graph inputs lifted into the scalar domain T (plain copies for double,
/// tape constants for training). Lift once per pipeline run so node features
/// are shared between the edge scorer and the propagation layers.
template <typename T>
struct LiftedGraph {
  Matrix<T> h0;                        // (m+n) x d_app
  std::vector<std::array<T, 4>> geom;  // per node
};

template <typename T>
LiftedGraph<T> lift_graph(const CandidateGraph& g, ScalarCtx<T> ctx) {
  LiftedGraph<T> out;
  out.h0 = Matrix<T>(g.node_features.rows(), g.node_features.cols());
  for (std::size_t i = 0; i < g.node_features.data().size(); ++i) {
    out.h0.data()[i] = ctx.constant(g.node_features.data()[i]);
  }
  out.geom.reserve(g.geom.size());
  for (const auto& gf : g.geom) {
    out.geom.push_back({ctx.constant(gf.v[0]), ctx.constant(gf.v[1]),
                        ctx.constant(gf.v[2]), ctx.constant(gf.v[3])});
  }
  return out;
}

/// z = relu(f_edge(concat(h_app_i, geom_i, h_app_j, geom_j))) per edge,
/// i the tracklet node, j the detection node.
template <typename T>
std::vector<T> initial_edge_weights(const CandidateGraph& g,
                                    const LiftedGraph<T>& lifted,
                                    const ModelT<T>& model) {
  const std::size_t d_app = lifted.h0.cols();
  std::vector<T> weights;
  weights.reserve(g.edges.size());
  std::vector<T> features;
  for (const auto& [ti, dj] : g.edges) {
    const std::size_t u = ti;
    const std::size_t v = g.detection_node(dj);
    features.clear();
    features.reserve(2 * d_app + 8);
    auto hu = lifted.h0.row(u);
    features.insert(features.end(), hu.begin(), hu.end());
    features.insert(features.end(), lifted.geom[u].begin(),
                    lifted.geom[u].end());
    auto hv = lifted.h0.row(v);
    features.insert(features.end(), hv.begin(), hv.end());
    features.insert(features.end(), lifted.geom[v].begin(),
                    lifted.geom[v].end());
    weights.push_back(
        linear_forward<T>(model.f_edge, features).at(0));
  }
  return weights;
}

template <typename T>
std::vector<T> initial_edge_weights(const CandidateGraph& g,
                                    const ModelT<T>& model, ScalarCtx<T> ctx) {
  return initial_edge_weights(g, lift_graph(g, ctx), model);
}

namespace detail {

// Row-vector convention: features are rows of h, so a layer is h * w with w
// stored input-dim x output-dim.
template <typename T>
Matrix<T> feature_matmul(const Matrix<T>& h, const Matrix<T>& w) {
  if (h.cols() != w.rows()) {
    throw DataError("feature_matmul: inner dimensions disagree (" +
                    std::to_string(h.cols()) + " vs " +
                    std::to_string(w.rows()) + ")");
  }
  if (w.rows() == 0) throw DataError("feature_matmul: empty weight matrix");
  Matrix<T> out(h.rows(), w.cols());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t k = 0; k < w.cols(); ++k) {
      T acc = h(i, 0) * w(0, k);
      for (std::size_t j = 1; j < h.cols(); ++j) acc += h(i, j) * w(j, k);
      out(i, k) = acc;
    }
  }
  return out;
}

}  // namespace detail

/// One propagation step: out = act(D^{-1/2} (A + I) D^{-1/2} h_prev w) where
/// A is the symmetric bipartite adjacency built from z_prev and D its
/// diagonal degree matrix (every entry >= 1 thanks to the self-loop, so the
/// inverse square root always exists). ReLU on every layer except the last.
template <typename T>
Matrix<T> gcn_layer(const CandidateGraph& g, const Matrix<T>& h_prev,
                    const std::vector<T>& z_prev, const Matrix<T>& w,
                    bool final_layer, ScalarCtx<T> ctx) {
  using std::sqrt;
  const std::size_t nodes = g.node_count();
  if (h_prev.rows() != nodes) {
    throw DataError("gcn_layer: feature matrix has " +
                    std::to_string(h_prev.rows()) + " rows for " +
                    std::to_string(nodes) + " nodes");
  }
  if (z_prev.size() != g.edges.size()) {
    throw DataError("gcn_layer: edge weight count mismatch");
  }

  Matrix<T> mixed = detail::feature_matmul(h_prev, w);

  // Degrees of A + I: 1 + sum of incident edge weights.
  std::vector<T> tau(nodes);
  for (std::size_t i = 0; i < nodes; ++i) tau[i] = ctx.constant(1.0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const std::size_t u = g.edges[e].first;
    const std::size_t v = g.detection_node(g.edges[e].second);
    tau[u] += z_prev[e];
    tau[v] += z_prev[e];
  }
  std::vector<T> inv_sqrt_tau;
  inv_sqrt_tau.reserve(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    inv_sqrt_tau.push_back(ctx.constant(1.0) / sqrt(tau[i]));
  }

  Matrix<T> out(h_prev.rows(), w.cols());
  for (std::size_t i = 0; i < nodes; ++i) {
    const T self = inv_sqrt_tau[i] * inv_sqrt_tau[i];
    for (std::size_t k = 0; k < w.cols(); ++k) out(i, k) = self * mixed(i, k);
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const std::size_t u = g.edges[e].first;
    const std::size_t v = g.detection_node(g.edges[e].second);
    const T coef = z_prev[e] * inv_sqrt_tau[u] * inv_sqrt_tau[v];
    for (std::size_t k = 0; k < w.cols(); ++k) {
      out(u, k) += coef * mixed(v, k);
      out(v, k) += coef * mixed(u, k);
    }
  }
  if (!final_layer) {
    using sinkmatch::relu;
    for (auto& x : out.data()) x = relu(x);
  }
  return out;
}

/// z_k = relu(phi(concat(z_prev, h_i, h_j))) with h taken from the freshly
/// updated node features of the same layer.
template <typename T>
T edge_update(const T& z_prev, std::span<const T> h_i, std::span<const T> h_j,
              const LinearLayerT<T>& phi) {
  std::vector<T> features;
  features.reserve(1 + h_i.size() + h_j.size());
  features.push_back(z_prev);
  features.insert(features.end(), h_i.begin(), h_i.end());
  features.insert(features.end(), h_j.begin(), h_j.end());
  return linear_forward<T>(phi, features).at(0);
}

/// Full K-layer propagation: alternating node updates (gcn_layer) and edge
/// updates, starting from appearance features and the given initial edge
/// weights. With update_edges = false the edge scalars stay fixed at z0 and
/// phi is never evaluated (the feed-forward ablation passes all-zero z0).
template <typename T>
Matrix<T> gcn_forward_t(const CandidateGraph& g, const LiftedGraph<T>& lifted,
                        const ModelT<T>& model, std::vector<T> z,
                        bool update_edges, ScalarCtx<T> ctx) {
  if (z.size() != g.edges.size()) {
    throw DataError("gcn_forward: initial edge weight count mismatch");
  }
  const std::size_t layers = model.gcn_weights.size();
  if (layers == 0) throw DataError("gcn_forward: model has no layers");

  Matrix<T> h = lifted.h0;
  for (std::size_t k = 0; k < layers; ++k) {
    const bool final_layer = (k + 1 == layers);
    h = gcn_layer(g, h, z, model.gcn_weights[k], final_layer, ctx);
    if (update_edges) {
      for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const std::size_t u = g.edges[e].first;
        const std::size_t v = g.detection_node(g.edges[e].second);
        z[e] = edge_update<T>(z[e], h.row(u), h.row(v), model.phi);
      }
    }
  }
  for (const T& x : h.data()) {
    if (!std::isfinite(value_of(x))) {
      throw InternalError("gcn_forward: non-finite interaction feature");
    }
  }
  return h;
}

/// Double-precision entry point using the graph's stored edge weights as z0.
Matrix<double> gcn_forward(const CandidateGraph& graph, const Model& model);

}  // namespace sinkmatch
