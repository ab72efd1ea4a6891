#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sinkmatch/embeddings.hpp"
#include "sinkmatch/geom.hpp"
#include "sinkmatch/matrix.hpp"
#include "sinkmatch/params.hpp"

namespace sinkmatch {

/// One side of the association problem: a tracklet's last instance or a
/// current-frame detection.
struct GraphNode {
  BoundingBox box;
  AppearanceEmbedding embedding;
};

/// Bipartite candidate graph between m tracklets and n detections. Node
/// order is tracklets first (rows 0..m-1 of node_features), then detections
/// (rows m..m+n-1). Immutable once edge weights are computed.
struct CandidateGraph {
  std::size_t m = 0;
  std::size_t n = 0;
  Matrix<double> node_features;  // (m+n) x d_app appearance vectors
  std::vector<BoundingBox> boxes;
  std::vector<GeomFeatures> geom;  // frame-normalized, parallel to boxes
  // (tracklet_index, detection_index) pairs, detection_index in [0, n)
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<double> edge_weights;  // parallel to edges; empty until computed

  std::size_t node_count() const { return m + n; }
  std::size_t detection_node(std::size_t j) const { return m + j; }
};

/// Builds the gated bipartite graph: an edge exists iff the box centers are
/// within gate_px. Isolated nodes are allowed (births/deaths downstream).
/// frame_w/frame_h normalize the per-node geometric features.
CandidateGraph build_graph(std::span<const GraphNode> tracklets,
                           std::span<const GraphNode> detections,
                           double gate_px, double frame_w, double frame_h);

/// Initial edge weights: z = relu(f_edge(concat(h_app_i, h_geom_i,
/// h_app_j, h_geom_j))) with i the tracklet node and j the detection node.
/// Fills graph.edge_weights.
void compute_edge_weights(CandidateGraph& graph, const Model& model);

}  // namespace sinkmatch
