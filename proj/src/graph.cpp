#include "sinkmatch/graph.hpp"

#include "sinkmatch/errors.hpp"
#include "sinkmatch/gcnn.hpp"

namespace sinkmatch {

CandidateGraph build_graph(std::span<const GraphNode> tracklets,
                           std::span<const GraphNode> detections,
                           double gate_px, double frame_w, double frame_h) {
  if (gate_px <= 0) throw DataError("gate_px must be positive");

  CandidateGraph g;
  g.m = tracklets.size();
  g.n = detections.size();

  std::size_t d_app = 0;
  if (!tracklets.empty()) {
    d_app = tracklets.front().embedding.dim();
  } else if (!detections.empty()) {
    d_app = detections.front().embedding.dim();
  }

  g.node_features = Matrix<double>(g.node_count(), d_app);
  g.boxes.reserve(g.node_count());
  g.geom.reserve(g.node_count());

  auto add_node = [&](const GraphNode& node, std::size_t row) {
    if (node.embedding.dim() != d_app) {
      throw DataError("graph node embeddings disagree on dimension: " +
                      std::to_string(node.embedding.dim()) + " vs " +
                      std::to_string(d_app));
    }
    auto dst = g.node_features.row(row);
    for (std::size_t d = 0; d < d_app; ++d) dst[d] = node.embedding.values[d];
    g.boxes.push_back(node.box);
    g.geom.push_back(geom_features(node.box, frame_w, frame_h));
  };
  for (std::size_t i = 0; i < g.m; ++i) add_node(tracklets[i], i);
  for (std::size_t j = 0; j < g.n; ++j) add_node(detections[j], g.m + j);

  for (std::size_t i = 0; i < g.m; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      if (center_distance(g.boxes[i], g.boxes[g.detection_node(j)]) <=
          gate_px) {
        g.edges.emplace_back(i, j);
      }
    }
  }
  return g;
}

void compute_edge_weights(CandidateGraph& graph, const Model& model) {
  ScalarCtx<double> ctx;
  graph.edge_weights = initial_edge_weights(graph, model, ctx);
}

}  // namespace sinkmatch
