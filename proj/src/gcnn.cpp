#include "sinkmatch/gcnn.hpp"

namespace sinkmatch {

Matrix<double> gcn_forward(const CandidateGraph& graph, const Model& model) {
  if (graph.edge_weights.size() != graph.edges.size()) {
    throw DataError("gcn_forward: call compute_edge_weights first");
  }
  ScalarCtx<double> ctx;
  return gcn_forward_t<double>(graph, lift_graph(graph, ctx), model,
                               graph.edge_weights, /*update_edges=*/true, ctx);
}

}  // namespace sinkmatch
