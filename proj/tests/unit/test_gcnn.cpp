#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sinkmatch/gcnn.hpp"
#include "sinkmatch/params.hpp"
#include "test_support.hpp"

using namespace sinkmatch;
using testsupport::dense_gcn_reference;
using testsupport::edge_weights_reference;
using testsupport::make_handcrafted_model;
using testsupport::random_graph;

namespace {

CandidateGraph graph_of(std::vector<GraphNode> tracklets,
                        std::vector<GraphNode> dets, double gate = 1e9) {
  return build_graph(tracklets, dets, gate, 800, 600);
}

GraphNode node(double cx, double cy, std::vector<double> emb) {
  return GraphNode{BoundingBox(cx, cy, 20, 40),
                   AppearanceEmbedding{std::move(emb)}};
}

void check_matrices_close(const Matrix<double>& a, const Matrix<double>& b,
                          double tol) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      CHECK(a(i, j) == doctest::Approx(b(i, j)).epsilon(tol).scale(1.0));
    }
  }
}

}  // namespace

TEST_CASE("an isolated node under identity weights keeps its features") {
  auto g = graph_of({node(50, 50, {0.5, -0.25})}, {});
  const ModelDims dims{2, 2, 1};
  const Model m = make_handcrafted_model(dims);
  compute_edge_weights(g, m);

  // One layer: the final layer has no rectifier, tau = 1, W = I.
  const auto h1 = gcn_forward(g, m);
  CHECK(h1(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(h1(0, 1) == doctest::Approx(-0.25).epsilon(1e-14));

  // Two layers: the hidden layer rectifies, the final one is affine.
  const Model m2 = make_handcrafted_model(ModelDims{2, 2, 2});
  const auto h2 = gcn_forward(g, m2);
  CHECK(h2(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(h2(0, 1) == 0.0);
}

TEST_CASE("zero edge weights stop all feature leakage between nodes") {
  const ModelDims dims{2, 2, 1};
  const Model m = make_handcrafted_model(dims);  // zero f_edge: z = 0

  auto g1 = graph_of({node(100, 100, {1.0, 2.0})}, {node(110, 100, {9.0, 9.0})});
  auto g2 = graph_of({node(100, 100, {1.0, 2.0})}, {node(110, 100, {-4.0, 7.0})});
  compute_edge_weights(g1, m);
  compute_edge_weights(g2, m);
  REQUIRE(g1.edge_weights == std::vector<double>{0.0});

  const auto h1 = gcn_forward(g1, m);
  const auto h2 = gcn_forward(g2, m);
  // The tracklet row ignores the detection's features entirely.
  CHECK(h1(0, 0) == h2(0, 0));
  CHECK(h1(0, 1) == h2(0, 1));
  CHECK(h1(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(h1(0, 1) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("a single edge of weight three mixes features 1:3") {
  // tau = 1 + 3 on both endpoints, so the self coefficient is 1/4 and the
  // cross coefficient 3 * (1/2) * (1/2) = 3/4.
  const ModelDims dims{2, 2, 1};
  Model m = make_handcrafted_model(dims, /*edge_bias=*/3.0);
  auto g = graph_of({node(100, 100, {1.0, 0.0})}, {node(110, 100, {0.0, 1.0})});
  compute_edge_weights(g, m);
  REQUIRE(g.edge_weights.size() == 1);
  CHECK(g.edge_weights[0] == doctest::Approx(3.0).epsilon(1e-14));

  const auto h = gcn_forward(g, m);
  CHECK(h(0, 0) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(h(0, 1) == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(h(1, 0) == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(h(1, 1) == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("edge updates evaluate phi on the freshly propagated features") {
  const ModelDims dims{2, 2, 1};
  const std::vector<double> hi{0.5, 1.0};
  const std::vector<double> hj{2.0, -1.0};

  SUBCASE("zero phi clamps to zero") {
    const Model m = make_zero_model(dims);
    CHECK(edge_update<double>(0.7, hi, hj, m.phi) == 0.0);
  }
  SUBCASE("pass-through phi keeps the previous weight") {
    const Model m = make_handcrafted_model(dims);
    CHECK(edge_update<double>(0.7, hi, hj, m.phi) ==
          doctest::Approx(0.7).epsilon(1e-14));
  }
  SUBCASE("random phi agrees with the independent affine evaluation") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Model m = make_zero_model(dims);
    for (auto& w : m.phi.weights.data()) w = u(rng);
    m.phi.bias[0] = u(rng);
    std::vector<double> x{0.7};
    x.insert(x.end(), hi.begin(), hi.end());
    x.insert(x.end(), hj.begin(), hj.end());
    const double expected = testsupport::affine_reference(m.phi, x).at(0);
    CHECK(edge_update<double>(0.7, hi, hj, m.phi) ==
          doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("initial edge weights match the independent reference") {
  std::mt19937_64 rng(11);
  auto g = random_graph(3, 2, 4, rng);
  const ParameterStore store = init_params(ModelDims{4, 3, 2}, 5);
  compute_edge_weights(g, store.params);
  const auto ref = edge_weights_reference(g, store.params);
  REQUIRE(g.edge_weights.size() == ref.size());
  for (std::size_t e = 0; e < ref.size(); ++e) {
    CHECK(g.edge_weights[e] ==
          doctest::Approx(ref[e]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("indistinguishable nodes end with identical interaction features") {
  const std::vector<double> emb{0.3, -0.1, 0.7, 0.2};
  const ParameterStore store = init_params(ModelDims{4, 3, 2}, 21);

  SUBCASE("balanced graph: every node is interchangeable") {
    // Same box and embedding everywhere and both sides the same size: every
    // node has the same degree and an identical neighborhood, so all rows of
    // the propagated features must coincide.
    std::vector<GraphNode> tracklets(2, node(100, 100, emb));
    std::vector<GraphNode> dets(2, node(100, 100, emb));
    auto g = graph_of(std::move(tracklets), std::move(dets));
    compute_edge_weights(g, store.params);
    const auto h = gcn_forward(g, store.params);
    for (std::size_t i = 1; i < h.rows(); ++i) {
      for (std::size_t c = 0; c < h.cols(); ++c) {
        CHECK(h(i, c) == doctest::Approx(h(0, c)).epsilon(1e-12).scale(1.0));
      }
    }
  }

  SUBCASE("unbalanced graph: nodes on the same side are interchangeable") {
    // With 2 tracklets and 3 detections the two sides have different degrees,
    // so the degree normalization separates them — but permuting nodes within
    // one side must not change anything.
    std::vector<GraphNode> tracklets(2, node(100, 100, emb));
    std::vector<GraphNode> dets(3, node(100, 100, emb));
    auto g = graph_of(std::move(tracklets), std::move(dets));
    compute_edge_weights(g, store.params);
    const auto h = gcn_forward(g, store.params);
    for (std::size_t c = 0; c < h.cols(); ++c) {
      CHECK(h(1, c) == doctest::Approx(h(0, c)).epsilon(1e-12).scale(1.0));
      CHECK(h(3, c) == doctest::Approx(h(2, c)).epsilon(1e-12).scale(1.0));
      CHECK(h(4, c) == doctest::Approx(h(2, c)).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("propagation matches the dense-adjacency reference") {
  std::mt19937_64 rng(29);
  SUBCASE("fully connected 2x2, two layers") {
    auto g = random_graph(2, 2, 4, rng);
    const ParameterStore store = init_params(ModelDims{4, 3, 2}, 9);
    compute_edge_weights(g, store.params);
    const auto expected = dense_gcn_reference(
        g, store.params, edge_weights_reference(g, store.params), true);
    check_matrices_close(gcn_forward(g, store.params), expected, 1e-10);
  }
  SUBCASE("gated 3x2, three layers") {
    bool saw_gated = false;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      std::mt19937_64 grng(100 + seed);
      auto g = random_graph(3, 2, 4, grng, /*gate_px=*/45.0);
      saw_gated = saw_gated || g.edges.size() < 6;
      const ParameterStore store = init_params(ModelDims{4, 3, 3}, seed);
      compute_edge_weights(g, store.params);
      const auto expected = dense_gcn_reference(
          g, store.params, edge_weights_reference(g, store.params), true);
      check_matrices_close(gcn_forward(g, store.params), expected, 1e-10);
    }
    CHECK(saw_gated);  // the gate actually removed edges in some instance
  }
  SUBCASE("edgeless graph") {
    auto g = random_graph(2, 2, 4, rng, /*gate_px=*/1e-6);
    REQUIRE(g.edges.empty());
    const ParameterStore store = init_params(ModelDims{4, 3, 2}, 13);
    compute_edge_weights(g, store.params);
    const auto expected = dense_gcn_reference(g, store.params, {}, true);
    check_matrices_close(gcn_forward(g, store.params), expected, 1e-10);
  }
}

TEST_CASE("propagation validates its inputs") {
  std::mt19937_64 rng(31);
  auto g = random_graph(1, 1, 4, rng);
  ScalarCtx<double> ctx;

  SUBCASE("missing edge weights") {
    const ParameterStore store = init_params(ModelDims{4, 3, 2}, 1);
    CHECK_THROWS_AS(gcn_forward(g, store.params), DataError);
  }
  SUBCASE("wrong initial edge weight count") {
    const ParameterStore store = init_params(ModelDims{4, 3, 2}, 1);
    const std::vector<double> z(5, 0.0);
    CHECK_THROWS_AS(gcn_forward_t<double>(g, lift_graph(g, ctx), store.params,
                                          z, true, ctx),
                    DataError);
  }
  SUBCASE("layerless model") {
    Model m = make_zero_model(ModelDims{4, 3, 2});
    m.gcn_weights.clear();
    compute_edge_weights(g, m);
    CHECK_THROWS_AS(gcn_forward(g, m), DataError);
  }
  SUBCASE("feature width disagreeing with the first layer") {
    const ParameterStore store = init_params(ModelDims{6, 3, 2}, 1);
    Model wrong = store.params;
    wrong.f_edge.weights = Matrix<double>(1, 2 * 4 + 8, 0.0);
    wrong.f_edge.bias = {0.0};
    compute_edge_weights(g, wrong);
    CHECK_THROWS_AS(gcn_forward(g, wrong), DataError);
  }
}
