#include <cmath>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "sinkmatch/params.hpp"
#include "test_support.hpp"

using namespace sinkmatch;
using testsupport::TempDir;

TEST_CASE("linear_forward with identity weights returns its input") {
  LinearLayer layer;
  layer.weights = identity_matrix(3);
  layer.bias = {0.0, 0.0, 0.0};
  const std::vector<double> x{1.5, -2.0, 0.25};
  CHECK(linear_forward<double>(layer, x) == x);
}

TEST_CASE("linear_forward applies bias and the declared activation") {
  LinearLayer layer;
  layer.weights = Matrix<double>(1, 2, 1.0);  // [[1, 1]]
  layer.bias = {0.5};

  const std::vector<double> pos{1.0, 2.0};
  const std::vector<double> neg{-1.0, -2.0};
  CHECK(linear_forward<double>(layer, pos).at(0) == doctest::Approx(3.5));
  CHECK(linear_forward<double>(layer, neg).at(0) == doctest::Approx(-2.5));

  layer.activation = Activation::kRelu;
  CHECK(linear_forward<double>(layer, pos).at(0) == doctest::Approx(3.5));
  CHECK(linear_forward<double>(layer, neg).at(0) == 0.0);
}

TEST_CASE("linear_forward rejects inputs of the wrong length") {
  LinearLayer layer;
  layer.weights = Matrix<double>(1, 2, 1.0);
  layer.bias = {0.0};
  const std::vector<double> x{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(linear_forward<double>(layer, x), DataError);
}

TEST_CASE("model dimensions derive the learner input widths") {
  const ModelDims dims{8, 4, 2};
  CHECK(dims.f_edge_in() == 2 * 8 + 8);
  CHECK(dims.phi_in() == 1 + 2 * 4);
}

TEST_CASE("make_zero_model has the right shapes, zeros, and activations") {
  const ModelDims dims{8, 4, 3};
  const Model m = make_zero_model(dims);
  CHECK(m.f_edge.weights.rows() == 1);
  CHECK(m.f_edge.weights.cols() == dims.f_edge_in());
  CHECK(m.f_edge.activation == Activation::kRelu);
  REQUIRE(m.gcn_weights.size() == 3);
  CHECK(m.gcn_weights[0].rows() == 8);
  CHECK(m.gcn_weights[0].cols() == 4);
  CHECK(m.gcn_weights[1].rows() == 4);
  CHECK(m.gcn_weights[1].cols() == 4);
  CHECK(m.gcn_weights[2].rows() == 4);
  CHECK(m.gcn_weights[2].cols() == 4);
  CHECK(m.phi.weights.rows() == 1);
  CHECK(m.phi.weights.cols() == dims.phi_in());
  CHECK(m.phi.activation == Activation::kRelu);
  CHECK(m.f_affinity.weights.rows() == 1);
  CHECK(m.f_affinity.weights.cols() == 2);
  CHECK(m.f_affinity.activation == Activation::kNone);
  for_each_param(const_cast<Model&>(m), [](double p) { CHECK(p == 0.0); });
}

TEST_CASE("param_count adds up every tensor") {
  const ModelDims dims{8, 4, 2};
  const Model m = make_zero_model(dims);
  // f_edge 24 + 1, gcn 32 + 16, phi 9 + 1, f_affinity 2 + 1.
  CHECK(param_count(m) == 86);
}

TEST_CASE("initialization is deterministic in the seed and keeps biases zero") {
  const ModelDims dims{8, 4, 2};
  const ParameterStore a = init_params(dims, 42);
  const ParameterStore b = init_params(dims, 42);
  const ParameterStore c = init_params(dims, 43);
  CHECK(a.params == b.params);
  CHECK(a.params != c.params);

  for (double v : a.params.f_edge.bias) CHECK(v == 0.0);
  for (double v : a.params.phi.bias) CHECK(v == 0.0);
  for (double v : a.params.f_affinity.bias) CHECK(v == 0.0);

  // Weight magnitudes respect the fan-based bound, and the gradients start
  // zeroed with the same shapes as the parameters.
  const double bound = std::sqrt(6.0 / (2 + 1));
  for (const double v : a.params.f_affinity.weights.data()) {
    CHECK(std::abs(v) <= bound);
  }
  CHECK(param_count(a.grads) == param_count(a.params));
  for_each_param(const_cast<Model&>(a.grads), [](double g) { CHECK(g == 0.0); });
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const ModelDims dims{8, 4, 2};
  ParameterStore store = init_params(dims, 7);
  // Scribble irregular values over the fresh initialization so the test also
  // covers non-uniform bit patterns.
  std::size_t i = 0;
  for_each_param(store.params, [&](double& p) {
    p = std::sin(static_cast<double>(++i)) * 1.7 - 0.3;
  });

  TempDir tmp;
  const auto path = tmp.file("model.bin");
  save_params(store, path);
  const ParameterStore back = load_params(path, dims);
  CHECK(back.params == store.params);
  CHECK(back.dims == dims);
}

TEST_CASE("loading validates dimensions and file integrity") {
  const ModelDims dims{8, 4, 2};
  ParameterStore store = init_params(dims, 7);
  TempDir tmp;
  const auto path = tmp.file("model.bin");
  save_params(store, path);

  SUBCASE("wrong expected dims") {
    CHECK_THROWS_AS(load_params(path, ModelDims{8, 4, 3}), DataError);
    CHECK_THROWS_AS(load_params(path, ModelDims{16, 4, 2}), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_params(tmp.file("nope.bin"), dims), DataError);
  }
  SUBCASE("truncated payload") {
    auto bytes = testsupport::read_file(path);
    testsupport::write_file(path, bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS_AS(load_params(path, dims), DataError);
  }
  SUBCASE("trailing garbage") {
    auto bytes = testsupport::read_file(path);
    testsupport::write_file(path, bytes + "xx");
    CHECK_THROWS_AS(load_params(path, dims), DataError);
  }
  SUBCASE("corrupted magic") {
    auto bytes = testsupport::read_file(path);
    bytes[0] = 'X';
    testsupport::write_file(path, bytes);
    CHECK_THROWS_AS(load_params(path, dims), DataError);
  }
}

TEST_CASE("tape lift and gradient readback follow the canonical order") {
  const ModelDims dims{2, 2, 1};
  ParameterStore store = init_params(dims, 11);

  ad::Tape tape;
  ModelT<ad::Var> lifted = lift_to_tape(store.params, tape);

  // Loss = sum of squared parameters, so d(loss)/dp = 2p for every p.
  ad::Var loss = tape.constant(0.0);
  for_each_param(lifted, [&](ad::Var& p) { loss += p * p; });
  tape.backward(loss);

  store.zero_grads();
  accumulate_grads_from_tape(store, lifted, tape, 0.5);  // 0.5 * 2p = p
  std::vector<double> params, grads;
  for_each_param(store.params, [&](double& p) { params.push_back(p); });
  for_each_param(store.grads, [&](double& g) { grads.push_back(g); });
  REQUIRE(params.size() == grads.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    CHECK(grads[k] == doctest::Approx(params[k]).epsilon(1e-13));
  }

  // A second accumulation adds instead of overwriting.
  accumulate_grads_from_tape(store, lifted, tape, 0.5);
  std::vector<double> doubled;
  for_each_param(store.grads, [&](double& g) { doubled.push_back(g); });
  for (std::size_t k = 0; k < params.size(); ++k) {
    CHECK(doubled[k] == doctest::Approx(2.0 * params[k]).epsilon(1e-13));
  }
}
