#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sinkmatch/ad.hpp"
#include "sinkmatch/matrix.hpp"

namespace sinkmatch {

enum class Activation { kNone, kRelu };

/// Single affine map, optionally followed by ReLU. All metric learners in
/// the pipeline (f_edge, phi, f_affinity) are of this form; none has hidden
/// layers.
template <typename T>
struct LinearLayerT {
  Matrix<T> weights;   // out_dim x in_dim
  std::vector<T> bias;  // out_dim
  Activation activation = Activation::kNone;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }

  bool operator==(const LinearLayerT&) const = default;
};

using LinearLayer = LinearLayerT<double>;

/// activation(W x + b).
template <typename T>
std::vector<T> linear_forward(const LinearLayerT<T>& layer,
                              std::span<const T> x) {
  if (x.size() != layer.in_dim()) {
    throw DataError("linear_forward: input has length " +
                    std::to_string(x.size()) + ", layer expects " +
                    std::to_string(layer.in_dim()));
  }
  std::vector<T> out;
  out.reserve(layer.out_dim());
  for (std::size_t r = 0; r < layer.out_dim(); ++r) {
    T acc = layer.bias[r];
    for (std::size_t c = 0; c < x.size(); ++c) {
      acc += layer.weights(r, c) * x[c];
    }
    if (layer.activation == Activation::kRelu) acc = relu(acc);
    out.push_back(acc);
  }
  return out;
}

/// Feature dimensions of the model. d_app is the appearance-embedding width
/// (externally supplied), d_inter the width of the interaction features
/// produced by the final graph-convolution layer.
struct ModelDims {
  std::size_t d_app = 1024;
  std::size_t d_inter = 128;
  std::size_t gcn_layers = 2;

  std::size_t f_edge_in() const { return 2 * d_app + 2 * 4; }
  std::size_t phi_in() const { return 1 + 2 * d_inter; }

  bool operator==(const ModelDims&) const = default;
};

/// All learnable weights: the edge scorer f_edge, the graph-convolution
/// weight matrices (layer 1 maps d_app -> d_inter, later layers
/// d_inter -> d_inter, stored input-dim x output-dim for row-vector features),
/// the per-layer edge updater phi, and the affinity head f_affinity over
/// (cosine, IoU).
template <typename T>
struct ModelT {
  LinearLayerT<T> f_edge;
  std::vector<Matrix<T>> gcn_weights;
  LinearLayerT<T> phi;
  LinearLayerT<T> f_affinity;

  bool operator==(const ModelT&) const = default;
};

using Model = ModelT<double>;

/// Visits every tensor of the model in canonical order. The same order is
/// used for gradient readback, optimizer state, and serialization, so the
/// flat parameter index of a scalar is stable everywhere.
template <typename T, typename F>
void for_each_tensor(ModelT<T>& m, F&& f) {
  f("f_edge.weights", m.f_edge.weights.data(),
    std::vector<std::size_t>{m.f_edge.weights.rows(), m.f_edge.weights.cols()});
  f("f_edge.bias", m.f_edge.bias, std::vector<std::size_t>{m.f_edge.bias.size()});
  for (std::size_t k = 0; k < m.gcn_weights.size(); ++k) {
    f("gcn_weights[" + std::to_string(k) + "]", m.gcn_weights[k].data(),
      std::vector<std::size_t>{m.gcn_weights[k].rows(), m.gcn_weights[k].cols()});
  }
  f("phi.weights", m.phi.weights.data(),
    std::vector<std::size_t>{m.phi.weights.rows(), m.phi.weights.cols()});
  f("phi.bias", m.phi.bias, std::vector<std::size_t>{m.phi.bias.size()});
  f("f_affinity.weights", m.f_affinity.weights.data(),
    std::vector<std::size_t>{m.f_affinity.weights.rows(),
                             m.f_affinity.weights.cols()});
  f("f_affinity.bias", m.f_affinity.bias,
    std::vector<std::size_t>{m.f_affinity.bias.size()});
}

template <typename T, typename F>
void for_each_param(ModelT<T>& m, F&& f) {
  for_each_tensor(m, [&](const std::string&, auto& flat,
                         const std::vector<std::size_t>&) {
    for (auto& p : flat) f(p);
  });
}

template <typename T>
std::size_t param_count(const ModelT<T>& m) {
  std::size_t n = 0;
  for_each_param(const_cast<ModelT<T>&>(m), [&](const T&) { ++n; });
  return n;
}

/// Learnable parameters plus shape-congruent gradient slots. Forward passes
/// never touch grads; only train::accumulate_gradients writes them.
struct ParameterStore {
  ModelDims dims;
  Model params;
  Model grads;

  void zero_grads();
};

/// Model skeleton with the dims' shapes, zero-filled.
Model make_zero_model(const ModelDims& dims);

/// Deterministic initialization: weights uniform in [-a, a] with
/// a = sqrt(6 / (in_dim + out_dim)), biases zero.
ParameterStore init_params(const ModelDims& dims, std::uint64_t seed);

/// Binary checkpoint: little-endian fixed header (magic, version, dims,
/// shape table) followed by raw 64-bit floats. load(save(p)) == p bit-exactly.
void save_params(const ParameterStore& store, const std::filesystem::path& path);
ParameterStore load_params(const std::filesystem::path& path,
                           const ModelDims& expected_dims);

/// Lifts every parameter onto a tape as a differentiable input, in canonical
/// order, so tape gradients can be read back positionally.
ModelT<ad::Var> lift_to_tape(const Model& m, ad::Tape& tape);

/// Copies scale * d(loss)/d(param) from the tape into store.grads, adding to
/// what is already there (scale = 1/batch averages per-sample gradients).
/// `lifted` must come from lift_to_tape on the same store.
void accumulate_grads_from_tape(ParameterStore& store,
                                const ModelT<ad::Var>& lifted,
                                const ad::Tape& tape, double scale = 1.0);

}  // namespace sinkmatch
