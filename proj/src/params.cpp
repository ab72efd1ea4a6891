#include "sinkmatch/params.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace sinkmatch {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'M', 'C', 'K', 'P', 'T', '0', '0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  std::array<unsigned char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b.data()), b.size());
}

std::uint32_t read_u32(std::istream& is) {
  std::array<unsigned char, 4> b;
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!is) throw DataError("checkpoint truncated while reading header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  std::array<unsigned char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b.data()), b.size());
}

double read_f64(std::istream& is) {
  std::array<unsigned char, 8> b;
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!is) throw DataError("checkpoint truncated while reading payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

LinearLayer make_layer(std::size_t out, std::size_t in, Activation act) {
  LinearLayer l;
  l.weights = Matrix<double>(out, in, 0.0);
  l.bias.assign(out, 0.0);
  l.activation = act;
  return l;
}

}  // namespace

Model make_zero_model(const ModelDims& dims) {
  if (dims.d_app == 0 || dims.d_inter == 0 || dims.gcn_layers == 0) {
    throw DataError("model dimensions must be positive");
  }
  Model m;
  m.f_edge = make_layer(1, dims.f_edge_in(), Activation::kRelu);
  m.gcn_weights.emplace_back(dims.d_app, dims.d_inter, 0.0);
  for (std::size_t k = 1; k < dims.gcn_layers; ++k) {
    m.gcn_weights.emplace_back(dims.d_inter, dims.d_inter, 0.0);
  }
  m.phi = make_layer(1, dims.phi_in(), Activation::kRelu);
  m.f_affinity = make_layer(1, 2, Activation::kNone);
  return m;
}

void ParameterStore::zero_grads() {
  for_each_param(grads, [](double& g) { g = 0.0; });
}

ParameterStore init_params(const ModelDims& dims, std::uint64_t seed) {
  ParameterStore store;
  store.dims = dims;
  store.params = make_zero_model(dims);
  store.grads = make_zero_model(dims);

  std::mt19937_64 rng(seed);
  auto fill_uniform = [&](std::vector<double>& flat, std::size_t in,
                          std::size_t out) {
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-a, a);
    for (auto& w : flat) w = dist(rng);
  };

  fill_uniform(store.params.f_edge.weights.data(), dims.f_edge_in(), 1);
  for (auto& w : store.params.gcn_weights) {
    fill_uniform(w.data(), w.rows(), w.cols());
  }
  fill_uniform(store.params.phi.weights.data(), dims.phi_in(), 1);
  fill_uniform(store.params.f_affinity.weights.data(), 2, 1);
  return store;
}

void save_params(const ParameterStore& store,
                 const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path.string());

  os.write(kMagic.data(), kMagic.size());
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(store.dims.d_app));
  write_u32(os, static_cast<std::uint32_t>(store.dims.d_inter));
  write_u32(os, static_cast<std::uint32_t>(store.dims.gcn_layers));

  auto& model = const_cast<Model&>(store.params);
  std::uint32_t tensor_count = 0;
  for_each_tensor(model, [&](const std::string&, auto&, const auto&) {
    ++tensor_count;
  });
  write_u32(os, tensor_count);
  for_each_tensor(model, [&](const std::string&, auto&,
                             const std::vector<std::size_t>& shape) {
    write_u32(os, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) write_u32(os, static_cast<std::uint32_t>(d));
  });
  for_each_tensor(model, [&](const std::string&, auto& flat, const auto&) {
    for (double v : flat) write_f64(os, v);
  });
  if (!os) throw DataError("I/O failure writing checkpoint: " + path.string());
}

ParameterStore load_params(const std::filesystem::path& path,
                           const ModelDims& expected_dims) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path.string());

  std::array<char, 8> magic;
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) {
    throw DataError("not a parameter checkpoint: " + path.string());
  }
  const std::uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw DataError("checkpoint version " + std::to_string(version) +
                    " unsupported (expected " + std::to_string(kVersion) + ")");
  }
  ModelDims dims;
  dims.d_app = read_u32(is);
  dims.d_inter = read_u32(is);
  dims.gcn_layers = read_u32(is);
  if (!(dims == expected_dims)) {
    throw DataError("checkpoint dimensions (d_app=" + std::to_string(dims.d_app) +
                    ", d_inter=" + std::to_string(dims.d_inter) + ", layers=" +
                    std::to_string(dims.gcn_layers) +
                    ") do not match the configured model");
  }

  ParameterStore store;
  store.dims = dims;
  store.params = make_zero_model(dims);
  store.grads = make_zero_model(dims);

  const std::uint32_t tensor_count = read_u32(is);
  std::uint32_t expected_count = 0;
  for_each_tensor(store.params, [&](const std::string&, auto&, const auto&) {
    ++expected_count;
  });
  if (tensor_count != expected_count) {
    throw DataError("checkpoint shape table does not match the configured model");
  }
  for_each_tensor(store.params, [&](const std::string& name, auto&,
                                    const std::vector<std::size_t>& shape) {
    const std::uint32_t rank = read_u32(is);
    if (rank != shape.size()) {
      throw DataError("checkpoint shape mismatch for " + name);
    }
    for (auto d : shape) {
      if (read_u32(is) != d) {
        throw DataError("checkpoint shape mismatch for " + name);
      }
    }
  });
  for_each_tensor(store.params, [&](const std::string&, auto& flat, const auto&) {
    for (double& v : flat) v = read_f64(is);
  });
  // Anything beyond the declared payload means the file is not what the
  // header promised.
  char extra;
  is.read(&extra, 1);
  if (is.gcount() != 0) {
    throw DataError("checkpoint has trailing bytes: " + path.string());
  }
  return store;
}

ModelT<ad::Var> lift_to_tape(const Model& m, ad::Tape& tape) {
  ModelT<ad::Var> out;
  auto lift_layer = [&](const LinearLayer& l) {
    LinearLayerT<ad::Var> r;
    r.weights = Matrix<ad::Var>(l.weights.rows(), l.weights.cols());
    for (std::size_t i = 0; i < l.weights.data().size(); ++i) {
      r.weights.data()[i] = tape.input(l.weights.data()[i]);
    }
    r.bias.reserve(l.bias.size());
    for (double b : l.bias) r.bias.push_back(tape.input(b));
    r.activation = l.activation;
    return r;
  };
  out.f_edge = lift_layer(m.f_edge);
  for (const auto& w : m.gcn_weights) {
    Matrix<ad::Var> lw(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.data().size(); ++i) {
      lw.data()[i] = tape.input(w.data()[i]);
    }
    out.gcn_weights.push_back(std::move(lw));
  }
  out.phi = lift_layer(m.phi);
  out.f_affinity = lift_layer(m.f_affinity);
  return out;
}

void accumulate_grads_from_tape(ParameterStore& store,
                                const ModelT<ad::Var>& lifted,
                                const ad::Tape& tape, double scale) {
  std::vector<ad::Var> vars;
  vars.reserve(param_count(lifted));
  for_each_param(const_cast<ModelT<ad::Var>&>(lifted),
                 [&](ad::Var& v) { vars.push_back(v); });
  std::size_t i = 0;
  for_each_param(store.grads,
                 [&](double& g) { g += scale * tape.grad(vars[i++]); });
}

}  // namespace sinkmatch
