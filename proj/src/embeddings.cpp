#include "sinkmatch/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "sinkmatch/errors.hpp"
#include "sinkmatch/text.hpp"

namespace sinkmatch {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

// Stable across platforms, unlike std::hash; repeated lookups of one key
// must see the same noise regardless of call order.
std::uint64_t key_seed(std::uint64_t base, const EmbeddingKey& key) {
  std::uint64_t h = fnv1a(kFnvOffset, &base, sizeof(base));
  h = fnv1a(h, key.sequence.data(), key.sequence.size());
  std::int64_t frame = key.frame;
  std::int64_t det = key.det_index;
  h = fnv1a(h, &frame, sizeof(frame));
  h = fnv1a(h, &det, sizeof(det));
  return h;
}

}  // namespace

FileEmbeddingProvider::FileEmbeddingProvider(
    const std::filesystem::path& path, std::size_t expected_dim)
    : dim_(expected_dim), path_(path.string()) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path_);

  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path_ + ": missing header line");
  }
  auto header = split_fields(trim(line), ',');
  if (header.size() != 2) {
    throw DataError(path_ + " line 1: header must be `dim,count`");
  }
  long file_dim = parse_long(header[0], path_ + " line 1 field 1");
  long count = parse_long(header[1], path_ + " line 1 field 2");
  if (file_dim <= 0 || count < 0) {
    throw DataError(path_ + " line 1: dim must be positive, count >= 0");
  }
  if (static_cast<std::size_t>(file_dim) != expected_dim) {
    throw DataError(path_ + ": embedding dimension " +
                    std::to_string(file_dim) + " does not match configured " +
                    std::to_string(expected_dim));
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(trim(line), ',');
    const std::string where = path_ + " line " + std::to_string(line_no);
    if (fields.size() != 3 + static_cast<std::size_t>(file_dim)) {
      throw DataError(where + ": expected " + std::to_string(3 + file_dim) +
                      " fields, got " + std::to_string(fields.size()));
    }
    EmbeddingKey key;
    key.sequence = std::string(trim(fields[0]));
    key.frame = static_cast<int>(parse_long(fields[1], where + " field 2"));
    key.det_index =
        static_cast<int>(parse_long(fields[2], where + " field 3"));
    if (key.sequence.empty()) {
      throw DataError(where + ": empty sequence name");
    }
    AppearanceEmbedding emb;
    emb.values.resize(static_cast<std::size_t>(file_dim));
    for (std::size_t d = 0; d < emb.values.size(); ++d) {
      emb.values[d] = parse_double(
          fields[3 + d], where + " field " + std::to_string(4 + d));
      if (!std::isfinite(emb.values[d])) {
        throw DataError(where + ": non-finite embedding value");
      }
    }
    auto [it, inserted] = table_.emplace(std::move(key), std::move(emb));
    if (!inserted) {
      throw DataError(where + ": duplicate key " + it->first.sequence + "," +
                      std::to_string(it->first.frame) + "," +
                      std::to_string(it->first.det_index));
    }
  }
  if (table_.size() != static_cast<std::size_t>(count)) {
    throw DataError(path_ + ": header promises " + std::to_string(count) +
                    " records, file has " + std::to_string(table_.size()));
  }
}

AppearanceEmbedding FileEmbeddingProvider::get(const EmbeddingKey& key) const {
  auto it = table_.find(key);
  if (it == table_.end()) {
    throw DataError(path_ + ": no embedding for " + key.sequence + " frame " +
                    std::to_string(key.frame) + " det " +
                    std::to_string(key.det_index));
  }
  return it->second;
}

AppearanceEmbedding synthetic_identity_embedding(std::uint64_t identity_id,
                                                 std::size_t dim,
                                                 double noise_scale,
                                                 std::uint64_t noise_seed) {
  if (dim == 0) throw DataError("embedding dimension must be positive");
  AppearanceEmbedding emb;
  emb.values.resize(dim);

  std::mt19937_64 base_rng(identity_id);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double norm2 = 0.0;
  for (auto& v : emb.values) {
    v = gauss(base_rng);
    norm2 += v * v;
  }
  // A fresh Gaussian draw of dim >= 1 is zero with probability zero, but a
  // degenerate draw must not produce NaNs.
  double norm = std::sqrt(norm2);
  if (norm > 0.0) {
    for (auto& v : emb.values) v /= norm;
  } else {
    emb.values[0] = 1.0;
  }

  if (noise_scale != 0.0) {
    std::mt19937_64 noise_rng(noise_seed);
    std::normal_distribution<double> noise(0.0, noise_scale);
    for (auto& v : emb.values) v += noise(noise_rng);
  }
  return emb;
}

SyntheticEmbeddingProvider::SyntheticEmbeddingProvider(std::size_t dim,
                                                       double noise_scale,
                                                       std::uint64_t seed)
    : dim_(dim), noise_scale_(noise_scale), seed_(seed) {
  if (dim == 0) throw DataError("embedding dimension must be positive");
}

AppearanceEmbedding SyntheticEmbeddingProvider::get(
    const EmbeddingKey& key) const {
  return synthetic_identity_embedding(
      static_cast<std::uint64_t>(key.det_index), dim_, noise_scale_,
      key_seed(seed_, key));
}

void write_embedding_file(
    const std::filesystem::path& path, std::size_t dim,
    const std::vector<std::pair<EmbeddingKey, AppearanceEmbedding>>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << dim << "," << records.size() << "\n";
  for (const auto& [key, emb] : records) {
    if (emb.values.size() != dim) {
      throw DataError("embedding for " + key.sequence +
                      " has wrong dimension");
    }
    out << key.sequence << "," << key.frame << "," << key.det_index;
    for (double v : emb.values) out << "," << format_double(v);
    out << "\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace sinkmatch
