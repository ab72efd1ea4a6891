#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace sinkmatch {

/// Appearance feature vector for one detection or tracklet instance.
/// Embeddings are taken as-is: they are NOT renormalized on load. Cosine
/// similarity downstream is magnitude-free, but graph propagation sees raw
/// magnitudes, so any normalization is the producer's responsibility.
struct AppearanceEmbedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }

  bool operator==(const AppearanceEmbedding&) const = default;
};

struct EmbeddingKey {
  std::string sequence;
  int frame = 0;
  int det_index = 0;

  auto operator<=>(const EmbeddingKey&) const = default;
};

/// Source of appearance embeddings, keyed by (sequence, frame, detection
/// index within that frame's original file order). Immutable after
/// construction; concurrent reads are safe.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual AppearanceEmbedding get(const EmbeddingKey& key) const = 0;
  virtual std::size_t dim() const = 0;
};

/// Reads the embedding dump format: a header line `dim,count` followed by
/// one record per line, `sequence,frame,det_index,v1,...,vD`. A missing key
/// is an error, never a fabricated vector.
class FileEmbeddingProvider : public EmbeddingProvider {
 public:
  FileEmbeddingProvider(const std::filesystem::path& path,
                        std::size_t expected_dim);

  AppearanceEmbedding get(const EmbeddingKey& key) const override;
  std::size_t dim() const override { return dim_; }
  std::size_t size() const { return table_.size(); }

 private:
  std::size_t dim_;
  std::string path_;
  std::map<EmbeddingKey, AppearanceEmbedding> table_;
};

/// Unit-norm vector depending only on identity_id, plus Gaussian noise of
/// scale noise_scale drawn from the given seed. noise_scale = 0 reproduces
/// the base vector exactly, so two samples of one identity have cosine
/// similarity exactly 1.
AppearanceEmbedding synthetic_identity_embedding(std::uint64_t identity_id,
                                                 std::size_t dim,
                                                 double noise_scale,
                                                 std::uint64_t noise_seed);

/// Deterministic generator for tests and toy training: treats det_index as
/// the identity and derives per-key noise from (seed, key), so repeated
/// lookups of one key return identical vectors under any interleaving.
class SyntheticEmbeddingProvider : public EmbeddingProvider {
 public:
  SyntheticEmbeddingProvider(std::size_t dim, double noise_scale,
                             std::uint64_t seed);

  AppearanceEmbedding get(const EmbeddingKey& key) const override;
  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
  double noise_scale_;
  std::uint64_t seed_;
};

/// Writes the dump format read by FileEmbeddingProvider.
void write_embedding_file(
    const std::filesystem::path& path, std::size_t dim,
    const std::vector<std::pair<EmbeddingKey, AppearanceEmbedding>>& records);

}  // namespace sinkmatch
