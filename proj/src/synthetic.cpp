#include "sinkmatch/synthetic.hpp"

#include <cmath>
#include <fstream>

#include "sinkmatch/text.hpp"

namespace sinkmatch {

namespace {

std::uint64_t noise_seed_for(std::uint64_t seed, int id, int frame) {
  std::uint64_t h = seed;
  h = h * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(id);
  h = h * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(frame);
  return h;
}

TrainObject make_object(int id, double cx, double cy, std::size_t d_app,
                        double noise, std::uint64_t seed, int frame) {
  TrainObject obj;
  obj.id = id;
  obj.box = BoundingBox{cx, cy, 40.0, 80.0};
  obj.embedding = synthetic_identity_embedding(
      static_cast<std::uint64_t>(id), d_app, noise,
      noise_seed_for(seed, id, frame));
  return obj;
}

}  // namespace

SyntheticScenario make_linear_scenario(int n_ids, int n_frames,
                                       std::size_t d_app, double noise,
                                       std::uint64_t seed) {
  if (n_ids < 1 || n_frames < 1) {
    throw DataError("make_linear_scenario: counts must be positive");
  }
  SyntheticScenario s;
  for (int t = 1; t <= n_frames; ++t) {
    auto& objects = s.frames[t];
    for (int id = 1; id <= n_ids; ++id) {
      const int col = (id - 1) % 5;
      const int row = (id - 1) / 5;
      const double x0 = 90.0 + 140.0 * col;
      const double y0 = 90.0 + 130.0 * row;
      // ~2.2 px/frame: a 45-frame-old instance is still < 100 px away,
      // comfortably inside a 200 px gate.
      const double dx = (id % 2 == 0) ? -2.0 : 2.0;
      const double dy = 1.0;
      objects.push_back(make_object(id, x0 + dx * (t - 1), y0 + dy * (t - 1),
                                    d_app, noise, seed, t));
    }
  }
  return s;
}

SyntheticScenario make_crossing_scenario(int n_frames, std::size_t d_app,
                                         double noise, std::uint64_t seed) {
  if (n_frames < 2) {
    throw DataError("make_crossing_scenario: need at least 2 frames");
  }
  SyntheticScenario s;
  const double mid = 400.0;
  const double reach = 2.0 * n_frames;  // symmetric approach, 4 px/frame
  for (int t = 1; t <= n_frames; ++t) {
    auto& objects = s.frames[t];
    const double offset = 4.0 * (t - 1);
    objects.push_back(
        make_object(1, mid - reach + offset, 300.0, d_app, noise, seed, t));
    objects.push_back(
        make_object(2, mid + reach - offset, 300.0, d_app, noise, seed, t));
  }
  return s;
}

void write_scenario_detections(const SyntheticScenario& s,
                               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& [frame, objects] : s.frames) {
    for (const auto& obj : objects) {
      const auto c = obj.box.to_corners();
      out << frame << ",-1," << format_double(c.x1) << ","
          << format_double(c.y1) << "," << format_double(obj.box.w) << ","
          << format_double(obj.box.h) << ",1,-1,-1,-1\n";
    }
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_scenario_gt(const SyntheticScenario& s,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& [frame, objects] : s.frames) {
    for (const auto& obj : objects) {
      const auto c = obj.box.to_corners();
      out << frame << "," << obj.id << "," << format_double(c.x1) << ","
          << format_double(c.y1) << "," << format_double(obj.box.w) << ","
          << format_double(obj.box.h) << ",1,1,1\n";
    }
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_scenario_embeddings(const SyntheticScenario& s,
                               const std::string& sequence,
                               const std::filesystem::path& path) {
  std::size_t dim = 0;
  std::vector<std::pair<EmbeddingKey, AppearanceEmbedding>> records;
  for (const auto& [frame, objects] : s.frames) {
    for (std::size_t k = 0; k < objects.size(); ++k) {
      dim = objects[k].embedding.dim();
      records.emplace_back(
          EmbeddingKey{sequence, frame, static_cast<int>(k)},
          objects[k].embedding);
    }
  }
  write_embedding_file(path, dim, records);
}

TrainDataset to_dataset(const SyntheticScenario& s) {
  TrainDataset data;
  data.frames = s.frames;
  data.frame_w = s.frame_w;
  data.frame_h = s.frame_h;
  return data;
}

std::vector<TrackRecord> scenario_gt_table(const SyntheticScenario& s) {
  std::vector<TrackRecord> table;
  for (const auto& [frame, objects] : s.frames) {
    for (const auto& obj : objects) {
      table.push_back(TrackRecord{frame, obj.id, obj.box});
    }
  }
  return table;
}

}  // namespace sinkmatch
