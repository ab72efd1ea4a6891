#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sinkmatch/io.hpp"
#include "sinkmatch/train.hpp"

namespace sinkmatch {

/// Identity-labeled toy world with per-object embeddings; convertible to a
/// training dataset or serialized as MOT-style detection/ground-truth files
/// plus a matching embedding dump.
struct SyntheticScenario {
  std::map<int, std::vector<TrainObject>> frames;  // frame -> objects
  double frame_w = 800.0;
  double frame_h = 600.0;
};

/// n_ids identities on straight, slowly diverging paths, one detection per
/// identity per frame. Velocities are small enough that any same-identity
/// pair within a 45-frame window stays inside a 200 px gate. Embeddings come
/// from the identity-seeded generator with the given noise; noise 0 makes
/// every identity's embedding constant over time.
SyntheticScenario make_linear_scenario(int n_ids, int n_frames,
                                       std::size_t d_app, double noise,
                                       std::uint64_t seed);

/// Two identities walking toward each other along the same horizontal line,
/// overlapping mid-sequence: the closest thing to an occlusion this box
/// world has. Used for direction checks of the ablation variants.
SyntheticScenario make_crossing_scenario(int n_frames, std::size_t d_app,
                                         double noise, std::uint64_t seed);

/// MOT-format files for a scenario. Detections get confidence 1 and follow
/// ascending id order within each frame; the embedding dump is keyed by that
/// same in-frame order.
void write_scenario_detections(const SyntheticScenario& s,
                               const std::filesystem::path& path);
void write_scenario_gt(const SyntheticScenario& s,
                       const std::filesystem::path& path);
void write_scenario_embeddings(const SyntheticScenario& s,
                               const std::string& sequence,
                               const std::filesystem::path& path);

TrainDataset to_dataset(const SyntheticScenario& s);

/// Ground truth as a flat track table (for the evaluator).
std::vector<TrackRecord> scenario_gt_table(const SyntheticScenario& s);

}  // namespace sinkmatch
