#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "sinkmatch/assoc.hpp"
#include "sinkmatch/embeddings.hpp"
#include "sinkmatch/io.hpp"

namespace sinkmatch {

struct TrackerConfig {
  double gate_px = 200.0;
  double s_thres = 0.2;
  double min_confidence = 0.5;
  int max_lost_age = 45;  // lost frames before a tracklet is dropped
  double frame_w = 1920.0;
  double frame_h = 1080.0;
};

enum class TrackState { kActive, kLost };

/// A persistent identity, represented by its last observed instance only.
/// Dead tracklets are removed from the tracker outright, so every stored
/// tracklet is matchable.
struct Tracklet {
  int id = 0;
  BoundingBox last_box;
  AppearanceEmbedding last_embedding;
  int last_seen = 0;
  TrackState state = TrackState::kActive;
  int age_lost = 0;  // frames since last match; >= 1 iff lost
};

struct Detection {
  BoundingBox box;
  double confidence = 1.0;
  AppearanceEmbedding embedding;
};

/// Online tracking state machine. One instance per sequence; ids start at 1
/// and are never reused within a run.
class Tracker {
 public:
  Tracker(Model model, TrackerConfig config, PipelineConfig pipeline);

  /// One frame: confidence filter, association over active and lost
  /// tracklets, then state updates (matches, losses, deaths, births).
  /// Association runs entirely before any state mutation, so a failure
  /// leaves the tracker untouched. Returns records for tracklets matched or
  /// born this frame.
  std::vector<TrackRecord> step(int frame_index,
                                std::span<const Detection> detections);

  const std::vector<Tracklet>& tracklets() const { return tracks_; }

 private:
  Model model_;
  TrackerConfig config_;
  PipelineConfig pipeline_;
  std::vector<Tracklet> tracks_;
  int next_id_ = 1;
};

/// Runs a fresh tracker over every frame from the first to the last key of
/// `detections` (absent frames count as empty), looking up one embedding per
/// detection under (sequence, frame, in-frame index).
std::vector<TrackRecord> run_sequence(
    const std::map<int, std::vector<ParsedDetection>>& detections,
    const EmbeddingProvider& embeddings, const std::string& sequence,
    const Model& model, const TrackerConfig& config,
    const PipelineConfig& pipeline);

}  // namespace sinkmatch
