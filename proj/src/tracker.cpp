#include "sinkmatch/tracker.hpp"

#include <utility>

namespace sinkmatch {

Tracker::Tracker(Model model, TrackerConfig config, PipelineConfig pipeline)
    : model_(std::move(model)),
      config_(config),
      pipeline_(pipeline) {
  if (config_.gate_px <= 0 || config_.s_thres <= 0 ||
      config_.min_confidence <= 0 || config_.max_lost_age <= 0) {
    throw DataError("tracker thresholds must be positive");
  }
}

std::vector<TrackRecord> Tracker::step(int frame_index,
                                       std::span<const Detection> detections) {
  std::vector<const Detection*> kept;
  for (const auto& det : detections) {
    if (det.confidence >= config_.min_confidence) kept.push_back(&det);
  }

  // Association first, with no state touched until the result is in hand.
  MatchResult result;
  if (!tracks_.empty() && !kept.empty()) {
    std::vector<GraphNode> tracklet_nodes, detection_nodes;
    tracklet_nodes.reserve(tracks_.size());
    detection_nodes.reserve(kept.size());
    for (const auto& t : tracks_) {
      tracklet_nodes.push_back({t.last_box, t.last_embedding});
    }
    for (const auto* d : kept) {
      detection_nodes.push_back({d->box, d->embedding});
    }
    const CandidateGraph graph =
        build_graph(tracklet_nodes, detection_nodes, config_.gate_px,
                    config_.frame_w, config_.frame_h);
    ScalarCtx<double> ctx;
    const Matrix<double> s_star =
        associate<double>(graph, model_, pipeline_, ctx);
    result = binarize_and_assign(s_star, config_.s_thres);
  } else {
    for (std::size_t i = 0; i < tracks_.size(); ++i) result.deaths.push_back(i);
    for (std::size_t j = 0; j < kept.size(); ++j) result.births.push_back(j);
  }

  std::vector<TrackRecord> records;
  std::vector<char> matched(tracks_.size(), 0);
  for (const auto& [i, j] : result.matches) {
    Tracklet& t = tracks_[i];
    const Detection& d = *kept[j];
    t.last_box = d.box;
    t.last_embedding = d.embedding;
    t.last_seen = frame_index;
    t.state = TrackState::kActive;
    t.age_lost = 0;
    matched[i] = 1;
    records.push_back(TrackRecord{frame_index, t.id, t.last_box});
  }

  std::vector<Tracklet> survivors;
  survivors.reserve(tracks_.size());
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    Tracklet& t = tracks_[i];
    if (!matched[i]) {
      t.state = TrackState::kLost;
      ++t.age_lost;
      if (t.age_lost > config_.max_lost_age) continue;  // dead: dropped here
    }
    survivors.push_back(std::move(t));
  }
  tracks_ = std::move(survivors);

  for (const std::size_t j : result.births) {
    Tracklet t;
    t.id = next_id_++;
    t.last_box = kept[j]->box;
    t.last_embedding = kept[j]->embedding;
    t.last_seen = frame_index;
    t.state = TrackState::kActive;
    t.age_lost = 0;
    records.push_back(TrackRecord{frame_index, t.id, t.last_box});
    tracks_.push_back(std::move(t));
  }
  return records;
}

std::vector<TrackRecord> run_sequence(
    const std::map<int, std::vector<ParsedDetection>>& detections,
    const EmbeddingProvider& embeddings, const std::string& sequence,
    const Model& model, const TrackerConfig& config,
    const PipelineConfig& pipeline) {
  std::vector<TrackRecord> table;
  if (detections.empty()) return table;

  Tracker tracker(model, config, pipeline);
  const int first = detections.begin()->first;
  const int last = detections.rbegin()->first;
  for (int frame = first; frame <= last; ++frame) {
    std::vector<Detection> dets;
    if (auto it = detections.find(frame); it != detections.end()) {
      dets.reserve(it->second.size());
      for (std::size_t k = 0; k < it->second.size(); ++k) {
        const ParsedDetection& pd = it->second[k];
        Detection d;
        d.box = pd.box;
        d.confidence = pd.confidence;
        d.embedding = embeddings.get(
            EmbeddingKey{sequence, frame, static_cast<int>(k)});
        if (d.embedding.dim() != embeddings.dim()) {
          throw DataError("embedding for frame " + std::to_string(frame) +
                          " det " + std::to_string(k) +
                          " has unexpected dimension");
        }
        dets.push_back(std::move(d));
      }
    }
    auto records = tracker.step(frame, dets);
    table.insert(table.end(), records.begin(), records.end());
  }
  return table;
}

}  // namespace sinkmatch
