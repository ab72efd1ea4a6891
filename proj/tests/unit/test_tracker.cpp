#include <vector>

#include "doctest.h"
#include "sinkmatch/metrics.hpp"
#include "sinkmatch/synthetic.hpp"
#include "sinkmatch/tracker.hpp"
#include "test_support.hpp"

using namespace sinkmatch;

namespace {

// A model whose affinity is a pure appearance-cosine readout: propagation is
// appearance-preserving (no edge mixing, identity feature map), so matching
// quality is decided by the embeddings alone.
Model cosine_model() {
  return testsupport::make_handcrafted_model(ModelDims{8, 8, 1}, 0.0, 4.0,
                                             0.0, 0.0);
}

Detection det(int id, double cx, double cy, double confidence = 1.0) {
  Detection d;
  d.box = BoundingBox(cx, cy, 40, 80);
  d.confidence = confidence;
  d.embedding =
      synthetic_identity_embedding(static_cast<std::uint64_t>(id), 8, 0.0, 0);
  return d;
}

TrackerConfig small_frame_config() {
  TrackerConfig cfg;
  cfg.frame_w = 800;
  cfg.frame_h = 600;
  return cfg;
}

}  // namespace

TEST_CASE("a cold start births one identity per detection, in order") {
  Tracker tracker(cosine_model(), small_frame_config(), PipelineConfig{});
  const std::vector<Detection> dets{det(1, 100, 100), det(2, 300, 100),
                                    det(3, 500, 100)};
  const auto records = tracker.step(1, dets);
  REQUIRE(records.size() == 3);
  CHECK(records[0].id == 1);
  CHECK(records[1].id == 2);
  CHECK(records[2].id == 3);
  CHECK(records[1].box.cx == 300.0);
  REQUIRE(tracker.tracklets().size() == 3);
  for (const auto& t : tracker.tracklets()) {
    CHECK(t.state == TrackState::kActive);
    CHECK(t.last_seen == 1);
  }
}

TEST_CASE("small motion keeps identities across frames") {
  Tracker tracker(cosine_model(), small_frame_config(), PipelineConfig{});
  tracker.step(1, std::vector<Detection>{det(1, 100, 100), det(2, 300, 100)});
  const auto records =
      tracker.step(2, std::vector<Detection>{det(2, 304, 102), det(1, 105, 99)});
  REQUIRE(records.size() == 2);
  // Records arrive in tracklet order for matches; ids must follow appearance.
  for (const auto& r : records) {
    if (r.id == 1) CHECK(r.box.cx == 105.0);
    if (r.id == 2) CHECK(r.box.cx == 304.0);
  }
  CHECK(tracker.tracklets().size() == 2);
}

TEST_CASE("low-confidence detections are invisible to the tracker") {
  Tracker tracker(cosine_model(), small_frame_config(), PipelineConfig{});
  const auto records = tracker.step(
      1, std::vector<Detection>{det(1, 100, 100, 0.9), det(2, 300, 100, 0.3)});
  REQUIRE(records.size() == 1);
  CHECK(records[0].id == 1);
  CHECK(tracker.tracklets().size() == 1);
}

TEST_CASE("an empty frame loses tracklets without killing them") {
  Tracker tracker(cosine_model(), small_frame_config(), PipelineConfig{});
  tracker.step(1, std::vector<Detection>{det(1, 100, 100)});
  const auto records = tracker.step(2, std::vector<Detection>{});
  CHECK(records.empty());
  REQUIRE(tracker.tracklets().size() == 1);
  CHECK(tracker.tracklets()[0].state == TrackState::kLost);
  CHECK(tracker.tracklets()[0].age_lost == 1);

  SUBCASE("the lost tracklet re-matches under its old identity") {
    const auto back = tracker.step(3, std::vector<Detection>{det(1, 104, 102)});
    REQUIRE(back.size() == 1);
    CHECK(back[0].id == 1);
    CHECK(tracker.tracklets()[0].state == TrackState::kActive);
    CHECK(tracker.tracklets()[0].age_lost == 0);
  }
}

TEST_CASE("tracklets die after the lost-age budget and ids are not reused") {
  TrackerConfig cfg = small_frame_config();
  cfg.max_lost_age = 2;
  Tracker tracker(cosine_model(), cfg, PipelineConfig{});
  tracker.step(1, std::vector<Detection>{det(1, 100, 100)});
  tracker.step(2, std::vector<Detection>{});  // age 1
  tracker.step(3, std::vector<Detection>{});  // age 2, still held
  CHECK(tracker.tracklets().size() == 1);
  tracker.step(4, std::vector<Detection>{});  // age 3 > 2: dropped
  CHECK(tracker.tracklets().empty());

  const auto records = tracker.step(5, std::vector<Detection>{det(1, 100, 100)});
  REQUIRE(records.size() == 1);
  CHECK(records[0].id == 2);  // a fresh identity, never id 1 again
}

TEST_CASE("detections beyond the distance gate start new identities") {
  Tracker tracker(cosine_model(), small_frame_config(), PipelineConfig{});
  tracker.step(1, std::vector<Detection>{det(1, 100, 100)});
  const auto records = tracker.step(2, std::vector<Detection>{det(1, 500, 100)});
  REQUIRE(records.size() == 1);
  CHECK(records[0].id == 2);  // same appearance, but 400 px away
  REQUIRE(tracker.tracklets().size() == 2);
  CHECK(tracker.tracklets()[0].state == TrackState::kLost);
  CHECK(tracker.tracklets()[1].state == TrackState::kActive);
}

TEST_CASE("nonsensical tracker thresholds are rejected") {
  TrackerConfig cfg = small_frame_config();
  cfg.gate_px = 0.0;
  CHECK_THROWS_AS(Tracker(cosine_model(), cfg, PipelineConfig{}), DataError);
}

TEST_CASE("an empty detection table produces an empty result table") {
  SyntheticEmbeddingProvider provider(8, 0.0, 0);
  const auto table =
      run_sequence({}, provider, "seq", cosine_model(), small_frame_config(),
                   PipelineConfig{});
  CHECK(table.empty());
}

TEST_CASE("a clean synthetic world is tracked perfectly and deterministically") {
  const auto scenario = make_linear_scenario(3, 10, 8, 0.0, 1);
  const Model model = cosine_model();
  const TrackerConfig cfg = small_frame_config();

  const auto hyp = testsupport::run_scenario(scenario, model, cfg,
                                             PipelineConfig{});
  const auto gt = scenario_gt_table(scenario);
  const EvalReport report = evaluate(gt, hyp);
  CHECK(report.mota == 1.0);
  CHECK(report.idsw == 0);
  CHECK(report.fp == 0);
  CHECK(report.fn == 0);
  CHECK(report.mt == 3);
  CHECK(report.ml == 0);

  const auto again = testsupport::run_scenario(scenario, model, cfg,
                                               PipelineConfig{});
  CHECK(again == hyp);
}
