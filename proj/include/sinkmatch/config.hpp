#pragma once

#include <filesystem>
#include <string>

#include "sinkmatch/assoc.hpp"
#include "sinkmatch/tracker.hpp"
#include "sinkmatch/train.hpp"

namespace sinkmatch {

/// Every runtime hyperparameter, flat. Defaults are the reference operating
/// point; a config file (`key = value` lines, `#` comments) and CLI flags
/// override them. Unknown or duplicate keys are rejected.
struct RunConfig {
  std::size_t d_app = 1024;
  std::size_t d_inter = 128;
  std::size_t gcn_layers = 2;

  double s_slack = 0.2;
  double l = 5.0;
  int sinkhorn_iters = 8;
  bool use_edges = true;
  bool use_iou = true;

  double s_thres = 0.2;
  double gate_px = 200.0;
  double min_confidence = 0.5;
  int max_lost_age = 45;

  double lr = 2e-3;
  double weight_decay = 1e-3;
  int batch_size = 12;
  double loss_weight = 10.0;
  int lookback = 45;
  int epochs = 50;
  std::uint64_t seed = 0;
  std::string loss_norm = "augmented";  // or "strict-mn"

  double frame_w = 1920.0;
  double frame_h = 1080.0;

  ModelDims dims() const;
  PipelineConfig pipeline() const;
  TrackerConfig tracker() const;
  TrainConfig train() const;
};

/// Applies `key = value` lines from the file on top of `base`.
RunConfig parse_config(const std::filesystem::path& path,
                       const RunConfig& base = RunConfig{});

/// Applies a single key/value pair (shared by the file parser and CLI
/// overrides). Throws DataError for unknown keys or unparseable values.
void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value);

}  // namespace sinkmatch
