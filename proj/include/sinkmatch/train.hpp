#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "sinkmatch/assoc.hpp"
#include "sinkmatch/graph.hpp"
#include "sinkmatch/params.hpp"

namespace sinkmatch {

inline constexpr double kPredictionClamp = 1e-7;

/// Supervision matrix for one frame pair, shaped like the augmented
/// assignment: o(i, j) = 1 iff tracklet i and detection j share an identity,
/// the slack column marks tracklets with no matching detection, the slack
/// row marks detections with no matching tracklet, and the corner is 0.
/// Duplicate ids within one side are rejected (inner rows/columns must sum
/// to at most 1).
Matrix<double> ground_truth_matrix(std::span<const int> tracklet_ids,
                                   std::span<const int> detection_ids);

/// One cell's (negated) weighted-BCE contribution with the prediction
/// clamped into [eps, 1-eps]: -(w * o * log(s) + (1 - o) * log(1 - s)).
double wbce_term(double s, double o, double w);

/// Weighted binary cross-entropy over the augmented matrix, excluding the
/// corner cell (its target mass has no binary label). Divides by the
/// included-cell count, or by m * n when strict_mn is set. Clamping pins
/// out-of-range predictions to a constant, so their gradient is zero rather
/// than undefined.
template <typename T>
T wbce_loss(const Matrix<T>& s_star, const Matrix<double>& o, double w,
            bool strict_mn, ScalarCtx<T> ctx) {
  using std::log;
  if (s_star.rows() != o.rows() || s_star.cols() != o.cols()) {
    throw DataError("wbce_loss: prediction and label shapes disagree");
  }
  if (s_star.rows() < 1 || s_star.cols() < 1) {
    throw DataError("wbce_loss: matrix must be augmented");
  }
  const std::size_t m = s_star.rows() - 1;
  const std::size_t n = s_star.cols() - 1;

  auto clamped = [&](const T& s) -> T {
    const double v = value_of(s);
    if (v < kPredictionClamp) return ctx.constant(kPredictionClamp);
    if (v > 1.0 - kPredictionClamp) return ctx.constant(1.0 - kPredictionClamp);
    return s;
  };

  T acc = ctx.constant(0.0);
  for (std::size_t i = 0; i <= m; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      if (i == m && j == n) continue;  // corner excluded
      const T s = clamped(s_star(i, j));
      if (o(i, j) != 0.0) {
        acc += log(s) * w;
      } else {
        acc += log(ctx.constant(1.0) - s);
      }
    }
  }
  const double count = strict_mn ? static_cast<double>(m * n)
                                 : static_cast<double>((m + 1) * (n + 1) - 1);
  if (count <= 0.0) throw DataError("wbce_loss: no included cells");
  return acc * (-1.0 / count);
}

struct TrainConfig {
  double lr = 2e-3;
  double weight_decay = 1e-3;
  int batch_size = 12;
  double loss_weight = 10.0;  // w, multiplies positive-label terms
  int lookback = 45;
  int epochs = 50;
  std::uint64_t seed = 0;
  double gate_px = 200.0;
  bool strict_mn_norm = false;
};

/// Adam first/second moments, one slot per parameter in canonical order.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
};

/// One Adam update from store.grads (beta1 = 0.9, beta2 = 0.999,
/// eps = 1e-8) plus decoupled weight decay: theta -= lr * wd * theta.
/// Gradients are left untouched; callers zero them between batches.
void adam_step(ParameterStore& store, AdamState& state, double lr,
               double weight_decay);

struct TrainObject {
  int id = 0;
  BoundingBox box;
  AppearanceEmbedding embedding;
};

/// Identity-labeled objects per frame. Any two frames within the lookback
/// window define a training pair: the earlier frame's objects act as
/// tracklets, the later frame's as detections.
struct TrainDataset {
  std::map<int, std::vector<TrainObject>> frames;
  double frame_w = 0.0;
  double frame_h = 0.0;
};

struct TrainResult {
  std::vector<double> epoch_mean_loss;
  std::size_t samples_per_epoch = 0;
  std::size_t skipped_frames = 0;  // per epoch: empty or no usable partner
};

/// Builds the supervision matrix and differentiable loss for one (previous
/// objects, current objects) pair and accumulates parameter gradients
/// scaled by grad_scale. Returns the loss value.
double sample_loss_and_grads(std::span<const TrainObject> prev,
                             std::span<const TrainObject> cur,
                             ParameterStore& store, const TrainConfig& cfg,
                             const PipelineConfig& pcfg, double frame_w,
                             double frame_h, double grad_scale);

/// Epochs of shuffled passes over all admissible frame pairs: every current
/// frame t is paired with every non-empty earlier frame within the lookback
/// window (equivalently, the uniform lookback-offset distribution enumerated
/// exactly), gradients are averaged over batches of cfg.batch_size, and one
/// optimizer step is taken per batch. Deterministic for a fixed seed.
TrainResult train_loop(const TrainDataset& data, ParameterStore& store,
                       const TrainConfig& cfg, const PipelineConfig& pcfg,
                       std::ostream* log = nullptr);

void write_loss_csv(const std::filesystem::path& path,
                    std::span<const double> epoch_mean_loss);

struct GradCheckConfig {
  std::size_t m = 2;
  std::size_t n = 2;
  ModelDims dims{.d_app = 8, .d_inter = 8, .gcn_layers = 2};
  std::uint64_t seed = 0;
  double fd_step = 1e-5;
  double threshold = 1e-4;
  double loss_weight = 10.0;
  // Test hook: index of an analytic gradient to corrupt before comparing,
  // proving the check can fail; -1 disables.
  long corrupt_index = -1;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t params_checked = 0;
  bool pass = false;
};

/// Compares the tape gradient of the full pipeline loss against central
/// finite differences, parameter by parameter, on a random instance.
/// Relative error uses max(1, |analytic|, |numeric|) as denominator.
GradCheckReport gradient_check(const GradCheckConfig& cfg,
                               const PipelineConfig& pcfg);

}  // namespace sinkmatch
