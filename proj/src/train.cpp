#include "sinkmatch/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "sinkmatch/text.hpp"

namespace sinkmatch {

Matrix<double> ground_truth_matrix(std::span<const int> tracklet_ids,
                                   std::span<const int> detection_ids) {
  const std::size_t m = tracklet_ids.size();
  const std::size_t n = detection_ids.size();
  std::set<int> seen;
  for (int id : tracklet_ids) {
    if (!seen.insert(id).second) {
      throw DataError("ground_truth_matrix: duplicate tracklet id " +
                      std::to_string(id));
    }
  }
  seen.clear();
  for (int id : detection_ids) {
    if (!seen.insert(id).second) {
      throw DataError("ground_truth_matrix: duplicate detection id " +
                      std::to_string(id));
    }
  }

  Matrix<double> o(m + 1, n + 1, 0.0);
  std::vector<char> det_matched(n, 0);
  for (std::size_t i = 0; i < m; ++i) {
    bool matched = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (tracklet_ids[i] == detection_ids[j]) {
        o(i, j) = 1.0;
        det_matched[j] = 1;
        matched = true;
        break;
      }
    }
    if (!matched) o(i, n) = 1.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!det_matched[j]) o(m, j) = 1.0;
  }
  return o;
}

double wbce_term(double s, double o, double w) {
  s = std::clamp(s, kPredictionClamp, 1.0 - kPredictionClamp);
  return -(w * o * std::log(s) + (1.0 - o) * std::log(1.0 - s));
}

void adam_step(ParameterStore& store, AdamState& state, double lr,
               double weight_decay) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;

  std::vector<double*> params;
  std::vector<const double*> grads;
  for_each_param(store.params, [&](double& p) { params.push_back(&p); });
  for_each_param(store.grads, [&](double& g) { grads.push_back(&g); });

  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw InternalError("adam_step: optimizer state does not match model");
  }

  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = *grads[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    *params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    *params[i] -= lr * weight_decay * *params[i];
  }
}

double sample_loss_and_grads(std::span<const TrainObject> prev,
                             std::span<const TrainObject> cur,
                             ParameterStore& store, const TrainConfig& cfg,
                             const PipelineConfig& pcfg, double frame_w,
                             double frame_h, double grad_scale) {
  std::vector<GraphNode> tracklets, detections;
  std::vector<int> tracklet_ids, detection_ids;
  tracklets.reserve(prev.size());
  detections.reserve(cur.size());
  for (const auto& obj : prev) {
    tracklets.push_back({obj.box, obj.embedding});
    tracklet_ids.push_back(obj.id);
  }
  for (const auto& obj : cur) {
    detections.push_back({obj.box, obj.embedding});
    detection_ids.push_back(obj.id);
  }

  const CandidateGraph g =
      build_graph(tracklets, detections, cfg.gate_px, frame_w, frame_h);
  const Matrix<double> o = ground_truth_matrix(tracklet_ids, detection_ids);

  ad::Tape tape;
  ScalarCtx<ad::Var> ctx{&tape};
  const ModelT<ad::Var> lifted = lift_to_tape(store.params, tape);
  const Matrix<ad::Var> s_star = associate<ad::Var>(g, lifted, pcfg, ctx);
  const ad::Var loss =
      wbce_loss<ad::Var>(s_star, o, cfg.loss_weight, cfg.strict_mn_norm, ctx);
  tape.backward(loss);
  accumulate_grads_from_tape(store, lifted, tape, grad_scale);
  return tape.value(loss);
}

TrainResult train_loop(const TrainDataset& data, ParameterStore& store,
                       const TrainConfig& cfg, const PipelineConfig& pcfg,
                       std::ostream* log) {
  if (data.frames.empty()) throw DataError("train_loop: empty dataset");
  if (cfg.epochs < 0) throw DataError("train_loop: negative epoch count");
  if (cfg.batch_size < 1 || cfg.lookback < 1) {
    throw DataError("train_loop: batch_size and lookback must be positive");
  }

  // One sample = (previous frame, current frame) with the previous frame
  // non-empty and at most `lookback` frames back. An epoch enumerates every
  // admissible pair once, which realizes the uniform distribution over the
  // admissible lookback offsets exactly instead of sampling it.
  struct Sample {
    int prev;
    int cur;
  };
  std::vector<Sample> samples;
  std::size_t skipped = 0;
  for (const auto& [t, objects] : data.frames) {
    if (objects.empty()) {
      ++skipped;
      if (log) *log << "skipping frame " << t << ": no objects\n";
      continue;
    }
    bool has_partner = false;
    for (const auto& [p, prev_objects] : data.frames) {
      if (p >= t) break;
      if (p < t - cfg.lookback) continue;
      if (prev_objects.empty()) continue;
      samples.push_back(Sample{p, t});
      has_partner = true;
    }
    if (!has_partner) {
      ++skipped;
      if (log) *log << "skipping frame " << t << ": no earlier frame within "
                    << cfg.lookback << "\n";
    }
  }
  if (samples.empty()) {
    throw DataError("train_loop: dataset has no trainable frame pairs");
  }

  TrainResult result;
  result.samples_per_epoch = samples.size();
  result.skipped_frames = skipped;

  std::mt19937_64 rng(cfg.seed);
  AdamState adam;
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double batch_scale = 1.0 / static_cast<double>(end - start);
      store.zero_grads();
      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = samples[order[b]];
        loss_sum += sample_loss_and_grads(
            data.frames.at(s.prev), data.frames.at(s.cur), store, cfg, pcfg,
            data.frame_w, data.frame_h, batch_scale);
      }
      adam_step(store, adam, cfg.lr, cfg.weight_decay);
    }
    const double mean = loss_sum / static_cast<double>(samples.size());
    result.epoch_mean_loss.push_back(mean);
    if (log) *log << "epoch " << (epoch + 1) << " mean_loss " << mean << "\n";
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path,
                    std::span<const double> epoch_mean_loss) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < epoch_mean_loss.size(); ++i) {
    out << (i + 1) << "," << format_double(epoch_mean_loss[i]) << "\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

namespace {

double forward_loss(const CandidateGraph& g, const Model& model,
                    const Matrix<double>& o, double loss_weight,
                    const PipelineConfig& pcfg) {
  ScalarCtx<double> ctx;
  const Matrix<double> s_star = associate<double>(g, model, pcfg, ctx);
  return wbce_loss<double>(s_star, o, loss_weight, /*strict_mn=*/false, ctx);
}

}  // namespace

GradCheckReport gradient_check(const GradCheckConfig& cfg,
                               const PipelineConfig& pcfg) {
  if (cfg.m == 0 || cfg.n == 0) {
    throw DataError("gradient_check: m and n must be positive");
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> center(10.0, 90.0);
  std::uniform_real_distribution<double> extent(5.0, 20.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto random_node = [&]() {
    GraphNode node;
    node.box = BoundingBox{center(rng), center(rng), extent(rng), extent(rng)};
    node.embedding.values.resize(cfg.dims.d_app);
    for (auto& v : node.embedding.values) v = gauss(rng);
    return node;
  };
  std::vector<GraphNode> tracklets, detections;
  std::vector<int> tracklet_ids, detection_ids;
  for (std::size_t i = 0; i < cfg.m; ++i) {
    tracklets.push_back(random_node());
    tracklet_ids.push_back(static_cast<int>(i + 1));
  }
  for (std::size_t j = 0; j < cfg.n; ++j) {
    detections.push_back(random_node());
    detection_ids.push_back(static_cast<int>(j + 1));
  }
  // Gate wide open: gradcheck exercises the dense pipeline, not the gate.
  const CandidateGraph g =
      build_graph(tracklets, detections, 1e9, 100.0, 100.0);
  const Matrix<double> o = ground_truth_matrix(tracklet_ids, detection_ids);

  ParameterStore store = init_params(cfg.dims, rng());
  store.zero_grads();

  {
    ad::Tape tape;
    ScalarCtx<ad::Var> ctx{&tape};
    const ModelT<ad::Var> lifted = lift_to_tape(store.params, tape);
    const Matrix<ad::Var> s_star = associate<ad::Var>(g, lifted, pcfg, ctx);
    const ad::Var loss = wbce_loss<ad::Var>(s_star, o, cfg.loss_weight,
                                            /*strict_mn=*/false, ctx);
    tape.backward(loss);
    accumulate_grads_from_tape(store, lifted, tape);
  }

  std::vector<double*> params;
  std::vector<double> analytic;
  for_each_param(store.params, [&](double& p) { params.push_back(&p); });
  for_each_param(store.grads, [&](double& gr) { analytic.push_back(gr); });
  if (cfg.corrupt_index >= 0) {
    const auto idx = static_cast<std::size_t>(cfg.corrupt_index);
    if (idx >= analytic.size()) {
      throw DataError("gradient_check: corrupt_index out of range");
    }
    analytic[idx] += 0.5 * (std::abs(analytic[idx]) + 1.0);
  }

  GradCheckReport report;
  report.params_checked = params.size();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = *params[i];
    *params[i] = orig + cfg.fd_step;
    const double up = forward_loss(g, store.params, o, cfg.loss_weight, pcfg);
    *params[i] = orig - cfg.fd_step;
    const double down =
        forward_loss(g, store.params, o, cfg.loss_weight, pcfg);
    *params[i] = orig;
    const double numeric = (up - down) / (2.0 * cfg.fd_step);
    const double rel =
        std::abs(analytic[i] - numeric) /
        std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = i;
    }
  }
  report.pass = report.max_rel_error < cfg.threshold;
  return report;
}

}  // namespace sinkmatch
