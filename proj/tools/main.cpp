#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sinkmatch/config.hpp"
#include "sinkmatch/errors.hpp"
#include "sinkmatch/io.hpp"
#include "sinkmatch/metrics.hpp"
#include "sinkmatch/synthetic.hpp"
#include "sinkmatch/text.hpp"
#include "sinkmatch/tracker.hpp"
#include "sinkmatch/train.hpp"

namespace {

using sinkmatch::DataError;
using sinkmatch::RunConfig;

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<double> l, s_slack, s_thres, gate_px, loss_weight, lr,
      min_confidence, weight_decay;
  std::optional<int> iters, lookback, layers, epochs, batch_size,
      max_lost_age, d_app, d_inter;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> frames_wh;
};

// Shared hyperparameter flags; every subcommand that runs the pipeline or
// training accepts the same set, mirroring the config file keys.
void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path,
                  "Config file of `key = value` lines (applied before flags)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--l", o.l, "Entropic sharpness of the kernel exp(l*s)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--iters", o.iters, "Normalization iterations (row+column)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--s-slack", o.s_slack,
                  "Score of the slack row/column absorbing births and deaths");
  cmd->add_option("--s-thres", o.s_thres,
                  "Assignment-mass threshold for hard matches")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--gate-px", o.gate_px,
                  "Max center distance (px) for a candidate pair")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--w", o.loss_weight,
                  "Loss weight on positive-label cells")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.lr, "Learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--weight-decay", o.weight_decay,
                  "Decoupled weight decay coefficient");
  cmd->add_option("--lookback", o.lookback,
                  "Max frame distance when sampling training pairs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--layers", o.layers, "Graph-convolution layer count")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", o.epochs, "Training epochs")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--batch-size", o.batch_size,
                  "Samples per optimizer step")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-lost-age", o.max_lost_age,
                  "Frames a lost tracklet stays matchable")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--min-conf", o.min_confidence,
                  "Detections below this confidence are ignored")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--d-app", o.d_app, "Appearance embedding dimension")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--d-inter", o.d_inter, "Interaction feature dimension")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Seed for all randomized behavior");
  cmd->add_option("--frames-wh", o.frames_wh,
                  "Frame size as WxH pixels, e.g. 1920x1080");
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg;
  if (o.config_path) cfg = sinkmatch::parse_config(*o.config_path, cfg);
  if (o.l) cfg.l = *o.l;
  if (o.iters) cfg.sinkhorn_iters = *o.iters;
  if (o.s_slack) cfg.s_slack = *o.s_slack;
  if (o.s_thres) cfg.s_thres = *o.s_thres;
  if (o.gate_px) cfg.gate_px = *o.gate_px;
  if (o.loss_weight) cfg.loss_weight = *o.loss_weight;
  if (o.lr) cfg.lr = *o.lr;
  if (o.weight_decay) cfg.weight_decay = *o.weight_decay;
  if (o.lookback) cfg.lookback = *o.lookback;
  if (o.layers) cfg.gcn_layers = static_cast<std::size_t>(*o.layers);
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  if (o.max_lost_age) cfg.max_lost_age = *o.max_lost_age;
  if (o.min_confidence) cfg.min_confidence = *o.min_confidence;
  if (o.d_app) cfg.d_app = static_cast<std::size_t>(*o.d_app);
  if (o.d_inter) cfg.d_inter = static_cast<std::size_t>(*o.d_inter);
  if (o.seed) cfg.seed = *o.seed;
  if (o.frames_wh) {
    const auto parts = sinkmatch::split_fields(*o.frames_wh, 'x');
    if (parts.size() != 2) {
      throw DataError("--frames-wh expects WxH, got \"" + *o.frames_wh +
                      "\"");
    }
    cfg.frame_w = sinkmatch::parse_double(parts[0], "--frames-wh width");
    cfg.frame_h = sinkmatch::parse_double(parts[1], "--frames-wh height");
    if (cfg.frame_w <= 0 || cfg.frame_h <= 0) {
      throw DataError("--frames-wh dimensions must be positive");
    }
  }
  return cfg;
}

int run_track(const Overrides& o, const std::string& detections,
              const std::string& embeddings, const std::string& params,
              const std::string& out, const std::string& sequence) {
  const RunConfig cfg = resolve_config(o);
  const sinkmatch::ParameterStore store =
      sinkmatch::load_params(params, cfg.dims());
  const sinkmatch::FileEmbeddingProvider provider(embeddings, cfg.d_app);
  const auto frames = sinkmatch::parse_detections(detections);
  const auto table = sinkmatch::run_sequence(
      frames, provider, sequence, store.params, cfg.tracker(), cfg.pipeline());
  sinkmatch::write_results(table, out);
  std::cout << "wrote " << table.size() << " records over " << frames.size()
            << " detection frames to " << out << "\n";
  return 0;
}

int run_train(const Overrides& o, const std::string& gt,
              const std::string& embeddings, const std::string& out,
              std::string loss_csv, const std::string& init,
              const std::string& sequence) {
  const RunConfig cfg = resolve_config(o);
  const auto gt_frames = sinkmatch::parse_ground_truth(gt);
  const sinkmatch::FileEmbeddingProvider provider(embeddings, cfg.d_app);

  sinkmatch::TrainDataset data;
  data.frame_w = cfg.frame_w;
  data.frame_h = cfg.frame_h;
  for (const auto& [frame, records] : gt_frames) {
    auto& objects = data.frames[frame];
    for (std::size_t k = 0; k < records.size(); ++k) {
      sinkmatch::TrainObject obj;
      obj.id = records[k].id;
      obj.box = records[k].box;
      obj.embedding = provider.get(
          {sequence, frame, static_cast<int>(k)});
      objects.push_back(std::move(obj));
    }
  }

  sinkmatch::ParameterStore store =
      init.empty() ? sinkmatch::init_params(cfg.dims(), cfg.seed)
                   : sinkmatch::load_params(init, cfg.dims());
  const auto result = sinkmatch::train_loop(data, store, cfg.train(),
                                            cfg.pipeline(), &std::cout);
  sinkmatch::save_params(store, out);
  if (loss_csv.empty()) loss_csv = out + ".loss.csv";
  sinkmatch::write_loss_csv(loss_csv, result.epoch_mean_loss);
  std::cout << "saved checkpoint to " << out << ", loss history to "
            << loss_csv << "\n";
  return 0;
}

int run_eval(const std::string& gt, const std::string& results, double iou_thr,
             const std::string& csv_out) {
  const auto gt_table =
      sinkmatch::flatten_frames(sinkmatch::parse_ground_truth(gt));
  const auto hyp_table = sinkmatch::parse_results(results);
  const auto report = sinkmatch::evaluate(gt_table, hyp_table, iou_thr);
  std::cout << sinkmatch::format_report(report);
  if (!csv_out.empty()) {
    std::ofstream f(csv_out);
    if (!f) throw DataError("cannot open " + csv_out + " for writing");
    f << sinkmatch::report_csv(report);
  }
  return 0;
}

int run_gradcheck(const Overrides& o, std::size_t m, std::size_t n,
                  long corrupt) {
  const RunConfig cfg = resolve_config(o);
  sinkmatch::GradCheckConfig gc;
  gc.m = m;
  gc.n = n;
  gc.dims = sinkmatch::ModelDims{.d_app = o.d_app ? cfg.d_app : 8,
                                 .d_inter = o.d_inter ? cfg.d_inter : 8,
                                 .gcn_layers = cfg.gcn_layers};
  gc.seed = cfg.seed;
  gc.loss_weight = cfg.loss_weight;
  gc.corrupt_index = corrupt;
  const auto report = sinkmatch::gradient_check(gc, cfg.pipeline());
  std::cout << "checked " << report.params_checked
            << " parameters, max relative error "
            << sinkmatch::format_double(report.max_rel_error)
            << " (worst at flat index " << report.worst_param << ")\n";
  if (!report.pass) {
    std::cerr << "gradient check FAILED (threshold "
              << sinkmatch::format_double(gc.threshold) << ")\n";
    return 3;
  }
  std::cout << "gradient check passed (threshold "
            << sinkmatch::format_double(gc.threshold) << ")\n";
  return 0;
}

int run_sinkhorn_demo(const std::string& matrix_path, double l, int iters) {
  std::ifstream in(matrix_path);
  if (!in) throw DataError("cannot open " + matrix_path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (auto& ch : line) {
      if (ch == ',') ch = ' ';
    }
    const auto where =
        matrix_path + " line " + std::to_string(line_no);
    std::vector<double> row;
    std::istringstream ss(line);
    std::string token;
    while (ss >> token) row.push_back(sinkmatch::parse_double(token, where));
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(where + ": ragged matrix");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(matrix_path + ": empty matrix");

  const std::size_t m = rows.size() - 1;
  const std::size_t n = rows.front().size() - 1;
  sinkmatch::Matrix<double> kernel(m + 1, n + 1, 0.0);
  for (std::size_t i = 0; i <= m; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      kernel(i, j) = std::exp(l * rows[i][j]);
      if (!std::isfinite(kernel(i, j))) {
        throw DataError("exp(l * score) overflows at cell (" +
                        std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
  sinkmatch::ScalarCtx<double> ctx;
  const auto s_star =
      sinkmatch::sinkhorn_scale(std::move(kernel), m, n, iters, ctx);

  std::cout << "normalized assignment (last row/column = slack):\n";
  for (std::size_t i = 0; i <= m; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      std::cout << (j ? " " : "") << sinkmatch::format_double(s_star(i, j));
    }
    std::cout << "\n";
  }
  std::cout << "row sums (targets 1 x" << m << ", " << n << "):";
  for (std::size_t i = 0; i <= m; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j <= n; ++j) sum += s_star(i, j);
    std::cout << " " << sinkmatch::format_double(sum);
  }
  std::cout << "\ncolumn sums (targets 1 x" << n << ", " << m << "):";
  for (std::size_t j = 0; j <= n; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i <= m; ++i) sum += s_star(i, j);
    std::cout << " " << sinkmatch::format_double(sum);
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online multi-object tracking by differentiable graph "
               "association"};
  app.require_subcommand(1);

  Overrides track_o, train_o, grad_o;

  auto* track = app.add_subcommand(
      "track", "Associate detections into identity-labeled tracks");
  std::string track_dets, track_emb, track_params, track_out,
      track_seq = "seq";
  track->add_option("--detections", track_dets, "MOT detection file")
      ->required()
      ->check(CLI::ExistingFile);
  track->add_option("--embeddings", track_emb,
                    "Appearance embedding dump covering every detection")
      ->required()
      ->check(CLI::ExistingFile);
  track->add_option("--params", track_params, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  track->add_option("--out", track_out, "Result file to write")->required();
  track->add_option("--sequence", track_seq,
                    "Sequence name used in embedding keys");
  add_override_flags(track, track_o);

  auto* train = app.add_subcommand(
      "train", "Fit the metric learners on identity-labeled frames");
  std::string train_gt, train_emb, train_out, train_csv, train_init,
      train_seq = "seq";
  train->add_option("--gt", train_gt, "Ground-truth file (MOT layout)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--embeddings", train_emb,
                    "Appearance embedding dump covering every ground-truth box")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Checkpoint file to write")
      ->required();
  train->add_option("--loss-csv", train_csv,
                    "Loss history CSV (default: <out>.loss.csv)");
  train->add_option("--init", train_init,
                    "Starting checkpoint (default: fresh initialization)")
      ->check(CLI::ExistingFile);
  train->add_option("--sequence", train_seq,
                    "Sequence name used in embedding keys");
  add_override_flags(train, train_o);

  auto* eval = app.add_subcommand(
      "eval", "Score a result file against ground truth (CLEAR-MOT)");
  std::string eval_gt, eval_results, eval_csv;
  double eval_iou = 0.5;
  eval->add_option("--gt", eval_gt, "Ground-truth file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--results", eval_results, "Tracker result file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--iou", eval_iou, "Match threshold (default 0.5)")
      ->check(CLI::Range(1e-9, 1.0));
  eval->add_option("--csv", eval_csv, "Also write the report as CSV here");

  auto* grad = app.add_subcommand(
      "gradcheck",
      "Compare pipeline gradients against central finite differences");
  std::size_t grad_m = 2, grad_n = 2;
  long grad_corrupt = -1;
  grad->add_option("--m", grad_m, "Tracklet count of the random instance")
      ->check(CLI::PositiveNumber);
  grad->add_option("--n", grad_n, "Detection count of the random instance")
      ->check(CLI::PositiveNumber);
  grad->add_option("--corrupt", grad_corrupt,
                   "Corrupt the analytic gradient at this flat index so the "
                   "check must fail (verifies the check itself)");
  add_override_flags(grad, grad_o);

  auto* demo = app.add_subcommand(
      "sinkhorn-demo",
      "Normalize a score matrix from a file and print achieved marginals");
  std::string demo_matrix;
  double demo_l = 5.0;
  int demo_iters = 8;
  demo->add_option("--matrix", demo_matrix,
                   "Text file: one augmented score row per line (last "
                   "row/column = slack)")
      ->required()
      ->check(CLI::ExistingFile);
  demo->add_option("--l", demo_l, "Entropic sharpness")
      ->check(CLI::PositiveNumber);
  demo->add_option("--iters", demo_iters, "Iterations (row+column passes)")
      ->check(CLI::PositiveNumber);

  int status = 0;
  track->callback([&] {
    status = run_track(track_o, track_dets, track_emb, track_params,
                       track_out, track_seq);
  });
  train->callback([&] {
    status = run_train(train_o, train_gt, train_emb, train_out, train_csv,
                       train_init, train_seq);
  });
  eval->callback(
      [&] { status = run_eval(eval_gt, eval_results, eval_iou, eval_csv); });
  grad->callback(
      [&] { status = run_gradcheck(grad_o, grad_m, grad_n, grad_corrupt); });
  demo->callback(
      [&] { status = run_sinkhorn_demo(demo_matrix, demo_l, demo_iters); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const sinkmatch::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sinkmatch::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return status;
}
