#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "sinkmatch/config.hpp"
#include "sinkmatch/synthetic.hpp"
#include "sinkmatch/text.hpp"
#include "test_support.hpp"

using namespace sinkmatch;
using testsupport::TempDir;
using testsupport::read_file;
using testsupport::write_file;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::string& args, const TempDir& tmp,
                  const std::string& log_name) {
  const auto log = tmp.path() / log_name;
  const std::string cmd = std::string("\"") + SINKMATCH_CLI_PATH + "\" " +
                          args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = read_file(log);
  return r;
}

// A checkpoint whose affinity is a pure appearance-cosine readout.
void write_cosine_checkpoint(const ModelDims& dims,
                             const std::filesystem::path& path) {
  ParameterStore store{dims, testsupport::make_handcrafted_model(dims),
                       make_zero_model(dims)};
  save_params(store, path);
}

std::vector<double> csv_losses(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<double> out;
  std::size_t pos = text.find('\n');  // skip the header line
  REQUIRE(pos != std::string::npos);
  while (pos + 1 < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::size_t eol = text.find('\n', pos + 1);
    REQUIRE(comma != std::string::npos);
    REQUIRE(eol != std::string::npos);
    out.push_back(parse_double(text.substr(comma + 1, eol - comma - 1),
                               "loss csv"));
    pos = eol;
  }
  return out;
}

}  // namespace

TEST_CASE("help lists every subcommand and exits cleanly") {
  TempDir tmp;
  const auto r = run_cli("--help", tmp, "help.log");
  CHECK(r.exit_code == 0);
  for (const char* name :
       {"track", "train", "eval", "gradcheck", "sinkhorn-demo"}) {
    CHECK(r.output.find(name) != std::string::npos);
  }
}

TEST_CASE("a bare invocation is a usage error") {
  TempDir tmp;
  CHECK(run_cli("", tmp, "bare.log").exit_code == 1);
}

TEST_CASE("missing input files are reported by name before any work") {
  TempDir tmp;
  const auto r = run_cli(
      "eval --gt \"" + (tmp.path() / "absent_gt.txt").string() +
          "\" --results \"" + (tmp.path() / "absent_res.txt").string() + "\"",
      tmp, "missing.log");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("absent_gt.txt") != std::string::npos);
}

TEST_CASE("the normalization demo balances a symmetric score matrix") {
  TempDir tmp;
  const auto matrix = tmp.file("scores.txt");
  write_file(matrix, "0,0\n0,0\n");
  const auto r =
      run_cli("sinkhorn-demo --matrix \"" + matrix.string() + "\"", tmp,
              "demo.log");
  CHECK(r.exit_code == 0);
  // All four kernel entries are equal, so every cell settles at one half.
  CHECK(r.output.find("0.5 0.5") != std::string::npos);
  CHECK(r.output.find("row sums") != std::string::npos);
  CHECK(r.output.find("column sums") != std::string::npos);
}

TEST_CASE("the normalization demo rejects ragged input") {
  TempDir tmp;
  const auto matrix = tmp.file("ragged.txt");
  write_file(matrix, "0 0 0\n0 0\n");
  const auto r = run_cli(
      "sinkhorn-demo --matrix \"" + matrix.string() + "\"", tmp, "ragged.log");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("ragged") != std::string::npos);
}

TEST_CASE("the gradient check passes by default and fails when sabotaged") {
  TempDir tmp;
  SUBCASE("default instance") {
    const auto r = run_cli("gradcheck", tmp, "grad.log");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("gradient check passed") != std::string::npos);
  }
  SUBCASE("single tracklet and detection") {
    const auto r = run_cli("gradcheck --m 1 --n 1 --seed 3", tmp, "grad11.log");
    CHECK(r.exit_code == 0);
  }
  SUBCASE("a corrupted analytic gradient is caught") {
    const auto r = run_cli("gradcheck --corrupt 3", tmp, "gradbad.log");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("FAILED") != std::string::npos);
  }
}

TEST_CASE("tracking a clean synthetic sequence is perfect and reproducible") {
  TempDir tmp;
  const auto scenario = make_linear_scenario(3, 10, 8, 0.0, 1);
  const auto dets = tmp.file("dets.txt");
  const auto emb = tmp.file("embeddings.txt");
  const auto gt = tmp.file("gt.txt");
  const auto ckpt = tmp.file("model.ckpt");
  write_scenario_detections(scenario, dets);
  write_scenario_embeddings(scenario, "seq", emb);
  write_scenario_gt(scenario, gt);
  write_cosine_checkpoint(ModelDims{8, 8, 1}, ckpt);

  const std::string common = " --d-app 8 --d-inter 8 --layers 1"
                             " --frames-wh 800x600";
  const auto out1 = tmp.file("run1.txt");
  const auto r1 = run_cli("track --detections \"" + dets.string() +
                              "\" --embeddings \"" + emb.string() +
                              "\" --params \"" + ckpt.string() +
                              "\" --out \"" + out1.string() + "\"" + common,
                          tmp, "track1.log");
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.output.find("wrote") != std::string::npos);

  const auto out2 = tmp.file("run2.txt");
  const auto r2 = run_cli("track --detections \"" + dets.string() +
                              "\" --embeddings \"" + emb.string() +
                              "\" --params \"" + ckpt.string() +
                              "\" --out \"" + out2.string() + "\"" + common,
                          tmp, "track2.log");
  REQUIRE(r2.exit_code == 0);
  CHECK(read_file(out1) == read_file(out2));

  SUBCASE("the scored result is flawless") {
    const auto r = run_cli("eval --gt \"" + gt.string() + "\" --results \"" +
                               out1.string() + "\"",
                           tmp, "eval.log");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("MOTA        1\n") != std::string::npos);
    CHECK(r.output.find("IDSW        0") != std::string::npos);
  }
}

TEST_CASE("malformed detection rows abort tracking with a location") {
  TempDir tmp;
  const auto dets = tmp.file("dets.txt");
  write_file(dets, "1,-1,10,20,30,40,0.9,-1,-1,-1\nnot,a,row\n");
  const auto emb = tmp.file("emb.txt");
  const auto scenario = make_linear_scenario(1, 1, 8, 0.0, 1);
  write_scenario_embeddings(scenario, "seq", emb);
  const auto ckpt = tmp.file("model.ckpt");
  write_cosine_checkpoint(ModelDims{8, 8, 1}, ckpt);

  const auto r = run_cli("track --detections \"" + dets.string() +
                             "\" --embeddings \"" + emb.string() +
                             "\" --params \"" + ckpt.string() + "\" --out \"" +
                             tmp.file("out.txt").string() +
                             "\" --d-app 8 --d-inter 8 --layers 1",
                         tmp, "badtrack.log");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("line 2") != std::string::npos);
}

TEST_CASE("training runs end to end, reproducibly, and reduces the loss") {
  TempDir tmp;
  const auto scenario = make_linear_scenario(2, 6, 8, 0.0, 3);
  const auto gt = tmp.file("gt.txt");
  const auto emb = tmp.file("emb.txt");
  write_scenario_gt(scenario, gt);
  write_scenario_embeddings(scenario, "seq", emb);

  const std::string common =
      " --gt \"" + gt.string() + "\" --embeddings \"" + emb.string() +
      "\" --d-app 8 --d-inter 8 --layers 1 --frames-wh 800x600"
      " --lookback 3 --batch-size 4 --seed 11";

  const auto ck1 = tmp.file("a.ckpt");
  const auto csv1 = tmp.file("a.loss.csv");
  const auto r1 = run_cli("train --out \"" + ck1.string() + "\" --loss-csv \"" +
                              csv1.string() + "\" --epochs 10" + common,
                          tmp, "train1.log");
  REQUIRE(r1.exit_code == 0);
  const auto losses = csv_losses(csv1);
  REQUIRE(losses.size() == 10);
  CHECK(losses.back() < losses.front());

  SUBCASE("the checkpoint loads back under the declared shape") {
    const ParameterStore store = load_params(ck1, ModelDims{8, 8, 1});
    CHECK(param_count(store.params) > 0);
  }
  SUBCASE("the same seed reproduces the checkpoint byte for byte") {
    const auto ck2 = tmp.file("b.ckpt");
    const auto r2 =
        run_cli("train --out \"" + ck2.string() + "\" --loss-csv \"" +
                    tmp.file("b.loss.csv").string() + "\" --epochs 10" + common,
                tmp, "train2.log");
    REQUIRE(r2.exit_code == 0);
    CHECK(read_file(ck1) == read_file(ck2));
  }
  SUBCASE("zero epochs copy the initial checkpoint through") {
    const auto ck3 = tmp.file("c.ckpt");
    const auto r3 = run_cli(
        "train --out \"" + ck3.string() + "\" --loss-csv \"" +
            tmp.file("c.loss.csv").string() + "\" --epochs 0 --init \"" +
            ck1.string() + "\"" + common,
        tmp, "train3.log");
    REQUIRE(r3.exit_code == 0);
    CHECK(read_file(ck3) == read_file(ck1));
  }
}

TEST_CASE("evaluation reports an identity swap and writes the CSV report") {
  TempDir tmp;
  const auto gt = tmp.file("gt.txt");
  const auto res = tmp.file("res.txt");
  // Two parallel identities over four frames; the hypothesis swaps the two
  // labels from frame 3 on.
  std::string gt_text, res_text;
  for (int f = 1; f <= 4; ++f) {
    gt_text += std::to_string(f) + ",1,80,80,40,40,1,1,1\n";
    gt_text += std::to_string(f) + ",2,280,80,40,40,1,1,1\n";
    const int a = f >= 3 ? 2 : 1;
    const int b = f >= 3 ? 1 : 2;
    res_text += std::to_string(f) + "," + std::to_string(a) +
                ",80,80,40,40,-1,-1,-1,-1\n";
    res_text += std::to_string(f) + "," + std::to_string(b) +
                ",280,80,40,40,-1,-1,-1,-1\n";
  }
  write_file(gt, gt_text);
  write_file(res, res_text);

  const auto csv = tmp.path() / "report.csv";
  const auto r = run_cli("eval --gt \"" + gt.string() + "\" --results \"" +
                             res.string() + "\" --csv \"" + csv.string() + "\"",
                         tmp, "evalswap.log");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("MOTA        0.75") != std::string::npos);
  CHECK(r.output.find("IDSW        2") != std::string::npos);
  const std::string csv_text = read_file(csv);
  CHECK(csv_text.find("mota,") != std::string::npos);
  CHECK(csv_text.find("0.75,0,0,2,") != std::string::npos);
}
