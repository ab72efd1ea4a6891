#include "sinkmatch/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "sinkmatch/text.hpp"

namespace sinkmatch {

ModelDims RunConfig::dims() const {
  return ModelDims{d_app, d_inter, gcn_layers};
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.s_slack = s_slack;
  p.l = l;
  p.sinkhorn_iters = sinkhorn_iters;
  p.use_edges = use_edges;
  p.use_iou = use_iou;
  return p;
}

TrackerConfig RunConfig::tracker() const {
  TrackerConfig t;
  t.gate_px = gate_px;
  t.s_thres = s_thres;
  t.min_confidence = min_confidence;
  t.max_lost_age = max_lost_age;
  t.frame_w = frame_w;
  t.frame_h = frame_h;
  return t;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.lr = lr;
  t.weight_decay = weight_decay;
  t.batch_size = batch_size;
  t.loss_weight = loss_weight;
  t.lookback = lookback;
  t.epochs = epochs;
  t.seed = seed;
  t.gate_px = gate_px;
  t.strict_mn_norm = loss_norm == "strict-mn";
  return t;
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string& value,
                                  const std::string& where)>;

std::size_t parse_size(const std::string& v, const std::string& where) {
  const long n = parse_long(v, where);
  if (n < 1) throw DataError(where + ": must be a positive integer");
  return static_cast<std::size_t>(n);
}

int parse_pos_int(const std::string& v, const std::string& where) {
  const long n = parse_long(v, where);
  if (n < 1) throw DataError(where + ": must be a positive integer");
  return static_cast<int>(n);
}

int parse_nonneg_int(const std::string& v, const std::string& where) {
  const long n = parse_long(v, where);
  if (n < 0) throw DataError(where + ": must be non-negative");
  return static_cast<int>(n);
}

double parse_pos_double(const std::string& v, const std::string& where) {
  const double d = parse_double(v, where);
  if (!(d > 0.0)) throw DataError(where + ": must be positive");
  return d;
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError(where + ": expected true/false/1/0, got \"" + v + "\"");
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"d_app", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.d_app = parse_size(v, w);
       }},
      {"d_inter",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.d_inter = parse_size(v, w);
       }},
      {"gcn_layers",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.gcn_layers = parse_size(v, w);
       }},
      {"s_slack",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.s_slack = parse_double(v, w);
       }},
      {"l", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.l = parse_pos_double(v, w);
       }},
      {"sinkhorn_iters",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.sinkhorn_iters = parse_pos_int(v, w);
       }},
      {"use_edges",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.use_edges = parse_bool(v, w);
       }},
      {"use_iou",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.use_iou = parse_bool(v, w);
       }},
      {"s_thres",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.s_thres = parse_pos_double(v, w);
       }},
      {"gate_px",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.gate_px = parse_pos_double(v, w);
       }},
      {"min_confidence",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.min_confidence = parse_pos_double(v, w);
       }},
      {"max_lost_age",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.max_lost_age = parse_pos_int(v, w);
       }},
      {"lr", [](RunConfig& c, const std::string& v, const std::string& w) {
         c.lr = parse_pos_double(v, w);
       }},
      {"weight_decay",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.weight_decay = parse_double(v, w);
       }},
      {"batch_size",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.batch_size = parse_pos_int(v, w);
       }},
      {"loss_weight",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.loss_weight = parse_pos_double(v, w);
       }},
      {"lookback",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.lookback = parse_pos_int(v, w);
       }},
      {"epochs",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.epochs = parse_nonneg_int(v, w);
       }},
      {"seed", [](RunConfig& c, const std::string& v, const std::string& w) {
         const long n = parse_long(v, w);
         if (n < 0) throw DataError(w + ": seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(n);
       }},
      {"loss_norm",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         if (v != "augmented" && v != "strict-mn") {
           throw DataError(w + ": loss_norm must be augmented or strict-mn");
         }
         c.loss_norm = v;
       }},
      {"frame_w",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.frame_w = parse_pos_double(v, w);
       }},
      {"frame_h",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.frame_h = parse_pos_double(v, w);
       }},
  };
  return table;
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) {
    throw DataError("unknown config key \"" + key + "\"");
  }
  it->second(config, value, "config key " + key);
}

RunConfig parse_config(const std::filesystem::path& path,
                       const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());

  RunConfig config = base;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    body = trim(body);
    if (body.empty()) continue;
    const std::string where =
        path.filename().string() + " line " + std::to_string(line_no);

    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw DataError(where + ": expected `key = value`");
    }
    const std::string key{trim(body.substr(0, eq))};
    const std::string value{trim(body.substr(eq + 1))};
    if (key.empty() || value.empty()) {
      throw DataError(where + ": expected `key = value`");
    }
    if (!seen.insert(key).second) {
      throw DataError(where + ": duplicate key \"" + key + "\"");
    }
    try {
      apply_config_entry(config, key, value);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return config;
}

}  // namespace sinkmatch
