#include "sinkmatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "sinkmatch/errors.hpp"
#include "sinkmatch/hungarian.hpp"

namespace sinkmatch {

namespace {

std::map<int, std::vector<const TrackRecord*>> by_frame(
    std::span<const TrackRecord> table) {
  std::map<int, std::vector<const TrackRecord*>> out;
  for (const auto& rec : table) out[rec.frame].push_back(&rec);
  return out;
}

}  // namespace

EvalReport evaluate(std::span<const TrackRecord> gt,
                    std::span<const TrackRecord> hypothesis,
                    double iou_threshold) {
  if (gt.empty()) throw DataError("evaluate: empty ground truth");
  if (iou_threshold <= 0.0 || iou_threshold > 1.0) {
    throw DataError("evaluate: iou_threshold must be in (0, 1]");
  }
  const auto gt_frames = by_frame(gt);
  const auto hyp_frames = by_frame(hypothesis);

  std::set<int> frames;
  for (const auto& [f, _] : gt_frames) frames.insert(f);
  for (const auto& [f, _] : hyp_frames) frames.insert(f);

  EvalReport report;
  report.gt_total = gt.size();

  std::map<int, int> prev_pair;      // gt id -> hyp id matched last frame
  std::map<int, int> last_match;     // gt id -> hyp id at last match ever
  std::map<int, std::size_t> span_frames, matched_frames;

  for (const int frame : frames) {
    static const std::vector<const TrackRecord*> none;
    const auto& gts =
        gt_frames.count(frame) ? gt_frames.at(frame) : none;
    const auto& hyps =
        hyp_frames.count(frame) ? hyp_frames.at(frame) : none;
    for (const auto* g : gts) ++span_frames[g->id];

    std::map<int, std::size_t> gt_index, hyp_index;
    for (std::size_t i = 0; i < gts.size(); ++i) {
      if (!gt_index.emplace(gts[i]->id, i).second) {
        throw DataError("evaluate: duplicate ground-truth id " +
                        std::to_string(gts[i]->id) + " in frame " +
                        std::to_string(frame));
      }
    }
    for (std::size_t j = 0; j < hyps.size(); ++j) {
      if (!hyp_index.emplace(hyps[j]->id, j).second) {
        throw DataError("evaluate: duplicate hypothesis id " +
                        std::to_string(hyps[j]->id) + " in frame " +
                        std::to_string(frame));
      }
    }

    // Carry over still-valid pairings before solving the rest.
    std::vector<char> gt_used(gts.size(), 0), hyp_used(hyps.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [gid, hid] : prev_pair) {
      const auto gi = gt_index.find(gid);
      const auto hj = hyp_index.find(hid);
      if (gi == gt_index.end() || hj == hyp_index.end()) continue;
      if (iou(gts[gi->second]->box, hyps[hj->second]->box) >= iou_threshold) {
        pairs.emplace_back(gi->second, hj->second);
        gt_used[gi->second] = 1;
        hyp_used[hj->second] = 1;
      }
    }

    std::vector<std::size_t> free_gt, free_hyp;
    for (std::size_t i = 0; i < gts.size(); ++i) {
      if (!gt_used[i]) free_gt.push_back(i);
    }
    for (std::size_t j = 0; j < hyps.size(); ++j) {
      if (!hyp_used[j]) free_hyp.push_back(j);
    }
    if (!free_gt.empty() && !free_hyp.empty()) {
      Matrix<double> weights(free_gt.size(), free_hyp.size(), 0.0);
      Matrix<std::uint8_t> allowed(free_gt.size(), free_hyp.size(), 0);
      for (std::size_t a = 0; a < free_gt.size(); ++a) {
        for (std::size_t b = 0; b < free_hyp.size(); ++b) {
          const double overlap =
              iou(gts[free_gt[a]]->box, hyps[free_hyp[b]]->box);
          weights(a, b) = overlap;
          allowed(a, b) = overlap >= iou_threshold ? 1 : 0;
        }
      }
      for (const auto& [a, b] : max_weight_matching(weights, allowed)) {
        pairs.emplace_back(free_gt[a], free_hyp[b]);
      }
    }

    prev_pair.clear();
    for (const auto& [i, j] : pairs) {
      const int gid = gts[i]->id;
      const int hid = hyps[j]->id;
      prev_pair[gid] = hid;
      ++matched_frames[gid];
      ++report.matched;
      if (auto it = last_match.find(gid);
          it != last_match.end() && it->second != hid) {
        ++report.idsw;
      }
      last_match[gid] = hid;
    }
    report.fn += gts.size() - pairs.size();
    report.fp += hyps.size() - pairs.size();
  }

  for (const auto& [gid, span] : span_frames) {
    const double coverage =
        static_cast<double>(matched_frames[gid]) / static_cast<double>(span);
    if (coverage >= 0.8) ++report.mt;
    if (coverage <= 0.2) ++report.ml;
  }
  report.mt_ml_ratio =
      report.ml == 0
          ? std::numeric_limits<double>::infinity()
          : static_cast<double>(report.mt) / static_cast<double>(report.ml);
  report.mota = 1.0 - static_cast<double>(report.fp + report.fn +
                                          report.idsw) /
                          static_cast<double>(report.gt_total);
  return report;
}

namespace {

std::string ratio_str(double r) {
  if (std::isinf(r)) return "inf";
  std::ostringstream os;
  os << r;
  return os.str();
}

}  // namespace

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "MOTA        " << r.mota << "\n"
     << "FP          " << r.fp << "\n"
     << "FN          " << r.fn << "\n"
     << "IDSW        " << r.idsw << "\n"
     << "MT          " << r.mt << "\n"
     << "ML          " << r.ml << "\n"
     << "MT/ML       " << ratio_str(r.mt_ml_ratio) << "\n"
     << "IDF1        n/a\n"
     << "GT boxes    " << r.gt_total << "\n"
     << "Matched     " << r.matched << "\n";
  return os.str();
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "mota,fp,fn,idsw,mt,ml,mt_ml_ratio,idf1,gt_total,matched\n";
  os << r.mota << "," << r.fp << "," << r.fn << "," << r.idsw << "," << r.mt
     << "," << r.ml << "," << ratio_str(r.mt_ml_ratio) << ",n/a,"
     << r.gt_total << "," << r.matched << "\n";
  return os.str();
}

}  // namespace sinkmatch
