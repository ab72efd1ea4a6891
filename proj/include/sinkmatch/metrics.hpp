#pragma once

#include <span>
#include <string>

#include "sinkmatch/io.hpp"

namespace sinkmatch {

/// CLEAR-MOT summary. mota = 1 - (fp + fn + idsw) / gt_total; mt/ml count
/// ground-truth trajectories matched on >= 80% / <= 20% of the frames they
/// span. IDF1 is deliberately not computed; reports print "n/a" for it.
struct EvalReport {
  double mota = 0.0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t idsw = 0;
  std::size_t mt = 0;
  std::size_t ml = 0;
  double mt_ml_ratio = 0.0;  // +inf when ml = 0
  std::size_t gt_total = 0;
  std::size_t matched = 0;
};

/// Frame-by-frame CLEAR-MOT matching: pairings from the previous frame are
/// kept while their IoU stays at or above iou_threshold, remaining boxes are
/// matched by maximum-IoU assignment, and a ground-truth identity whose
/// matched hypothesis id changes from its last matched id counts one
/// identity switch.
EvalReport evaluate(std::span<const TrackRecord> gt,
                    std::span<const TrackRecord> hypothesis,
                    double iou_threshold = 0.5);

/// Human-readable aligned table, one metric per line.
std::string format_report(const EvalReport& report);

/// Single-header CSV: metric names, then values.
std::string report_csv(const EvalReport& report);

}  // namespace sinkmatch
