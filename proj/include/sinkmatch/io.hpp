#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sinkmatch/geom.hpp"

namespace sinkmatch {

/// One detector proposal. Boxes are stored center-based internally; files
/// use the MOTChallenge left-top convention.
struct ParsedDetection {
  BoundingBox box;
  double confidence = 0.0;

  bool operator==(const ParsedDetection&) const = default;
};

/// One identity-labeled box (ground truth or tracker output).
struct TrackRecord {
  int frame = 0;
  int id = 0;
  BoundingBox box;

  bool operator==(const TrackRecord&) const = default;
};

/// Detection file: `frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z`,
/// exactly 10 fields per row. Rows grouped by frame, original in-file order
/// preserved within each frame. Malformed rows fail with the line number.
std::map<int, std::vector<ParsedDetection>> parse_detections(
    const std::filesystem::path& path);

/// Ground-truth file: same layout, 6 to 10 fields, id >= 1 required. When a
/// 7th field is present it is treated as the consider flag: rows with value
/// 0 are dropped.
std::map<int, std::vector<TrackRecord>> parse_ground_truth(
    const std::filesystem::path& path);

/// Result file: exactly 10 fields, id >= 1, world fields ignored.
std::vector<TrackRecord> parse_results(const std::filesystem::path& path);

/// Writes `frame,id,bb_left,bb_top,bb_width,bb_height,-1,-1,-1,-1` rows
/// sorted by (frame, id). parse_results inverts it exactly (coordinates are
/// emitted in shortest round-trip decimal form).
void write_results(std::span<const TrackRecord> table,
                   const std::filesystem::path& path);

std::vector<TrackRecord> flatten_frames(
    const std::map<int, std::vector<TrackRecord>>& frames);

}  // namespace sinkmatch
