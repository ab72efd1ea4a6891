#include "sinkmatch/io.hpp"

#include <algorithm>
#include <fstream>

#include "sinkmatch/errors.hpp"
#include "sinkmatch/text.hpp"

namespace sinkmatch {

namespace {

struct RawRow {
  int frame;
  long id;
  BoundingBox box;
  std::vector<std::string> fields;
};

BoundingBox box_from_left_top(double left, double top, double w, double h,
                              const std::string& where) {
  if (w <= 0.0 || h <= 0.0) {
    throw DataError(where + ": box extents must be positive");
  }
  return BoundingBox{left + w / 2.0, top + h / 2.0, w, h};
}

// Shared shape of all three MOT-style tables: frame, id, then a left-top box.
RawRow parse_row(const std::string& line, const std::string& where,
                 std::size_t min_fields, std::size_t max_fields) {
  RawRow row;
  row.fields = split_fields(trim(line), ',');
  if (row.fields.size() < min_fields || row.fields.size() > max_fields) {
    const std::string want =
        min_fields == max_fields
            ? std::to_string(min_fields)
            : std::to_string(min_fields) + ".." + std::to_string(max_fields);
    throw DataError(where + ": expected " + want + " fields, got " +
                    std::to_string(row.fields.size()));
  }
  row.frame = static_cast<int>(parse_long(row.fields[0], where + " field 1"));
  if (row.frame < 1) throw DataError(where + ": frame must be >= 1");
  row.id = parse_long(row.fields[1], where + " field 2");
  const double left = parse_double(row.fields[2], where + " field 3");
  const double top = parse_double(row.fields[3], where + " field 4");
  const double w = parse_double(row.fields[4], where + " field 5");
  const double h = parse_double(row.fields[5], where + " field 6");
  row.box = box_from_left_top(left, top, w, h, where);
  return row;
}

template <typename OnRow>
void for_each_row(const std::filesystem::path& path, std::size_t min_fields,
                  std::size_t max_fields, OnRow&& on_row) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where =
        path.filename().string() + " line " + std::to_string(line_no);
    on_row(parse_row(line, where, min_fields, max_fields), where);
  }
}

}  // namespace

std::map<int, std::vector<ParsedDetection>> parse_detections(
    const std::filesystem::path& path) {
  std::map<int, std::vector<ParsedDetection>> out;
  for_each_row(path, 10, 10, [&](const RawRow& row, const std::string& where) {
    const double conf = parse_double(row.fields[6], where + " field 7");
    out[row.frame].push_back(ParsedDetection{row.box, conf});
  });
  return out;
}

std::map<int, std::vector<TrackRecord>> parse_ground_truth(
    const std::filesystem::path& path) {
  std::map<int, std::vector<TrackRecord>> out;
  for_each_row(path, 6, 10, [&](const RawRow& row, const std::string& where) {
    if (row.id < 1) {
      throw DataError(where + ": ground-truth id must be >= 1");
    }
    if (row.fields.size() >= 7) {
      const double consider = parse_double(row.fields[6], where + " field 7");
      if (consider == 0.0) return;  // flagged as not-to-evaluate
    }
    out[row.frame].push_back(
        TrackRecord{row.frame, static_cast<int>(row.id), row.box});
  });
  return out;
}

std::vector<TrackRecord> parse_results(const std::filesystem::path& path) {
  std::vector<TrackRecord> out;
  for_each_row(path, 10, 10, [&](const RawRow& row, const std::string& where) {
    if (row.id < 1) throw DataError(where + ": result id must be >= 1");
    out.push_back(TrackRecord{row.frame, static_cast<int>(row.id), row.box});
  });
  return out;
}

void write_results(std::span<const TrackRecord> table,
                   const std::filesystem::path& path) {
  std::vector<TrackRecord> sorted(table.begin(), table.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.frame, a.id) < std::tie(b.frame, b.id);
  });
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& rec : sorted) {
    const auto c = rec.box.to_corners();
    out << rec.frame << "," << rec.id << "," << format_double(c.x1) << ","
        << format_double(c.y1) << "," << format_double(rec.box.w) << ","
        << format_double(rec.box.h) << ",-1,-1,-1,-1\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<TrackRecord> flatten_frames(
    const std::map<int, std::vector<TrackRecord>>& frames) {
  std::vector<TrackRecord> out;
  for (const auto& [frame, records] : frames) {
    out.insert(out.end(), records.begin(), records.end());
  }
  return out;
}

}  // namespace sinkmatch
