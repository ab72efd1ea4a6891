#include "sinkmatch/geom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sinkmatch/errors.hpp"

namespace sinkmatch {

namespace {

void check_extents(double w, double h) {
  if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(w) || !std::isfinite(h)) {
    throw DataError("bounding box extents must be positive and finite, got w=" +
                    std::to_string(w) + " h=" + std::to_string(h));
  }
}

}  // namespace

BoundingBox::BoundingBox(double cx, double cy, double w, double h)
    : cx(cx), cy(cy), w(w), h(h) {
  check_extents(w, h);
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw DataError("bounding box center must be finite");
  }
}

BoundingBox::Corners BoundingBox::to_corners() const {
  const double hw = w / 2.0;
  const double hh = h / 2.0;
  return {cx - hw, cy - hh, cx + hw, cy + hh};
}

BoundingBox BoundingBox::from_corners(double x1, double y1, double x2,
                                      double y2) {
  return BoundingBox((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1);
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const auto ca = a.to_corners();
  const auto cb = b.to_corners();
  const double iw = std::min(ca.x2, cb.x2) - std::max(ca.x1, cb.x1);
  const double ih = std::min(ca.y2, cb.y2) - std::max(ca.y1, cb.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double center_distance(const BoundingBox& a, const BoundingBox& b) {
  return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

GeomFeatures geom_features(const BoundingBox& b, double frame_w,
                           double frame_h) {
  if (!(frame_w > 0.0) || !(frame_h > 0.0)) {
    throw DataError("frame dimensions must be positive, got " +
                    std::to_string(frame_w) + "x" + std::to_string(frame_h));
  }
  return {{b.cx / frame_w, b.cy / frame_h, b.w / frame_w, b.h / frame_h}};
}

}  // namespace sinkmatch
