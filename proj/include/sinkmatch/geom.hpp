#pragma once

#include <array>

namespace sinkmatch {

/// Axis-aligned box in pixel coordinates, stored as center plus size.
/// MOTChallenge files use left-top plus size; the io module converts at the
/// boundary.
struct BoundingBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;

  BoundingBox() = default;
  BoundingBox(double cx, double cy, double w, double h);

  struct Corners {
    double x1, y1, x2, y2;  // left, top, right, bottom
  };

  Corners to_corners() const;
  static BoundingBox from_corners(double x1, double y1, double x2, double y2);

  double area() const { return w * h; }

  bool operator==(const BoundingBox&) const = default;
};

/// Intersection over union. In [0, 1]; 1 iff the boxes coincide, 0 iff their
/// interiors are disjoint.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Euclidean distance between box centers, in pixels.
double center_distance(const BoundingBox& a, const BoundingBox& b);

/// Box geometry scaled by the frame dimensions: (cx/W, cy/H, w/W, h/H).
/// Dimensionless, in [0, 1] for boxes inside the frame.
struct GeomFeatures {
  std::array<double, 4> v;

  bool operator==(const GeomFeatures&) const = default;
};

GeomFeatures geom_features(const BoundingBox& b, double frame_w,
                           double frame_h);

}  // namespace sinkmatch
