#pragma once

#include <string>
#include <vector>

namespace latefuse::geom {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to [-pi, pi).
double normalize_angle(double radians);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Convex polygon in the x-y plane. Vertices are counter-clockwise; an empty
/// vertex list is the empty polygon.
struct ConvexPolygon2D {
  std::vector<Vec2> vertices;

  bool empty() const { return vertices.empty(); }
  /// Shoelace area; positive for a valid CCW polygon, 0 when empty.
  double area() const;
};

/// Upright oriented box. yaw rotates about the vertical axis,
/// counter-clockwise positive. length/width/height are full extents.
/// Construction validates: positive extents, finite fields; yaw is
/// normalized to [-pi, pi).
struct Box3D {
  double cx;
  double cy;
  double cz;
  double length;
  double width;
  double height;
  double yaw;
  std::string frame_id;

  Box3D(double cx, double cy, double cz, double length, double width,
        double height, double yaw, std::string frame_id);

  double bev_area() const { return length * width; }
  double volume() const { return length * width * height; }
};

/// Footprint of the box in the x-y plane, 4 vertices, CCW.
ConvexPolygon2D box_to_bev_polygon(const Box3D& box);

/// Convex intersection region via Sutherland-Hodgman clipping. Intersections
/// with area below 1e-12 m^2 collapse to the empty polygon so floating-point
/// slivers do not create spurious graph edges.
ConvexPolygon2D polygon_intersection(const ConvexPolygon2D& p,
                                     const ConvexPolygon2D& q);

enum class IouVariant { kBev, k3d };

const char* to_string(IouVariant variant);
IouVariant iou_variant_from_string(const std::string& name);

/// IoU of the BEV footprints. Symmetric bit-for-bit: arguments are put in a
/// canonical order before clipping. Throws FrameMismatch on frame_id mismatch.
double iou_bev(const Box3D& a, const Box3D& b);

/// Volume IoU: BEV intersection area times the vertical overlap length.
double iou_3d(const Box3D& a, const Box3D& b);

double iou(const Box3D& a, const Box3D& b, IouVariant variant);

}  // namespace latefuse::geom
