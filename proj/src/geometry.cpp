#include "latefuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "latefuse/errors.hpp"

namespace latefuse::geom {

namespace {

constexpr double kMinIntersectionArea = 1e-12;  // m^2

// Z-component of (a-o) x (b-o); > 0 when b is left of the ray o->a.
double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

Vec2 segment_line_intersection(const Vec2& a, const Vec2& b, double da,
                               double db) {
  const double t = da / (da - db);
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

// Clips a CCW polygon against the half-plane left of edge e0->e1.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly,
                                  const Vec2& e0, const Vec2& e1) {
  std::vector<Vec2> out;
  out.reserve(poly.size() + 1);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % n];
    const double dc = cross(e0, e1, cur);
    const double dn = cross(e0, e1, nxt);
    if (dc >= 0.0) {
      out.push_back(cur);
    }
    if ((dc >= 0.0) != (dn >= 0.0)) {
      out.push_back(segment_line_intersection(cur, nxt, dc, dn));
    }
  }
  return out;
}

std::vector<Vec2> drop_duplicate_vertices(std::vector<Vec2> verts) {
  std::vector<Vec2> out;
  out.reserve(verts.size());
  for (const Vec2& v : verts) {
    if (out.empty() || std::abs(v.x - out.back().x) > 1e-12 ||
        std::abs(v.y - out.back().y) > 1e-12) {
      out.push_back(v);
    }
  }
  while (out.size() > 1 && std::abs(out.front().x - out.back().x) <= 1e-12 &&
         std::abs(out.front().y - out.back().y) <= 1e-12) {
    out.pop_back();
  }
  return out;
}

// Total order on box geometry; iou() evaluates each unordered pair in one
// fixed argument order so the result is exactly symmetric.
bool box_less(const Box3D& a, const Box3D& b) {
  return std::tie(a.cx, a.cy, a.cz, a.length, a.width, a.height, a.yaw) <
         std::tie(b.cx, b.cy, b.cz, b.length, b.width, b.height, b.yaw);
}

void require_same_frame(const Box3D& a, const Box3D& b) {
  if (a.frame_id != b.frame_id) {
    throw FrameMismatch("iou: boxes are in different frames ('" + a.frame_id +
                        "' vs '" + b.frame_id + "')");
  }
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  return polygon_intersection(box_to_bev_polygon(a), box_to_bev_polygon(b))
      .area();
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double normalize_angle(double radians) {
  double r = std::fmod(radians + kPi, 2.0 * kPi);
  if (r < 0.0) {
    r += 2.0 * kPi;
  }
  return r - kPi;
}

double ConvexPolygon2D::area() const {
  if (vertices.size() < 3) {
    return 0.0;
  }
  double twice = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % vertices.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

Box3D::Box3D(double cx_, double cy_, double cz_, double length_, double width_,
             double height_, double yaw_, std::string frame_id_)
    : cx(cx_),
      cy(cy_),
      cz(cz_),
      length(length_),
      width(width_),
      height(height_),
      yaw(normalize_angle(yaw_)),
      frame_id(std::move(frame_id_)) {
  const bool finite = std::isfinite(cx) && std::isfinite(cy) &&
                      std::isfinite(cz) && std::isfinite(length) &&
                      std::isfinite(width) && std::isfinite(height) &&
                      std::isfinite(yaw_);
  if (!finite) {
    throw std::invalid_argument("Box3D: all fields must be finite");
  }
  if (length <= 0.0 || width <= 0.0 || height <= 0.0) {
    throw std::invalid_argument("Box3D: extents must be positive");
  }
}

ConvexPolygon2D box_to_bev_polygon(const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  // CCW in the local frame, stays CCW under rotation.
  const Vec2 local[4] = {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}};
  ConvexPolygon2D poly;
  poly.vertices.reserve(4);
  for (const Vec2& p : local) {
    poly.vertices.push_back(
        {box.cx + c * p.x - s * p.y, box.cy + s * p.x + c * p.y});
  }
  return poly;
}

ConvexPolygon2D polygon_intersection(const ConvexPolygon2D& p,
                                     const ConvexPolygon2D& q) {
  if (p.empty() || q.empty()) {
    return {};
  }
  std::vector<Vec2> verts = p.vertices;
  const std::size_t nq = q.vertices.size();
  for (std::size_t i = 0; i < nq && !verts.empty(); ++i) {
    verts = clip_half_plane(verts, q.vertices[i], q.vertices[(i + 1) % nq]);
  }
  verts = drop_duplicate_vertices(std::move(verts));
  if (verts.size() < 3) {
    return {};
  }
  ConvexPolygon2D result{std::move(verts)};
  if (result.area() < kMinIntersectionArea) {
    return {};
  }
  return result;
}

const char* to_string(IouVariant variant) {
  return variant == IouVariant::kBev ? "bev" : "3d";
}

IouVariant iou_variant_from_string(const std::string& name) {
  if (name == "bev") {
    return IouVariant::kBev;
  }
  if (name == "3d") {
    return IouVariant::k3d;
  }
  throw ConfigError("unknown IoU variant '" + name + "' (expected bev or 3d)");
}

double iou_bev(const Box3D& a, const Box3D& b) {
  require_same_frame(a, b);
  const Box3D& lo = box_less(b, a) ? b : a;
  const Box3D& hi = box_less(b, a) ? a : b;
  const double inter = bev_intersection_area(lo, hi);
  if (inter <= 0.0) {
    return 0.0;
  }
  return clamp_unit(inter / (lo.bev_area() + hi.bev_area() - inter));
}

double iou_3d(const Box3D& a, const Box3D& b) {
  require_same_frame(a, b);
  const Box3D& lo = box_less(b, a) ? b : a;
  const Box3D& hi = box_less(b, a) ? a : b;
  const double z_overlap =
      std::min(lo.cz + 0.5 * lo.height, hi.cz + 0.5 * hi.height) -
      std::max(lo.cz - 0.5 * lo.height, hi.cz - 0.5 * hi.height);
  if (z_overlap <= 0.0) {
    return 0.0;
  }
  const double inter_area = bev_intersection_area(lo, hi);
  if (inter_area <= 0.0) {
    return 0.0;
  }
  const double inter_vol = inter_area * z_overlap;
  return clamp_unit(inter_vol / (lo.volume() + hi.volume() - inter_vol));
}

double iou(const Box3D& a, const Box3D& b, IouVariant variant) {
  return variant == IouVariant::kBev ? iou_bev(a, b) : iou_3d(a, b);
}

}  // namespace latefuse::geom
