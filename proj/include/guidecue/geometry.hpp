#pragma once

// Planar vector math, the dot-product angle kernel, and the projections
// between a 360-degree equirectangular panorama and rectilinear
// (gnomonic) perspective views extracted from it.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "guidecue/error.hpp"

namespace guidecue {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

constexpr Vec2 midpoint(Vec2 a, Vec2 b) { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Norm below which a vector is treated as having no direction.
inline constexpr double kDegenerateNorm = 1e-12;

/// Unsigned angle between two vectors in degrees, in [0, 180].
///
/// Throws `DegenerateVector` when either vector has (near) zero length.
inline double angle_between(Vec2 u, Vec2 v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu >= kDegenerateNorm) || !(nv >= kDegenerateNorm)) {
    throw Error(ErrorCode::DegenerateVector, "angle_between on zero-length vector");
  }
  const double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

inline Vec2 normalized(Vec2 v) {
  const double n = v.norm();
  if (!(n >= kDegenerateNorm)) {
    throw Error(ErrorCode::DegenerateVector, "cannot normalize zero-length vector");
  }
  return v / n;
}

/// Rotates `v` counter-clockwise in a y-up frame (clockwise on screen,
/// since image y points down).
inline Vec2 rotated(Vec2 v, double deg) {
  const double c = std::cos(deg_to_rad(deg));
  const double s = std::sin(deg_to_rad(deg));
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Perspective view extracted from an equirectangular panorama.
struct ViewParams {
  double theta_deg{0.0};  // longitude of the optical axis
  double phi_deg{0.0};    // latitude of the optical axis
  double fov_deg{90.0};   // horizontal field of view
  int out_width{640};
  int out_height{640};
  int pano_width{3840};
  int pano_height{1920};

  bool operator==(const ViewParams&) const = default;

  void validate() const {
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
      throw Error(ErrorCode::InvalidArgument, "fov_deg must lie in (0, 180)");
    }
    if (!(theta_deg >= -180.0 && theta_deg <= 180.0)) {
      throw Error(ErrorCode::InvalidArgument, "theta_deg must lie in [-180, 180]");
    }
    if (!(phi_deg >= -90.0 && phi_deg <= 90.0)) {
      throw Error(ErrorCode::InvalidArgument, "phi_deg must lie in [-90, 90]");
    }
    if (out_width <= 0 || out_height <= 0 || pano_width <= 0 || pano_height <= 0) {
      throw Error(ErrorCode::InvalidArgument, "view dimensions must be positive");
    }
  }

  /// Focal length in pixels; square pixels, so one value serves both axes.
  double focal_px() const {
    return (out_width / 2.0) / std::tan(deg_to_rad(fov_deg) / 2.0);
  }
};

struct SphericalDir {
  double lon_deg{0.0};
  double lat_deg{0.0};
};

namespace detail {

struct Vec3 {
  double x, y, z;
};

// Camera frame: x right, y down, z forward. World frame shares the
// convention; longitude turns about the vertical axis, latitude is
// positive upward.
inline Vec3 camera_to_world(Vec3 c, double theta_deg, double phi_deg) {
  const double sp = std::sin(deg_to_rad(phi_deg));
  const double cp = std::cos(deg_to_rad(phi_deg));
  const double st = std::sin(deg_to_rad(theta_deg));
  const double ct = std::cos(deg_to_rad(theta_deg));
  const double y1 = c.y * cp - c.z * sp;
  const double z1 = c.y * sp + c.z * cp;
  return {c.x * ct + z1 * st, y1, -c.x * st + z1 * ct};
}

inline Vec3 world_to_camera(Vec3 w, double theta_deg, double phi_deg) {
  const double sp = std::sin(deg_to_rad(phi_deg));
  const double cp = std::cos(deg_to_rad(phi_deg));
  const double st = std::sin(deg_to_rad(theta_deg));
  const double ct = std::cos(deg_to_rad(theta_deg));
  const double x1 = w.x * ct - w.z * st;
  const double z1 = w.x * st + w.z * ct;
  return {x1, w.y * cp + z1 * sp, -w.y * sp + z1 * cp};
}

}  // namespace detail

/// Un-projects a perspective-frame pixel onto the viewing sphere.
///
/// Pixel coordinates are continuous: (0,0) is the top-left corner of the
/// frame and (out_width, out_height) the bottom-right. The frame center
/// maps exactly to (theta_deg, phi_deg).
inline SphericalDir perspective_to_sphere(Vec2 px, const ViewParams& view) {
  view.validate();
  if (!(px.x >= 0.0 && px.x <= view.out_width && px.y >= 0.0 && px.y <= view.out_height)) {
    throw Error(ErrorCode::OutOfFrame, "pixel outside perspective frame");
  }
  const double f = view.focal_px();
  const double xc = (px.x - view.out_width / 2.0) / f;
  const double yc = (px.y - view.out_height / 2.0) / f;
  if (xc == 0.0 && yc == 0.0) return {view.theta_deg, view.phi_deg};

  const detail::Vec3 w = detail::camera_to_world({xc, yc, 1.0}, view.theta_deg, view.phi_deg);
  const double r = std::sqrt(w.x * w.x + w.y * w.y + w.z * w.z);
  return {rad_to_deg(std::atan2(w.x, w.z)), rad_to_deg(std::asin(std::clamp(-w.y / r, -1.0, 1.0)))};
}

/// Projects a sphere direction into the perspective frame.
///
/// Throws `BehindCamera` for directions in the rear hemisphere and
/// `OutOfFov` for directions that land outside the frame.
inline Vec2 sphere_to_perspective(SphericalDir dir, const ViewParams& view) {
  view.validate();
  if (dir.lon_deg == view.theta_deg && dir.lat_deg == view.phi_deg) {
    return {view.out_width / 2.0, view.out_height / 2.0};
  }
  const double lon = deg_to_rad(dir.lon_deg);
  const double lat = deg_to_rad(dir.lat_deg);
  const detail::Vec3 w{std::cos(lat) * std::sin(lon), -std::sin(lat), std::cos(lat) * std::cos(lon)};
  const detail::Vec3 c = detail::world_to_camera(w, view.theta_deg, view.phi_deg);
  if (c.z <= 1e-12) throw Error(ErrorCode::BehindCamera, "direction behind the view");

  const double f = view.focal_px();
  const Vec2 px{f * c.x / c.z + view.out_width / 2.0, f * c.y / c.z + view.out_height / 2.0};
  constexpr double kEdgeSlack = 1e-9;
  if (px.x < -kEdgeSlack || px.x > view.out_width + kEdgeSlack || px.y < -kEdgeSlack ||
      px.y > view.out_height + kEdgeSlack) {
    throw Error(ErrorCode::OutOfFov, "direction outside the field of view");
  }
  return px;
}

/// Linear longitude/latitude to panorama pixel mapping.
inline Vec2 sphere_to_equirect(SphericalDir dir, int pano_width, int pano_height) {
  return {(dir.lon_deg + 180.0) / 360.0 * pano_width, (90.0 - dir.lat_deg) / 180.0 * pano_height};
}

/// Reference axes recovered from the trainer-mounted marker. Both vectors
/// are unit length, in image coordinates (y down).
struct AxesFrame {
  Vec2 horizontal{1.0, 0.0};
  Vec2 gravity{0.0, 1.0};

  bool operator==(const AxesFrame&) const = default;
};

/// Axes from marker corners ordered top-left, top-right, bottom-right,
/// bottom-left. Horizontal is the mean of the top and bottom edges (left to
/// right); gravity is the mean of the left and right edges (top to bottom).
inline AxesFrame marker_axes(const std::array<Vec2, 4>& corners) {
  constexpr double kMinEdge = 1e-9;
  const Vec2 top = corners[1] - corners[0];
  const Vec2 bottom = corners[2] - corners[3];
  const Vec2 left = corners[3] - corners[0];
  const Vec2 right = corners[2] - corners[1];
  for (const Vec2& e : {top, bottom, left, right}) {
    if (!(e.norm() >= kMinEdge)) {
      throw Error(ErrorCode::DegenerateMarker, "marker edge has zero length");
    }
  }
  const Vec2 h = (top + bottom) / 2.0;
  const Vec2 g = (left + right) / 2.0;
  if (!(h.norm() >= kMinEdge) || !(g.norm() >= kMinEdge)) {
    throw Error(ErrorCode::DegenerateMarker, "marker edges cancel out");
  }
  return {h / h.norm(), g / g.norm()};
}

}  // namespace guidecue
