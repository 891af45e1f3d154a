#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "guidecue/geometry.hpp"
#include "support/oracles.hpp"

using namespace guidecue;

namespace {

double wrap_deg(double d) {
  d = std::fmod(d + 540.0, 360.0) - 180.0;
  return d;
}

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(AngleBetween, Orthogonal) { EXPECT_DOUBLE_EQ(angle_between({1, 0}, {0, 1}), 90.0); }

TEST(AngleBetween, ParallelDifferentLengths) { EXPECT_DOUBLE_EQ(angle_between({2, 0}, {1, 0}), 0.0); }

TEST(AngleBetween, ObtuseClosedForm) {
  EXPECT_NEAR(angle_between({1, 0}, {-1, 1}), 135.0, 1e-12);
  EXPECT_NEAR(angle_between({1, 0}, {-1, 1}), static_cast<double>(oracle::angle_deg(1, 0, -1, 1)), 1e-12);
}

TEST(AngleBetween, AntiParallelClampsToExactly180) {
  EXPECT_DOUBLE_EQ(angle_between({3, 4}, {-6, -8}), 180.0);
  EXPECT_DOUBLE_EQ(angle_between({0.1, 0.7}, {0.1, 0.7}), 0.0);
}

TEST(AngleBetween, DegenerateVector) {
  EXPECT_EQ(code_of([] { angle_between({0, 0}, {1, 0}); }), ErrorCode::DegenerateVector);
  EXPECT_EQ(code_of([] { angle_between({1, 0}, {1e-13, 0}); }), ErrorCode::DegenerateVector);
  EXPECT_EQ(code_of([] { angle_between({NAN, 0}, {1, 0}); }), ErrorCode::DegenerateVector);
}

TEST(AngleBetween, MatchesLongDoubleOracleOnRandomPairs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-100.0, 100.0);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 u{d(rng), d(rng)}, v{d(rng), d(rng)};
    const double got = angle_between(u, v);
    EXPECT_NEAR(got, static_cast<double>(oracle::angle_deg(u.x, u.y, v.x, v.y)), 1e-9);
    EXPECT_EQ(got, angle_between(v, u));
    EXPECT_EQ(got, angle_between(u * 4.0, v));
    EXPECT_NEAR(got, angle_between(u * 3.7, v * 0.01), 1e-9);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 180.0);
  }
}

TEST(VectorOps, NormalizedAndRotated) {
  const Vec2 n = normalized({3, 4});
  EXPECT_DOUBLE_EQ(n.x, 0.6);
  EXPECT_DOUBLE_EQ(n.y, 0.8);
  EXPECT_EQ(code_of([] { normalized({0, 0}); }), ErrorCode::DegenerateVector);
  const Vec2 r = rotated({1, 0}, 90.0);
  EXPECT_NEAR(r.x, 0.0, 1e-15);
  EXPECT_NEAR(r.y, 1.0, 1e-15);
}

TEST(ViewParams, Validation) {
  ViewParams v;
  EXPECT_NO_THROW(v.validate());
  v.fov_deg = 180.0;
  EXPECT_EQ(code_of([&] { v.validate(); }), ErrorCode::InvalidArgument);
  v = {};
  v.phi_deg = 91.0;
  EXPECT_EQ(code_of([&] { v.validate(); }), ErrorCode::InvalidArgument);
  v = {};
  v.theta_deg = -181.0;
  EXPECT_EQ(code_of([&] { v.validate(); }), ErrorCode::InvalidArgument);
  v = {};
  v.out_width = 0;
  EXPECT_EQ(code_of([&] { v.validate(); }), ErrorCode::InvalidArgument);
}

TEST(Perspective, CenterPixelIsOpticalAxis) {
  for (double theta : {-180.0, -37.5, 0.0, 12.25, 179.0}) {
    for (double phi : {-80.0, 0.0, 33.0}) {
      ViewParams v;
      v.theta_deg = theta;
      v.phi_deg = phi;
      const SphericalDir d = perspective_to_sphere({320, 320}, v);
      EXPECT_EQ(d.lon_deg, theta);
      EXPECT_EQ(d.lat_deg, phi);
      const Vec2 p = sphere_to_perspective({theta, phi}, v);
      EXPECT_EQ(p.x, 320.0);
      EXPECT_EQ(p.y, 320.0);
    }
  }
}

TEST(Perspective, RightEdgeIsHalfFov) {
  ViewParams v;  // theta 0, phi 0, fov 90
  const SphericalDir d = perspective_to_sphere({640, 320}, v);
  EXPECT_NEAR(d.lon_deg, 45.0, 1e-12);
  EXPECT_NEAR(d.lat_deg, 0.0, 1e-12);
  const Vec2 p = sphere_to_perspective({45.0, 0.0}, v);
  EXPECT_NEAR(p.x, 640.0, 1e-9);
  EXPECT_NEAR(p.y, 320.0, 1e-9);
}

TEST(Perspective, TopOfFrameLooksUp) {
  ViewParams v;
  const SphericalDir d = perspective_to_sphere({320, 0}, v);
  EXPECT_NEAR(d.lon_deg, 0.0, 1e-12);
  EXPECT_NEAR(d.lat_deg, 45.0, 1e-12);
}

TEST(Perspective, Errors) {
  ViewParams v;
  EXPECT_EQ(code_of([&] { perspective_to_sphere({641, 10}, v); }), ErrorCode::OutOfFrame);
  EXPECT_EQ(code_of([&] { perspective_to_sphere({10, -0.5}, v); }), ErrorCode::OutOfFrame);
  EXPECT_EQ(code_of([&] { sphere_to_perspective({180.0, 0.0}, v); }), ErrorCode::BehindCamera);
  EXPECT_EQ(code_of([&] { sphere_to_perspective({0.0, -90.0}, v); }), ErrorCode::BehindCamera);
  EXPECT_EQ(code_of([&] { sphere_to_perspective({60.0, 0.0}, v); }), ErrorCode::OutOfFov);
}

TEST(Perspective, MatchesExplicitBasisOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> theta(-180.0, 180.0), phi(-70.0, 70.0), fov(60.0, 120.0), px(0.0, 640.0);
  for (int s = 0; s < 50; ++s) {
    ViewParams v;
    v.theta_deg = theta(rng);
    v.phi_deg = phi(rng);
    v.fov_deg = fov(rng);
    for (int i = 0; i < 40; ++i) {
      const Vec2 p{px(rng), px(rng)};
      const SphericalDir d = perspective_to_sphere(p, v);
      const auto o = oracle::pixel_to_sphere(p.x, p.y, v.theta_deg, v.phi_deg, v.fov_deg, 640, 640);
      EXPECT_NEAR(wrap_deg(d.lon_deg - static_cast<double>(o.lon)), 0.0, 1e-9);
      EXPECT_NEAR(d.lat_deg, static_cast<double>(o.lat), 1e-9);
      const Vec2 back = sphere_to_perspective(d, v);
      const auto ob = oracle::sphere_to_pixel(o.lon, o.lat, v.theta_deg, v.phi_deg, v.fov_deg, 640, 640);
      EXPECT_NEAR(back.x, static_cast<double>(ob[0]), 1e-6);
      EXPECT_NEAR(back.y, static_cast<double>(ob[1]), 1e-6);
      EXPECT_NEAR(back.x, p.x, 1e-6);
      EXPECT_NEAR(back.y, p.y, 1e-6);
    }
  }
}

TEST(Equirect, LinearMapping) {
  const Vec2 c = sphere_to_equirect({0, 0}, 3840, 1920);
  EXPECT_EQ(c.x, 1920.0);
  EXPECT_EQ(c.y, 960.0);
  const Vec2 corner = sphere_to_equirect({180, 90}, 3840, 1920);
  EXPECT_EQ(corner.x, 3840.0);
  EXPECT_EQ(corner.y, 0.0);
  const Vec2 q = sphere_to_equirect({-90, -45}, 3840, 1920);
  EXPECT_EQ(q.x, 960.0);
  EXPECT_EQ(q.y, 1440.0);
}

TEST(MarkerAxes, AxisAlignedSquare) {
  const AxesFrame a = marker_axes(std::array<Vec2, 4>{Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}});
  EXPECT_EQ(a.horizontal, (Vec2{1, 0}));
  EXPECT_EQ(a.gravity, (Vec2{0, 1}));
}

TEST(MarkerAxes, RotationEquivariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-180.0, 180.0), off(100.0, 500.0), side(5.0, 80.0);
  for (int i = 0; i < 200; ++i) {
    const double deg = ang(rng);
    const Vec2 center{off(rng), off(rng)};
    const double s = side(rng);
    const Vec2 local[4] = {{-s, -s}, {s, -s}, {s, s}, {-s, s}};
    std::array<Vec2, 4> corners;
    for (int k = 0; k < 4; ++k) corners[k] = center + rotated(local[k], deg);
    const AxesFrame a = marker_axes(corners);
    const Vec2 h = rotated({1, 0}, deg);
    const Vec2 g = rotated({0, 1}, deg);
    EXPECT_NEAR(a.horizontal.x, h.x, 1e-12);
    EXPECT_NEAR(a.horizontal.y, h.y, 1e-12);
    EXPECT_NEAR(a.gravity.x, g.x, 1e-12);
    EXPECT_NEAR(a.gravity.y, g.y, 1e-12);
    EXPECT_NEAR(a.horizontal.norm(), 1.0, 1e-9);
    EXPECT_NEAR(a.gravity.norm(), 1.0, 1e-9);
  }
}

TEST(MarkerAxes, ThirtyDegreeSquare) {
  const double c = std::cos(deg_to_rad(30.0)), s = std::sin(deg_to_rad(30.0));
  const std::array<Vec2, 4> corners{Vec2{0, 0}, Vec2{c, s}, Vec2{c - s, s + c}, Vec2{-s, c}};
  const AxesFrame a = marker_axes(corners);
  EXPECT_NEAR(a.horizontal.x, c, 1e-12);
  EXPECT_NEAR(a.horizontal.y, s, 1e-12);
  EXPECT_NEAR(a.gravity.x, -s, 1e-12);
  EXPECT_NEAR(a.gravity.y, c, 1e-12);
}

TEST(MarkerAxes, CoincidentCornersAreDegenerate) {
  EXPECT_EQ(code_of([] { marker_axes(std::array<Vec2, 4>{Vec2{0, 0}, Vec2{0, 0}, Vec2{1, 1}, Vec2{0, 1}}); }),
            ErrorCode::DegenerateMarker);
}
