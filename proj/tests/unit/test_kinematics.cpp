#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "guidecue/kinematics.hpp"
#include "support/test_util.hpp"

using namespace guidecue;
using testutil::kp;

namespace {

DogKeypoints dog_with(Keypoint ear_l, Keypoint ear_r, Keypoint neck) {
  DogKeypoints d;
  d.ears = {ear_l, ear_r};
  d.neck = neck;
  d.forelimbs = {kp(300, 540), kp(316, 540)};
  d.waist = kp(460, 540);
  return d;
}

Session constant_session(int frames) {
  Session s;
  s.manifest.session_id = "k";
  s.manifest.frame_count = frames;
  for (int f = 0; f < frames; ++f) {
    FrameRecord r;
    r.frame_index = f;
    r.timestamp_s = f / 30.0;
    r.marker = testutil::square_marker();
    r.dog = dog_with(kp(240, 390), kp(260, 390), kp(250, 450));
    r.right_arm = ArmKeypoints::right(kp(520, 400), kp(480, 400), kp(400, 400));
    s.frames.push_back(r);
  }
  return s;
}

AngleSeries series(std::initializer_list<std::optional<double>> v, double fps = 30.0) {
  return {OptionalValues(v), fps, Subject::RightArm};
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(SkeletonVectors, DogHead) {
  EXPECT_EQ(dog_head_vector(dog_with(kp(10, 0), kp(14, 0), kp(12, 8))), (Vec2{0, -8}));
  EXPECT_EQ(dog_head_vector(dog_with(kp(0, 0), kp(2, 2), kp(1, 5))), (Vec2{0, -4}));
  EXPECT_EQ(code_of([] { dog_head_vector(dog_with(kp(5, 5), kp(5, 5), kp(5, 5))); }), ErrorCode::DegenerateVector);
}

TEST(SkeletonVectors, DogBack) {
  DogKeypoints d;
  d.forelimbs = {kp(0, 0), kp(2, 0)};
  d.waist = kp(1, -6);
  EXPECT_EQ(dog_back_vector(d), (Vec2{0, -6}));
  d.forelimbs = {kp(1, 1), kp(3, 3)};
  d.waist = kp(5, 0);
  EXPECT_EQ(dog_back_vector(d), (Vec2{3, -2}));
  d.waist = kp(2, 2);
  EXPECT_EQ(code_of([&] { dog_back_vector(d); }), ErrorCode::DegenerateVector);
}

TEST(SkeletonVectors, Arms) {
  const auto right = ArmKeypoints::right(kp(10, 2), kp(6, 2), kp(2, 2));
  EXPECT_EQ(arm_vector(right), (Vec2{8, 0}));
  EXPECT_EQ(arm_vector(right, RightArmEndpoint::Wrist), (Vec2{4, 0}));
  const auto left = ArmKeypoints::left(kp(0, 4), kp(0, 0), kp(0, -4));
  EXPECT_EQ(arm_vector(left), (Vec2{0, 4}));
  EXPECT_EQ(arm_vector(left, RightArmEndpoint::Finger), (Vec2{0, 4}));
  const auto folded = ArmKeypoints::right(kp(2, 2), kp(6, 2), kp(2, 2));
  EXPECT_EQ(code_of([&] { arm_vector(folded); }), ErrorCode::DegenerateVector);
}

TEST(PoseAnglesTest, IdentityAxes) {
  const AxesFrame id;
  EXPECT_EQ(pose_angles({1, 0}, id), (PoseAngles{0.0, 90.0}));
  EXPECT_EQ(pose_angles({0, 1}, id), (PoseAngles{90.0, 0.0}));
}

TEST(PoseAnglesTest, RotatedAxes) {
  const double r = std::sqrt(0.5);
  const AxesFrame rot{{r, r}, {-r, r}};
  const PoseAngles p = pose_angles({1, 1}, rot);
  EXPECT_NEAR(p.yaw_deg, 0.0, 1e-6);
  EXPECT_NEAR(p.pitch_deg, 90.0, 1e-12);
  EXPECT_EQ(code_of([&] { pose_angles({0, 0}, rot); }), ErrorCode::DegenerateVector);
}

TEST(PoseAnglesTest, ScaleInvariant) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-50, 50), s(0.01, 100);
  const AxesFrame ax = marker_axes(std::array<Vec2, 4>{Vec2{0, 0}, Vec2{10, 1}, Vec2{9, 11}, Vec2{-1, 10}});
  for (int i = 0; i < 500; ++i) {
    const Vec2 v{d(rng), d(rng)};
    const double k = s(rng);
    const PoseAngles a = pose_angles(v, ax), b = pose_angles(v * k, ax);
    EXPECT_NEAR(a.yaw_deg, b.yaw_deg, 1e-9);
    EXPECT_NEAR(a.pitch_deg, b.pitch_deg, 1e-9);
  }
}

TEST(AngleSeriesTest, ConstantGeometryGivesConstantSeries) {
  const Session s = constant_session(3);
  const AngleSeries head = angle_series(s, Subject::DogHead);
  ASSERT_EQ(head.size(), 3u);
  for (const auto& v : head.values) {
    ASSERT_TRUE(v);
    EXPECT_DOUBLE_EQ(*v, 90.0);
  }
  const AngleSeries arm = angle_series(s, Subject::RightArm);
  for (const auto& v : arm.values) EXPECT_DOUBLE_EQ(*v, 0.0);
}

TEST(AngleSeriesTest, MissingGroupIsAbsent) {
  Session s = constant_session(3);
  s.frames[1].dog.reset();
  const AngleSeries head = angle_series(s, Subject::DogHead);
  EXPECT_TRUE(head.values[0]);
  EXPECT_FALSE(head.values[1]);
  EXPECT_TRUE(head.values[2]);
}

TEST(AngleSeriesTest, LengthFollowsFrameCountWithGaps) {
  Session s = constant_session(6);
  s.frames.erase(s.frames.begin() + 2);
  s.manifest.frame_count = 8;
  const AngleSeries a = angle_series(s, Subject::RightArm);
  ASSERT_EQ(a.size(), 8u);
  EXPECT_FALSE(a.values[2]);
  EXPECT_TRUE(a.values[3]);
  EXPECT_FALSE(a.values[6]);
}

TEST(AngleSeriesTest, MarkerFallbackReusesPreviousAxes) {
  Session s = constant_session(3);
  // frame 0 marker is rotated; frame 1 has none and must borrow it
  const double c = std::cos(deg_to_rad(20.0)), sn = std::sin(deg_to_rad(20.0));
  auto corner = [&](double x, double y) { return kp(300 + c * x - sn * y, 100 + sn * x + c * y); };
  s.frames[0].marker = MarkerFrame{{corner(0, 0), corner(40, 0), corner(40, 40), corner(0, 40)}};
  s.frames[1].marker.reset();
  const AngleSeries arm = angle_series(s, Subject::RightArm);
  EXPECT_NEAR(*arm.values[0], 20.0, 1e-9);
  EXPECT_NEAR(*arm.values[1], 20.0, 1e-9);
  EXPECT_NEAR(*arm.values[2], 0.0, 1e-9);
}

TEST(AngleSeriesTest, FallbackStopsAfterLookback) {
  Session s = constant_session(20);
  for (int f = 1; f < 20; ++f) s.frames[f].marker.reset();
  KinematicsConfig cfg;
  cfg.marker_lookback_frames = 15;
  const AngleSeries arm = angle_series(s, Subject::RightArm, cfg);
  EXPECT_TRUE(arm.values[15]);
  EXPECT_FALSE(arm.values[16]);
  cfg.marker_lookback_frames = 3;
  EXPECT_FALSE(angle_series(s, Subject::RightArm, cfg).values[4]);
}

TEST(AngleSeriesTest, NoMarkerEver) {
  Session s = constant_session(4);
  for (auto& r : s.frames) r.marker.reset();
  EXPECT_EQ(code_of([&] { angle_series(s, Subject::DogHead); }), ErrorCode::NoMarkerEver);
}

TEST(Smoothing, WindowOneIsIdentity) {
  const AngleSeries s = series({1.0, 5.0, std::nullopt, 2.0});
  EXPECT_EQ(smooth_series(s, 1).values, s.values);
}

TEST(Smoothing, ConstantUnchanged) {
  const AngleSeries s = series({7.0, 7.0, 7.0, 7.0, 7.0, 7.0});
  for (int w : {3, 5, 7, 9}) {
    for (const auto& v : smooth_series(s, w).values) EXPECT_DOUBLE_EQ(*v, 7.0);
  }
}

TEST(Smoothing, ThreeTap) {
  const AngleSeries out = smooth_series(series({0.0, 30.0, 0.0}), 3);
  EXPECT_DOUBLE_EQ(*out.values[1], 10.0);
  EXPECT_DOUBLE_EQ(*out.values[0], 15.0);
  EXPECT_DOUBLE_EQ(*out.values[2], 15.0);
}

TEST(Smoothing, SkipsAbsentAndKeepsThemAbsent) {
  const AngleSeries out = smooth_series(series({0.0, std::nullopt, 30.0, 60.0}), 3);
  EXPECT_DOUBLE_EQ(*out.values[0], 0.0);
  EXPECT_FALSE(out.values[1]);
  EXPECT_DOUBLE_EQ(*out.values[2], 45.0);
}

TEST(Smoothing, RejectsEvenWindow) {
  EXPECT_EQ(code_of([] { smooth_series(series({1.0}), 4); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { smooth_series(series({1.0}), 0); }), ErrorCode::InvalidArgument);
}

TEST(Smoothing, StaysWithinWindowRange) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(0, 180);
  std::bernoulli_distribution gap(0.1);
  AngleSeries s;
  for (int i = 0; i < 400; ++i) s.values.push_back(gap(rng) ? std::nullopt : std::optional<double>(d(rng)));
  for (int w : {3, 5, 9}) {
    const AngleSeries out = smooth_series(s, w);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!out.values[i]) continue;
      double lo = 1e9, hi = -1e9;
      for (std::size_t k = i >= std::size_t(w / 2) ? i - w / 2 : 0; k <= std::min(s.size() - 1, i + w / 2); ++k) {
        if (s.values[k]) {
          lo = std::min(lo, *s.values[k]);
          hi = std::max(hi, *s.values[k]);
        }
      }
      EXPECT_GE(*out.values[i], lo - 1e-12);
      EXPECT_LE(*out.values[i], hi + 1e-12);
    }
  }
}

TEST(Velocity, ConstantIsZero) {
  for (const auto& v : angular_velocity(series({4.0, 4.0, 4.0, 4.0})).values) EXPECT_DOUBLE_EQ(*v, 0.0);
}

TEST(Velocity, LinearRampIsSlopeTimesFps) {
  AngleSeries s;
  for (int i = 0; i < 50; ++i) s.values.push_back(static_cast<double>(i));
  const VelocitySeries v = angular_velocity(s);
  for (const auto& x : v.values) EXPECT_DOUBLE_EQ(*x, 30.0);

  AngleSeries steep{{}, 25.0, Subject::RightArm};
  for (int i = 0; i < 10; ++i) steep.values.push_back(2.5 * i);
  for (const auto& x : angular_velocity(steep).values) EXPECT_DOUBLE_EQ(*x, 62.5);
}

TEST(Velocity, GapRule) {
  const VelocitySeries v = angular_velocity(series({0.0, 1.0, 2.0, std::nullopt, 4.0, 5.0, 6.0}));
  EXPECT_TRUE(v.values[1]);
  EXPECT_FALSE(v.values[2]);
  EXPECT_FALSE(v.values[3]);
  EXPECT_FALSE(v.values[4]);
  EXPECT_TRUE(v.values[5]);
  EXPECT_DOUBLE_EQ(*v.values[0], 30.0);
  EXPECT_DOUBLE_EQ(*v.values[6], 30.0);
}

TEST(Velocity, ShortSeries) {
  EXPECT_FALSE(angular_velocity(series({3.0})).values[0]);
  EXPECT_TRUE(angular_velocity(series({})).values.empty());
}
