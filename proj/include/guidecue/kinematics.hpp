#pragma once

// Skeleton vectors, per-frame pose angles against the marker axes, and the
// angle / angular-velocity time series built from them.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "guidecue/error.hpp"
#include "guidecue/geometry.hpp"
#include "guidecue/session.hpp"

namespace guidecue {

enum class Subject { DogHead, DogBack, RightArm, LeftForearm };

constexpr std::string_view to_string(Subject s) {
  switch (s) {
    case Subject::DogHead: return "DogHead";
    case Subject::DogBack: return "DogBack";
    case Subject::RightArm: return "RightArm";
    case Subject::LeftForearm: return "LeftForearm";
  }
  return "?";
}

/// Which right-arm keypoint ends the forearm vector (it always starts at
/// the elbow).
enum class RightArmEndpoint { Finger, Wrist };

struct KinematicsConfig {
  RightArmEndpoint right_endpoint{RightArmEndpoint::Finger};
  int marker_lookback_frames{15};
  int smoothing_window{5};
};

struct PoseAngles {
  double yaw_deg{0.0};    // against the horizontal axis
  double pitch_deg{0.0};  // against the gravity axis

  bool operator==(const PoseAngles&) const = default;
};

using OptionalValues = std::vector<std::optional<double>>;

struct AngleSeries {
  OptionalValues values;
  double fps{30.0};
  Subject subject{Subject::RightArm};

  std::size_t size() const { return values.size(); }
  std::vector<double> present() const {
    std::vector<double> out;
    for (const auto& v : values)
      if (v) out.push_back(*v);
    return out;
  }
};

struct VelocitySeries {
  OptionalValues values;  // deg/s, signed
  double fps{30.0};
};

struct PoseSeries {
  std::vector<std::optional<PoseAngles>> values;
  double fps{30.0};
  Subject subject{Subject::RightArm};

  AngleSeries yaw() const { return component(&PoseAngles::yaw_deg); }
  AngleSeries pitch() const { return component(&PoseAngles::pitch_deg); }

 private:
  AngleSeries component(double PoseAngles::*field) const {
    AngleSeries s{{}, fps, subject};
    s.values.reserve(values.size());
    for (const auto& p : values) s.values.push_back(p ? std::optional<double>((*p).*field) : std::nullopt);
    return s;
  }
};

namespace detail {
inline Vec2 require_direction(Vec2 v, const char* what) {
  if (!(v.norm() >= kDegenerateNorm)) throw Error(ErrorCode::DegenerateVector, what);
  return v;
}
}  // namespace detail

/// Neck to midpoint-of-ears.
inline Vec2 dog_head_vector(const DogKeypoints& dog) {
  return detail::require_direction(midpoint(dog.ears[0].position(), dog.ears[1].position()) - dog.neck.position(),
                                   "dog head vector has zero length");
}

/// Forelimb midpoint to waist.
inline Vec2 dog_back_vector(const DogKeypoints& dog) {
  return detail::require_direction(
      dog.waist.position() - midpoint(dog.forelimbs[0].position(), dog.forelimbs[1].position()),
      "dog back vector has zero length");
}

/// Forearm vector anchored at the elbow: finger (or wrist) minus elbow for
/// the right arm, wrist minus elbow for the left.
inline Vec2 arm_vector(const ArmKeypoints& arm, RightArmEndpoint endpoint = RightArmEndpoint::Finger) {
  const Vec2 tip = (arm.side == ArmSide::Right && endpoint == RightArmEndpoint::Finger) ? arm.finger().position()
                                                                                         : arm.wrist().position();
  return detail::require_direction(tip - arm.elbow().position(), "arm vector has zero length");
}

inline PoseAngles pose_angles(Vec2 vec, const AxesFrame& axes) {
  return {angle_between(vec, axes.horizontal), angle_between(vec, axes.gravity)};
}

/// Marker axes per frame. A frame without a usable marker borrows the most
/// recent usable one within the lookback window.
struct AxesTrack {
  std::vector<std::optional<AxesFrame>> per_frame;

  const std::optional<AxesFrame>& at(FrameIndex f) const { return per_frame.at(static_cast<std::size_t>(f)); }
};

inline AxesTrack axes_track(const Session& session, int lookback_frames) {
  const auto n = static_cast<std::size_t>(session.manifest.frame_count);
  AxesTrack track{std::vector<std::optional<AxesFrame>>(n)};
  std::optional<AxesFrame> last;
  FrameIndex last_frame = -1;
  bool any = false;
  for (const FrameRecord& r : session.frames) {
    if (r.frame_index < 0 || r.frame_index >= session.manifest.frame_count || !r.marker) continue;
    try {
      track.per_frame[static_cast<std::size_t>(r.frame_index)] = marker_axes(*r.marker);
      any = true;
    } catch (const Error&) {
    }
  }
  if (!any) throw Error(ErrorCode::NoMarkerEver, "no frame carries a usable marker");
  for (std::size_t i = 0; i < n; ++i) {
    if (track.per_frame[i]) {
      last = track.per_frame[i];
      last_frame = static_cast<FrameIndex>(i);
    } else if (last && static_cast<FrameIndex>(i) - last_frame <= lookback_frames) {
      track.per_frame[i] = last;
    }
  }
  return track;
}

/// The subject's skeleton vector in `record`, or nothing when the needed
/// keypoints are absent or degenerate.
inline std::optional<Vec2> subject_vector(const FrameRecord& record, Subject subject,
                                          RightArmEndpoint endpoint = RightArmEndpoint::Finger) {
  try {
    switch (subject) {
      case Subject::DogHead:
        if (record.dog) return dog_head_vector(*record.dog);
        break;
      case Subject::DogBack:
        if (record.dog) return dog_back_vector(*record.dog);
        break;
      case Subject::RightArm:
        if (record.right_arm) return arm_vector(*record.right_arm, endpoint);
        break;
      case Subject::LeftForearm:
        if (record.left_arm) return arm_vector(*record.left_arm);
        break;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateVector) throw;
  }
  return std::nullopt;
}

inline PoseSeries pose_series(const Session& session, const AxesTrack& axes, Subject subject,
                              const KinematicsConfig& cfg = {}) {
  const auto n = static_cast<std::size_t>(session.manifest.frame_count);
  PoseSeries out{std::vector<std::optional<PoseAngles>>(n), session.manifest.fps, subject};
  for (const FrameRecord& r : session.frames) {
    if (r.frame_index < 0 || r.frame_index >= session.manifest.frame_count) continue;
    const auto& ax = axes.at(r.frame_index);
    if (!ax) continue;
    if (auto v = subject_vector(r, subject, cfg.right_endpoint)) {
      out.values[static_cast<std::size_t>(r.frame_index)] = pose_angles(*v, *ax);
    }
  }
  return out;
}

inline PoseSeries pose_series(const Session& session, Subject subject, const KinematicsConfig& cfg = {}) {
  return pose_series(session, axes_track(session, cfg.marker_lookback_frames), subject, cfg);
}

/// Per-frame angle against the horizontal axis (yaw for arms; the head or
/// back angle for the dog).
inline AngleSeries angle_series(const Session& session, Subject subject, const KinematicsConfig& cfg = {}) {
  return pose_series(session, subject, cfg).yaw();
}

namespace detail {
inline std::optional<double> window_mean(const OptionalValues& v, std::size_t i, std::size_t half) {
  if (!v[i]) return std::nullopt;
  const std::size_t lo = i >= half ? i - half : 0;
  const std::size_t hi = std::min(v.size() - 1, i + half);
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = lo; k <= hi; ++k) {
    if (v[k]) {
      sum += *v[k];
      ++count;
    }
  }
  return sum / count;
}
}  // namespace detail

/// Centered moving average over the present values in each window. Absent
/// samples stay absent; the window shrinks at the series ends.
inline AngleSeries smooth_series(const AngleSeries& s, int window) {
  if (window < 1 || window % 2 == 0) throw Error(ErrorCode::InvalidArgument, "smoothing window must be odd and >= 1");
  if (window == 1) return s;
  AngleSeries out{OptionalValues(s.size()), s.fps, s.subject};
  const auto half = static_cast<std::size_t>(window / 2);
  for (std::size_t i = 0; i < s.size(); ++i) out.values[i] = detail::window_mean(s.values, i, half);
  return out;
}

/// Central-difference angular velocity in deg/s; one-sided at the ends.
/// A sample is absent unless it and the neighbours it uses are present.
inline VelocitySeries angular_velocity(const AngleSeries& s) {
  VelocitySeries out{OptionalValues(s.size()), s.fps};
  const std::size_t n = s.size();
  if (n < 2) return out;
  const auto& a = s.values;
  for (std::size_t i = 0; i < n; ++i) {
    if (!a[i]) continue;
    if (i == 0) {
      if (a[1]) out.values[i] = (*a[1] - *a[0]) * s.fps;
    } else if (i == n - 1) {
      if (a[i - 1]) out.values[i] = (*a[i] - *a[i - 1]) * s.fps;
    } else if (a[i - 1] && a[i + 1]) {
      out.values[i] = (*a[i + 1] - *a[i - 1]) * s.fps / 2.0;
    }
  }
  return out;
}

}  // namespace guidecue
