#pragma once

// Vibration track synthesis. Right hand: frequency follows the elbow's
// angular speed, amplitude follows the command yaw. Left hand: fixed-tone
// alerts while the forearm leaves its natural walking range.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "guidecue/command_analysis.hpp"
#include "guidecue/detail/stats.hpp"
#include "guidecue/error.hpp"
#include "guidecue/kinematics.hpp"

namespace guidecue {

inline constexpr double kMinVibrationHz = 50.0;
inline constexpr double kMaxVibrationHz = 300.0;

enum class Hand { Left, Right };

constexpr std::string_view to_string(Hand h) { return h == Hand::Left ? "Left" : "Right"; }

inline Hand hand_from_string(std::string_view s) {
  if (s == "Left") return Hand::Left;
  if (s == "Right") return Hand::Right;
  throw Error(ErrorCode::MalformedRecord, "unknown hand '" + std::string(s) + "'");
}

struct HapticEvent {
  Hand hand{Hand::Right};
  FrameIndex start_frame{0};
  int duration_frames{1};
  double frequency_hz{kMinVibrationHz};
  double amplitude{0.0};

  FrameIndex end_frame() const { return start_frame + duration_frames - 1; }
  bool operator==(const HapticEvent&) const = default;
};

struct HapticCalibration {
  double v_min{0.0};  // deg/s
  double v_max{1.0};
  double yaw_min{90.0};
  double yaw_max{150.0};
  double amp_floor{0.2};

  bool operator==(const HapticCalibration&) const = default;

  void validate() const {
    if (!(v_min < v_max)) throw Error(ErrorCode::InvalidArgument, "haptic calibration needs v_min < v_max");
    if (!(yaw_min < yaw_max)) throw Error(ErrorCode::InvalidArgument, "haptic calibration needs yaw_min < yaw_max");
    if (!(amp_floor >= 0.0 && amp_floor < 1.0)) throw Error(ErrorCode::InvalidArgument, "amp_floor must lie in [0, 1)");
  }
};

struct WalkingBand {
  AngleBand yaw_band;
  AngleBand pitch_band;

  bool operator==(const WalkingBand&) const = default;
};

enum class RightHandMode { Continuous, OnsetOnly };

struct HapticsConfig {
  // Velocity endpoints; per-session percentiles of in-epoch |velocity| when unset.
  std::optional<double> v_min;
  std::optional<double> v_max;
  double v_min_percentile{5.0};
  double v_max_percentile{95.0};
  double yaw_min{90.0};
  double yaw_max{150.0};
  double amp_floor{0.2};
  double merge_frequency_hz{10.0};
  double merge_amplitude{0.05};
  RightHandMode right_mode{RightHandMode::Continuous};

  FrameIndex calibration_start_frame{0};
  FrameIndex calibration_frames{90};
  double min_calibration_s{2.0};
  double band_margin_deg{5.0};
  int alert_sustain_frames{3};
  double alert_frequency_hz{120.0};
  double alert_full_scale_deg{30.0};
};

/// Linear map of |v| from [v_min, v_max] onto [50, 300] Hz, clamped.
inline double frequency_from_velocity(double v_deg_s, const HapticCalibration& c) {
  const double t = std::clamp((std::abs(v_deg_s) - c.v_min) / (c.v_max - c.v_min), 0.0, 1.0);
  return kMinVibrationHz + t * (kMaxVibrationHz - kMinVibrationHz);
}

/// Linear map of yaw from [yaw_min, yaw_max] onto [amp_floor, 1], clamped.
inline double amplitude_from_angle(double yaw_deg, const HapticCalibration& c) {
  const double t = std::clamp((yaw_deg - c.yaw_min) / (c.yaw_max - c.yaw_min), 0.0, 1.0);
  return c.amp_floor + t * (1.0 - c.amp_floor);
}

/// Speeds |v| over every in-epoch frame, in frame order.
inline std::vector<double> epoch_speeds(const std::vector<CommandEpoch>& epochs, const VelocitySeries& velocity) {
  std::vector<double> out;
  for (const CommandEpoch& e : epochs) {
    for (FrameIndex f = e.start_frame; f <= e.end_frame; ++f) {
      if (const auto& v = velocity.values.at(static_cast<std::size_t>(f))) out.push_back(std::abs(*v));
    }
  }
  return out;
}

inline HapticCalibration calibrate_haptics(const std::vector<CommandEpoch>& epochs, const VelocitySeries& velocity,
                                           const HapticsConfig& cfg = {}) {
  HapticCalibration c{0.0, 1.0, cfg.yaw_min, cfg.yaw_max, cfg.amp_floor};
  std::vector<double> speeds = epoch_speeds(epochs, velocity);
  std::sort(speeds.begin(), speeds.end());
  if (!speeds.empty()) {
    c.v_min = detail::percentile_sorted(speeds, cfg.v_min_percentile);
    c.v_max = detail::percentile_sorted(speeds, cfg.v_max_percentile);
  }
  if (cfg.v_min) c.v_min = *cfg.v_min;
  if (cfg.v_max) c.v_max = *cfg.v_max;
  if (!(c.v_max > c.v_min)) c.v_max = c.v_min + 1.0;
  c.validate();
  return c;
}

/// Natural walking range of the left forearm: [p5, p95] of yaw and pitch
/// over the calibration window, widened by `margin_deg`.
inline WalkingBand estimate_walking_band(const PoseSeries& left_forearm, FrameIndex begin, FrameIndex end,
                                         double margin_deg = 5.0, double min_seconds = 2.0) {
  std::vector<double> yaw;
  std::vector<double> pitch;
  const FrameIndex stop = std::min<FrameIndex>(end, static_cast<FrameIndex>(left_forearm.values.size()));
  for (FrameIndex f = std::max<FrameIndex>(begin, 0); f < stop; ++f) {
    if (const auto& p = left_forearm.values[static_cast<std::size_t>(f)]) {
      yaw.push_back(p->yaw_deg);
      pitch.push_back(p->pitch_deg);
    }
  }
  if (static_cast<double>(yaw.size()) < min_seconds * left_forearm.fps) {
    throw Error(ErrorCode::InsufficientCalibration,
                "calibration window holds " + std::to_string(yaw.size()) + " samples");
  }
  std::sort(yaw.begin(), yaw.end());
  std::sort(pitch.begin(), pitch.end());
  auto band = [margin_deg](const std::vector<double>& s) {
    return AngleBand{detail::percentile_sorted(s, 5.0) - margin_deg, detail::percentile_sorted(s, 95.0) + margin_deg};
  };
  return {band(yaw), band(pitch)};
}

namespace detail {
inline double band_excursion(double v, const AngleBand& b) {
  if (v < b.lo_deg) return b.lo_deg - v;
  if (v > b.hi_deg) return v - b.hi_deg;
  return 0.0;
}
}  // namespace detail

/// One Left event per run of at least `alert_sustain_frames` consecutive
/// frames with yaw or pitch outside the walking band. Amplitude scales with
/// the largest excursion in the run.
inline std::vector<HapticEvent> left_hand_alerts(const PoseSeries& left_forearm, const WalkingBand& band,
                                                 const HapticsConfig& cfg = {}) {
  std::vector<HapticEvent> out;
  std::optional<FrameIndex> run_start;
  double run_peak = 0.0;
  auto flush = [&](FrameIndex end_exclusive) {
    if (run_start && end_exclusive - *run_start >= cfg.alert_sustain_frames) {
      out.push_back({Hand::Left, *run_start, static_cast<int>(end_exclusive - *run_start), cfg.alert_frequency_hz,
                     std::min(1.0, run_peak / cfg.alert_full_scale_deg)});
    }
    run_start.reset();
    run_peak = 0.0;
  };
  const auto n = static_cast<FrameIndex>(left_forearm.values.size());
  for (FrameIndex f = 0; f < n; ++f) {
    const auto& p = left_forearm.values[static_cast<std::size_t>(f)];
    const double exc = p ? std::max(detail::band_excursion(p->yaw_deg, band.yaw_band),
                                    detail::band_excursion(p->pitch_deg, band.pitch_band))
                         : 0.0;
    if (exc > 0.0) {
      if (!run_start) run_start = f;
      run_peak = std::max(run_peak, exc);
    } else {
      flush(f);
    }
  }
  flush(n);
  return out;
}

/// Right-hand events inside each epoch. Consecutive frames merge into one
/// event while frequency stays within `merge_frequency_hz` and amplitude
/// within `merge_amplitude` of the run's first frame. An event reports the
/// frequency of its fastest frame and its largest amplitude.
inline std::vector<HapticEvent> right_hand_events(const std::vector<CommandEpoch>& epochs,
                                                  const VelocitySeries& velocity, const AngleSeries& yaw,
                                                  const HapticCalibration& calib, const HapticsConfig& cfg = {}) {
  std::vector<HapticEvent> out;
  for (const CommandEpoch& e : epochs) {
    if (cfg.right_mode == RightHandMode::OnsetOnly) {
      out.push_back({Hand::Right, e.start_frame, static_cast<int>(e.length()),
                     frequency_from_velocity(e.peak_velocity_deg_s, calib),
                     amplitude_from_angle(e.peak_angles.yaw_deg, calib)});
      continue;
    }
    struct Run {
      FrameIndex start{0};
      FrameIndex last{0};
      double first_freq{0.0}, first_amp{0.0};
      double best_speed{0.0}, freq{0.0}, amp{0.0};
    };
    Run run;
    bool open = false;
    auto flush = [&] {
      if (open) out.push_back({Hand::Right, run.start, static_cast<int>(run.last - run.start + 1), run.freq, run.amp});
      open = false;
    };
    for (FrameIndex f = e.start_frame; f <= e.end_frame; ++f) {
      const auto& v = velocity.values.at(static_cast<std::size_t>(f));
      const auto& y = yaw.values.at(static_cast<std::size_t>(f));
      if (!v || !y) {
        flush();
        continue;
      }
      const double freq = frequency_from_velocity(*v, calib);
      const double amp = amplitude_from_angle(*y, calib);
      const double speed = std::abs(*v);
      if (open && run.last == f - 1 && std::abs(freq - run.first_freq) < cfg.merge_frequency_hz &&
          std::abs(amp - run.first_amp) < cfg.merge_amplitude) {
        run.last = f;
        if (speed > run.best_speed) {
          run.best_speed = speed;
          run.freq = freq;
        }
        run.amp = std::max(run.amp, amp);
      } else {
        flush();
        run = Run{f, f, freq, amp, speed, freq, amp};
        open = true;
      }
    }
    flush();
  }
  return out;
}

inline void sort_track(std::vector<HapticEvent>& track) {
  std::stable_sort(track.begin(), track.end(), [](const HapticEvent& a, const HapticEvent& b) {
    return std::tie(a.start_frame, a.hand) < std::tie(b.start_frame, b.hand);
  });
}

/// Right-hand command events plus left-hand walking alerts, sorted by
/// start frame.
inline std::vector<HapticEvent> synthesize_haptic_track(const std::vector<CommandEpoch>& epochs,
                                                        const VelocitySeries& right_velocity,
                                                        const AngleSeries& right_yaw,
                                                        const HapticCalibration& calib,
                                                        const PoseSeries* left_forearm,
                                                        const std::optional<WalkingBand>& band,
                                                        const HapticsConfig& cfg = {}) {
  std::vector<HapticEvent> track = right_hand_events(epochs, right_velocity, right_yaw, calib, cfg);
  if (left_forearm && band) {
    auto left = left_hand_alerts(*left_forearm, *band, cfg);
    track.insert(track.end(), left.begin(), left.end());
  }
  sort_track(track);
  return track;
}

}  // namespace guidecue
