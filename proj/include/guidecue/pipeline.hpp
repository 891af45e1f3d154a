#pragma once

// Full per-session analysis: pose series, command epochs, head-turn
// triggers, walking band and the synthesized haptic track.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "guidecue/analytics.hpp"
#include "guidecue/command_analysis.hpp"
#include "guidecue/haptics.hpp"
#include "guidecue/kinematics.hpp"
#include "guidecue/session.hpp"

namespace guidecue {

struct StatusConfig {
  /// Fixed head-status bands; fitted from head angles at command peaks when unset.
  std::optional<StatusThresholds> thresholds;
};

struct AnalysisConfig {
  KinematicsConfig kinematics;
  SegmentationConfig segmentation;
  TriggerConfig triggers;
  StatusConfig status;
  HapticsConfig haptics;
  AnalyticsConfig analytics;
};

struct SessionAnalysis {
  std::string session_id;
  FrameIndex frame_count{0};
  double fps{30.0};
  AnalysisConfig config;

  AxesTrack axes;
  PoseSeries right_arm;            // raw yaw/pitch
  AngleSeries right_yaw_smoothed;  // detection signal
  VelocitySeries right_velocity;   // of the smoothed yaw
  AngleSeries head;                // raw
  AngleSeries head_smoothed;
  AngleSeries body;                // raw
  PoseSeries left_forearm;         // raw

  double rest_level_deg{std::numeric_limits<double>::quiet_NaN()};
  std::vector<CommandEpoch> epochs;
  std::optional<StatusThresholds> status_thresholds;
  std::vector<TriggerEvent> triggers;
  std::optional<WalkingBand> walking_band;
  HapticCalibration haptic_calibration;
  std::vector<HapticEvent> haptic_track;
};

/// Fills peak angles (raw), signed peak velocity (largest |v| in the span),
/// category and dog status for a segmented epoch.
inline void describe_epoch(CommandEpoch& e, const PoseSeries& raw, const VelocitySeries& velocity,
                           const AngleSeries* head, const std::optional<StatusThresholds>& thresholds) {
  if (const auto& p = raw.values.at(static_cast<std::size_t>(e.peak_frame))) e.peak_angles = *p;
  e.peak_velocity_deg_s = 0.0;
  double best = -1.0;
  for (FrameIndex f = e.start_frame; f <= e.end_frame; ++f) {
    if (const auto& v = velocity.values.at(static_cast<std::size_t>(f)); v && std::abs(*v) > best) {
      best = std::abs(*v);
      e.peak_velocity_deg_s = *v;
    }
  }
  e.category = classify_command(e.peak_angles.yaw_deg);
  e.dog_status_at_peak.reset();
  if (head && thresholds) {
    if (const auto& h = head->values.at(static_cast<std::size_t>(e.peak_frame))) {
      e.dog_status_at_peak = classify_dog_status(*h, *thresholds);
    }
  }
}

inline SessionAnalysis analyze(const Session& session, const AnalysisConfig& cfg = {}) {
  SessionAnalysis a;
  a.session_id = session.manifest.session_id;
  a.frame_count = session.manifest.frame_count;
  a.fps = session.manifest.fps;
  a.config = cfg;

  a.axes = axes_track(session, cfg.kinematics.marker_lookback_frames);
  a.right_arm = pose_series(session, a.axes, Subject::RightArm, cfg.kinematics);
  a.right_yaw_smoothed = smooth_series(a.right_arm.yaw(), cfg.kinematics.smoothing_window);
  a.right_velocity = angular_velocity(a.right_yaw_smoothed);
  a.head = pose_series(session, a.axes, Subject::DogHead, cfg.kinematics).yaw();
  a.head_smoothed = smooth_series(a.head, cfg.kinematics.smoothing_window);
  a.body = pose_series(session, a.axes, Subject::DogBack, cfg.kinematics).yaw();
  a.left_forearm = pose_series(session, a.axes, Subject::LeftForearm, cfg.kinematics);

  if (!a.right_yaw_smoothed.present().empty()) {
    a.rest_level_deg = estimate_rest_level(a.right_yaw_smoothed, cfg.segmentation);
    a.epochs = segment_commands(a.right_yaw_smoothed, cfg.segmentation);
  }

  a.status_thresholds = cfg.status.thresholds;
  if (!a.status_thresholds) {
    std::vector<double> at_peaks;
    for (const CommandEpoch& e : a.epochs) {
      if (const auto& h = a.head.values.at(static_cast<std::size_t>(e.peak_frame))) at_peaks.push_back(*h);
    }
    try {
      a.status_thresholds = fit_status_thresholds(at_peaks);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooFewSamples && e.code() != ErrorCode::DegenerateClusters) throw;
    }
  }
  for (CommandEpoch& e : a.epochs) describe_epoch(e, a.right_arm, a.right_velocity, &a.head, a.status_thresholds);

  a.triggers = detect_head_turn_triggers(a.head_smoothed, cfg.triggers);

  try {
    const HapticsConfig& h = cfg.haptics;
    a.walking_band = estimate_walking_band(a.left_forearm, h.calibration_start_frame,
                                           h.calibration_start_frame + h.calibration_frames, h.band_margin_deg,
                                           h.min_calibration_s);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientCalibration) throw;
  }

  a.haptic_calibration = calibrate_haptics(a.epochs, a.right_velocity, cfg.haptics);
  a.haptic_track = synthesize_haptic_track(a.epochs, a.right_velocity, a.right_arm.yaw(), a.haptic_calibration,
                                           &a.left_forearm, a.walking_band, cfg.haptics);
  return a;
}

inline SessionReport session_report(const SessionAnalysis& a, const std::string& dataset_name) {
  ReportInputs in;
  in.dataset_name = dataset_name;
  in.epochs = &a.epochs;
  in.head = &a.head;
  in.body = &a.body;
  in.right_arm = &a.right_arm;
  in.right_velocity = &a.right_velocity;
  return session_report(in, a.config.analytics);
}

}  // namespace guidecue
