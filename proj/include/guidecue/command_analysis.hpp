#pragma once

// Right-hand command segmentation, max-extension frame location, yaw-band
// command classification, dog head-status banding and head-turn triggers.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guidecue/detail/stats.hpp"
#include "guidecue/error.hpp"
#include "guidecue/kinematics.hpp"

namespace guidecue {

enum class CommandCategory { AttentionOrRightTurn, MovementControl, LeftFrontDirectional, Unclassified };

inline constexpr std::array<CommandCategory, 4> kAllCommandCategories{
    CommandCategory::AttentionOrRightTurn, CommandCategory::MovementControl,
    CommandCategory::LeftFrontDirectional, CommandCategory::Unclassified};

constexpr std::string_view to_string(CommandCategory c) {
  switch (c) {
    case CommandCategory::AttentionOrRightTurn: return "AttentionOrRightTurn";
    case CommandCategory::MovementControl: return "MovementControl";
    case CommandCategory::LeftFrontDirectional: return "LeftFrontDirectional";
    case CommandCategory::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

inline CommandCategory command_category_from_string(std::string_view s) {
  for (CommandCategory c : kAllCommandCategories)
    if (to_string(c) == s) return c;
  throw Error(ErrorCode::MalformedRecord, "unknown command category '" + std::string(s) + "'");
}

struct AngleBand {
  double lo_deg{0.0};
  double hi_deg{0.0};

  bool operator==(const AngleBand&) const = default;
};

/// Yaw band of a command category; nothing for Unclassified.
constexpr std::optional<AngleBand> category_band(CommandCategory c) {
  switch (c) {
    case CommandCategory::AttentionOrRightTurn: return AngleBand{90.0, 110.0};
    case CommandCategory::MovementControl: return AngleBand{110.0, 130.0};
    case CommandCategory::LeftFrontDirectional: return AngleBand{130.0, 150.0};
    case CommandCategory::Unclassified: return std::nullopt;
  }
  return std::nullopt;
}

/// Bands are half-open on the high side ([90,110), [110,130)) except the
/// top band, which is closed at 150.
constexpr CommandCategory classify_command(double peak_yaw_deg) {
  if (peak_yaw_deg >= 90.0 && peak_yaw_deg < 110.0) return CommandCategory::AttentionOrRightTurn;
  if (peak_yaw_deg >= 110.0 && peak_yaw_deg < 130.0) return CommandCategory::MovementControl;
  if (peak_yaw_deg >= 130.0 && peak_yaw_deg <= 150.0) return CommandCategory::LeftFrontDirectional;
  return CommandCategory::Unclassified;
}

enum class DogStatusCategory { WaitingUpright, WaitingTilted, WalkingAdjust };

inline constexpr std::array<DogStatusCategory, 3> kAllDogStatuses{
    DogStatusCategory::WaitingUpright, DogStatusCategory::WaitingTilted, DogStatusCategory::WalkingAdjust};

constexpr std::string_view to_string(DogStatusCategory s) {
  switch (s) {
    case DogStatusCategory::WaitingUpright: return "WaitingUpright";
    case DogStatusCategory::WaitingTilted: return "WaitingTilted";
    case DogStatusCategory::WalkingAdjust: return "WalkingAdjust";
  }
  return "WaitingUpright";
}

inline DogStatusCategory dog_status_from_string(std::string_view s) {
  for (DogStatusCategory c : kAllDogStatuses)
    if (to_string(c) == s) return c;
  throw Error(ErrorCode::MalformedRecord, "unknown dog status '" + std::string(s) + "'");
}

struct StatusThresholds {
  double low_high_split{0.0};
  double mid_high_split{0.0};

  bool operator==(const StatusThresholds&) const = default;

  void validate() const {
    if (!(0.0 < low_high_split && low_high_split < mid_high_split && mid_high_split < 180.0)) {
      throw Error(ErrorCode::InvalidArgument, "status thresholds must satisfy 0 < low < mid < 180");
    }
  }

  AngleBand band(DogStatusCategory s) const {
    switch (s) {
      case DogStatusCategory::WaitingUpright: return {0.0, low_high_split};
      case DogStatusCategory::WaitingTilted: return {low_high_split, mid_high_split};
      case DogStatusCategory::WalkingAdjust: return {mid_high_split, 180.0};
    }
    return {};
  }
};

struct CommandEpoch {
  FrameIndex start_frame{0};
  FrameIndex peak_frame{0};
  FrameIndex end_frame{0};
  PoseAngles peak_angles{};
  double peak_velocity_deg_s{0.0};
  CommandCategory category{CommandCategory::Unclassified};
  std::optional<DogStatusCategory> dog_status_at_peak;

  bool contains(FrameIndex f) const { return f >= start_frame && f <= end_frame; }
  FrameIndex length() const { return end_frame - start_frame + 1; }
  bool operator==(const CommandEpoch&) const = default;
};

struct TriggerEvent {
  FrameIndex frame{0};
  double head_angle_deg{0.0};
  int sustained_frames{0};

  bool operator==(const TriggerEvent&) const = default;
};

struct SegmentationConfig {
  /// Fixed rest level; estimated from the series when unset.
  std::optional<double> rest_level_deg;
  double rest_percentile{20.0};
  double enter_hysteresis_deg{10.0};
  double retract_drop_deg{15.0};
  int min_length_frames{6};
};

struct TriggerConfig {
  double turn_threshold_deg{45.0};
  double rearm_hysteresis_deg{5.0};
  int sustain_frames{5};
};

/// Closed epoch span from the segmenter.
struct EpochSpan {
  FrameIndex start{0};
  FrameIndex peak{0};
  FrameIndex end{0};
  double peak_value{0.0};

  bool operator==(const EpochSpan&) const = default;
};

/// Streaming hysteresis segmenter over a (smoothed) yaw signal.
///
/// An epoch opens when the signal rises above the enter level (rest +
/// enter hysteresis), or above a retraction trough + enter hysteresis. It
/// closes on the last sample before the signal falls `retract_drop_deg`
/// below the running peak or below the enter level. Absent samples are
/// skipped. Batch segmentation and live practice annotation share this
/// type, so both paths make identical decisions for identical input.
class EpochSegmenter {
 public:
  EpochSegmenter(double rest_level_deg, const SegmentationConfig& cfg)
      : enter_level_(rest_level_deg + cfg.enter_hysteresis_deg), cfg_(cfg) {}

  double enter_level() const { return enter_level_; }
  bool active() const { return state_ == State::Active; }

  std::optional<EpochSpan> push(FrameIndex frame, std::optional<double> value) {
    if (!value) return std::nullopt;
    const double y = *value;
    std::optional<EpochSpan> closed;
    switch (state_) {
      case State::Idle:
        if (y > enter_level_) open(frame, y);
        break;
      case State::Active:
        if (y > peak_value_) {
          peak_ = frame;
          peak_value_ = y;
        } else if (y < peak_value_ - cfg_.retract_drop_deg || y < enter_level_) {
          closed = close(last_present_);
          if (y < enter_level_) {
            state_ = State::Idle;
          } else {
            state_ = State::Retracting;
            trough_ = y;
          }
        }
        break;
      case State::Retracting:
        if (y < enter_level_) {
          state_ = State::Idle;
        } else if (y < trough_) {
          trough_ = y;
        } else if (y > trough_ + cfg_.enter_hysteresis_deg) {
          open(frame, y);
        }
        break;
    }
    last_present_ = frame;
    return closed;
  }

  /// Closes an epoch still open at the end of the stream.
  std::optional<EpochSpan> finish() {
    std::optional<EpochSpan> closed;
    if (state_ == State::Active) closed = close(last_present_);
    state_ = State::Idle;
    return closed;
  }

 private:
  enum class State { Idle, Active, Retracting };

  void open(FrameIndex frame, double y) {
    state_ = State::Active;
    start_ = peak_ = frame;
    peak_value_ = y;
  }

  std::optional<EpochSpan> close(FrameIndex end) const {
    if (end - start_ + 1 < cfg_.min_length_frames) return std::nullopt;
    return EpochSpan{start_, peak_, end, peak_value_};
  }

  State state_{State::Idle};
  double enter_level_;
  SegmentationConfig cfg_;
  FrameIndex start_{0};
  FrameIndex peak_{0};
  FrameIndex last_present_{0};
  double peak_value_{0.0};
  double trough_{0.0};
};

inline double estimate_rest_level(const AngleSeries& yaw, const SegmentationConfig& cfg) {
  if (cfg.rest_level_deg) return *cfg.rest_level_deg;
  auto present = yaw.present();
  if (present.empty()) throw Error(ErrorCode::EmptySeries, "yaw series has no samples");
  return detail::percentile(std::move(present), cfg.rest_percentile);
}

/// Epoch spans over a smoothed right-arm yaw series, in frame order.
inline std::vector<EpochSpan> segment_spans(const AngleSeries& yaw, const SegmentationConfig& cfg) {
  const double rest = estimate_rest_level(yaw, cfg);
  EpochSegmenter seg(rest, cfg);
  std::vector<EpochSpan> out;
  for (std::size_t i = 0; i < yaw.size(); ++i) {
    if (auto s = seg.push(static_cast<FrameIndex>(i), yaw.values[i])) out.push_back(*s);
  }
  if (auto s = seg.finish()) out.push_back(*s);
  return out;
}

/// Command epochs with spans and peaks set; peak angles, velocity, category
/// and dog status are filled in by `describe_epoch`.
inline std::vector<CommandEpoch> segment_commands(const AngleSeries& yaw, const SegmentationConfig& cfg = {}) {
  std::vector<CommandEpoch> out;
  for (const EpochSpan& s : segment_spans(yaw, cfg)) {
    CommandEpoch e;
    e.start_frame = s.start;
    e.peak_frame = s.peak;
    e.end_frame = s.end;
    e.peak_angles.yaw_deg = s.peak_value;
    out.push_back(e);
  }
  return out;
}

/// Argmax of `series` over [start, end]; earliest frame wins ties.
inline FrameIndex max_extension_frame(FrameIndex start, FrameIndex end, const AngleSeries& series) {
  if (start > end || start < 0 || end >= static_cast<FrameIndex>(series.size())) {
    throw Error(ErrorCode::InvalidArgument, "epoch span outside series");
  }
  std::optional<FrameIndex> best;
  double best_value = 0.0;
  for (FrameIndex f = start; f <= end; ++f) {
    const auto& v = series.values[static_cast<std::size_t>(f)];
    if (v && (!best || *v > best_value)) {
      best = f;
      best_value = *v;
    }
  }
  if (!best) throw Error(ErrorCode::AllAbsent, "no samples present in epoch span");
  return *best;
}

/// One-dimensional 3-means over head angles, seeded at the 10th/50th/90th
/// percentiles. Thresholds are the midpoints between adjacent centroids.
inline StatusThresholds fit_status_thresholds(std::vector<double> samples) {
  if (samples.size() < 3) throw Error(ErrorCode::TooFewSamples, "status fit needs at least 3 samples");
  std::sort(samples.begin(), samples.end());
  std::array<double, 3> c{detail::percentile_sorted(samples, 10.0), detail::percentile_sorted(samples, 50.0),
                          detail::percentile_sorted(samples, 90.0)};
  for (int iter = 0; iter < 1000; ++iter) {
    std::array<double, 3> sum{};
    std::array<std::size_t, 3> count{};
    for (double x : samples) {
      std::size_t k = 0;
      for (std::size_t j = 1; j < 3; ++j)
        if (std::abs(x - c[j]) < std::abs(x - c[k])) k = j;
      sum[k] += x;
      ++count[k];
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      if (count[j] == 0) continue;
      const double next = sum[j] / static_cast<double>(count[j]);
      shift = std::max(shift, std::abs(next - c[j]));
      c[j] = next;
    }
    if (shift < 1e-6) break;
  }
  std::sort(c.begin(), c.end());
  if (!(c[1] - c[0] > 1e-9 && c[2] - c[1] > 1e-9)) {
    throw Error(ErrorCode::DegenerateClusters, "head angles do not separate into three clusters");
  }
  StatusThresholds t{(c[0] + c[1]) / 2.0, (c[1] + c[2]) / 2.0};
  if (!(0.0 < t.low_high_split && t.mid_high_split < 180.0)) {
    throw Error(ErrorCode::DegenerateClusters, "fitted thresholds fall outside (0, 180)");
  }
  return t;
}

constexpr DogStatusCategory classify_dog_status(double head_angle_deg, const StatusThresholds& t) {
  if (head_angle_deg < t.low_high_split) return DogStatusCategory::WaitingUpright;
  if (head_angle_deg < t.mid_high_split) return DogStatusCategory::WaitingTilted;
  return DogStatusCategory::WalkingAdjust;
}

/// Head-turn events: the head angle stays below the turn threshold for
/// `sustain_frames` consecutive present samples. The event is stamped on the
/// frame completing the sustain run; the detector re-arms once the angle
/// climbs back above threshold + hysteresis.
inline std::vector<TriggerEvent> detect_head_turn_triggers(const AngleSeries& head, const TriggerConfig& cfg = {}) {
  std::vector<TriggerEvent> out;
  bool armed = true;
  int run = 0;
  std::optional<std::size_t> open_event;  // index into out while its dip continues
  for (std::size_t i = 0; i < head.size(); ++i) {
    const auto& v = head.values[i];
    const bool below = v && *v < cfg.turn_threshold_deg;
    if (below) {
      ++run;
      if (open_event) {
        out[*open_event].sustained_frames = run;
      } else if (armed && run >= cfg.sustain_frames) {
        out.push_back({static_cast<FrameIndex>(i), *v, run});
        open_event = out.size() - 1;
        armed = false;
      }
    } else {
      run = 0;
      open_event.reset();
      if (v && *v > cfg.turn_threshold_deg + cfg.rearm_hysteresis_deg) armed = true;
    }
  }
  return out;
}

}  // namespace guidecue
