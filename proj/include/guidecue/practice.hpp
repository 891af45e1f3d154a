#pragma once

// Practice scoring: matching learner epochs to expert epochs, per-epoch
// deviation scores, and the incremental (live) practice pipeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "guidecue/command_analysis.hpp"
#include "guidecue/cue_engine.hpp"
#include "guidecue/error.hpp"
#include "guidecue/kinematics.hpp"
#include "guidecue/pipeline.hpp"
#include "guidecue/practice_pose.hpp"

namespace guidecue {

struct ScoreWeights {
  double yaw{0.4};
  double pitch{0.2};
  double timing{0.2};
  double velocity{0.2};

  void validate() const {
    if (yaw < 0 || pitch < 0 || timing < 0 || velocity < 0 ||
        std::abs(yaw + pitch + timing + velocity - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "score weights must be non-negative and sum to 1");
    }
  }
};

struct ScoringConfig {
  ScoreWeights weights;
  int match_window_frames{45};
  double yaw_norm_deg{30.0};
  double pitch_norm_deg{30.0};
  double timing_norm_ms{1000.0};
  /// Velocity normaliser; the expert session's calibrated v_max when unset.
  std::optional<double> velocity_norm_deg_s;
};

/// Deviation of one practice epoch from its expert epoch. Error fields are
/// empty for a miss.
struct PracticeScore {
  std::int64_t epoch_id{0};
  std::optional<double> timing_offset_ms;
  std::optional<double> yaw_error_deg;
  std::optional<double> pitch_error_deg;
  std::optional<double> velocity_error_deg_s;
  bool category_match{false};
  double composite{0.0};

  bool operator==(const PracticeScore&) const = default;
};

struct EpochMatch {
  std::size_t expert{0};
  std::optional<std::size_t> practice;

  bool operator==(const EpochMatch&) const = default;
};

/// Greedy nearest-peak matching within +/- window frames. Candidate pairs
/// are taken in order of peak distance (ties: earlier expert, then earlier
/// practice); each practice epoch is used at most once.
inline std::vector<EpochMatch> match_epochs(const std::vector<CommandEpoch>& expert,
                                            const std::vector<CommandEpoch>& practice, int window_frames = 45) {
  struct Candidate {
    FrameIndex distance;
    std::size_t e, p;
  };
  std::vector<Candidate> cands;
  for (std::size_t e = 0; e < expert.size(); ++e) {
    for (std::size_t p = 0; p < practice.size(); ++p) {
      const FrameIndex d = std::abs(practice[p].peak_frame - expert[e].peak_frame);
      if (d <= window_frames) cands.push_back({d, e, p});
    }
  }
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& a, const Candidate& b) { return std::tie(a.distance, a.e, a.p) < std::tie(b.distance, b.e, b.p); });
  std::vector<EpochMatch> out(expert.size());
  std::vector<bool> used(practice.size(), false);
  for (std::size_t e = 0; e < expert.size(); ++e) out[e].expert = e;
  for (const Candidate& c : cands) {
    if (out[c.e].practice || used[c.p]) continue;
    out[c.e].practice = c.p;
    used[c.p] = true;
  }
  return out;
}

/// 1 - sum(w_i * err_i / norm_i), clamped to [0, 1].
inline double composite_score(double yaw_err, double pitch_err, double timing_ms, double velocity_err,
                              const ScoreWeights& w, double yaw_norm, double pitch_norm, double timing_norm,
                              double velocity_norm) {
  const double loss = w.yaw * std::abs(yaw_err) / yaw_norm + w.pitch * std::abs(pitch_err) / pitch_norm +
                      w.timing * std::abs(timing_ms) / timing_norm + w.velocity * std::abs(velocity_err) / velocity_norm;
  return std::clamp(1.0 - loss, 0.0, 1.0);
}

inline PracticeScore score_practice(std::int64_t epoch_id, const CommandEpoch& expert, const CommandEpoch* practice,
                                    double fps, double velocity_norm, const ScoringConfig& cfg = {}) {
  PracticeScore s;
  s.epoch_id = epoch_id;
  if (!practice) return s;
  const double timing = static_cast<double>(practice->peak_frame - expert.peak_frame) / fps * 1000.0;
  const double yaw = std::abs(practice->peak_angles.yaw_deg - expert.peak_angles.yaw_deg);
  const double pitch = std::abs(practice->peak_angles.pitch_deg - expert.peak_angles.pitch_deg);
  const double vel = std::abs(std::abs(practice->peak_velocity_deg_s) - std::abs(expert.peak_velocity_deg_s));
  s.timing_offset_ms = timing;
  s.yaw_error_deg = yaw;
  s.pitch_error_deg = pitch;
  s.velocity_error_deg_s = vel;
  s.category_match = practice->category == expert.category;
  s.composite = composite_score(yaw, pitch, timing, vel, cfg.weights, cfg.yaw_norm_deg, cfg.pitch_norm_deg,
                                cfg.timing_norm_ms, velocity_norm);
  return s;
}

inline double velocity_norm(const SessionAnalysis& expert, const ScoringConfig& cfg) {
  const double v = cfg.velocity_norm_deg_s.value_or(expert.haptic_calibration.v_max);
  return v > 0.0 ? v : 1.0;
}

/// Practice right-arm pose series against the expert recording's marker
/// axes. Later poses for the same frame replace earlier ones.
inline PoseSeries practice_pose_series(const SessionAnalysis& expert, const std::vector<PracticePose>& poses) {
  PoseSeries out{std::vector<std::optional<PoseAngles>>(static_cast<std::size_t>(expert.frame_count)), expert.fps,
                 Subject::RightArm};
  for (const PracticePose& p : poses) {
    if (p.frame_index < 0 || p.frame_index >= expert.frame_count) continue;
    const auto& ax = expert.axes.at(p.frame_index);
    if (!ax) continue;
    try {
      out.values[static_cast<std::size_t>(p.frame_index)] =
          pose_angles(arm_vector(p.right_arm, expert.config.kinematics.right_endpoint), *ax);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateVector) throw;
    }
  }
  return out;
}

struct PracticeEpochs {
  PoseSeries raw;
  AngleSeries smoothed;
  VelocitySeries velocity;
  std::vector<CommandEpoch> epochs;
};

/// Batch practice pipeline: same kinematics and segmentation as the expert.
inline PracticeEpochs practice_epochs_batch(const SessionAnalysis& expert, const std::vector<PracticePose>& poses) {
  PracticeEpochs out;
  out.raw = practice_pose_series(expert, poses);
  out.smoothed = smooth_series(out.raw.yaw(), expert.config.kinematics.smoothing_window);
  out.velocity = angular_velocity(out.smoothed);
  if (!out.smoothed.present().empty()) out.epochs = segment_commands(out.smoothed, expert.config.segmentation);
  for (CommandEpoch& e : out.epochs) describe_epoch(e, out.raw, out.velocity, nullptr, std::nullopt);
  return out;
}

/// Scores for every expert epoch; unmatched expert epochs score as misses.
inline std::vector<PracticeScore> score_session(const SessionAnalysis& expert, const std::vector<PracticePose>& poses,
                                                const ScoringConfig& cfg = {}) {
  cfg.weights.validate();
  const PracticeEpochs practice = practice_epochs_batch(expert, poses);
  const double vnorm = velocity_norm(expert, cfg);
  std::vector<PracticeScore> out;
  for (const EpochMatch& m : match_epochs(expert.epochs, practice.epochs, cfg.match_window_frames)) {
    const CommandEpoch* p = m.practice ? &practice.epochs[*m.practice] : nullptr;
    out.push_back(score_practice(static_cast<std::int64_t>(m.expert), expert.epochs[m.expert], p, expert.fps, vnorm, cfg));
  }
  return out;
}

/// Incremental practice pipeline for one stream.
///
/// Poses are smoothed with the expert's window and segmented with the
/// expert's rest level, so a completed stream yields the same epochs as the
/// batch pipeline run with that rest level. A frame is settled once a pose
/// for a later frame arrives; epochs are finalized when the segmenter
/// closes them, i.e. within smoothing half-window + 1 frames of retraction.
class LiveAnnotator {
 public:
  struct Update {
    bool dropped{false};
    std::optional<OverlaySpec> overlay;
    std::vector<CommandEpoch> finalized;
    std::vector<PracticeScore> scores;
  };

  LiveAnnotator(const SessionAnalysis& expert, ScoringConfig cfg = {})
      : expert_(expert),
        cfg_(std::move(cfg)),
        half_(static_cast<FrameIndex>(expert.config.kinematics.smoothing_window / 2)),
        rest_level_(std::isnan(expert.rest_level_deg) ? 0.0 : expert.rest_level_deg),
        segmenter_(rest_level_, expert.config.segmentation),
        raw_(static_cast<std::size_t>(expert.frame_count)),
        smoothed_(static_cast<std::size_t>(expert.frame_count)),
        matched_(expert.epochs.size(), false) {
    cfg_.weights.validate();
  }

  std::size_t dropped_count() const { return dropped_; }
  const std::vector<CommandEpoch>& epochs() const { return epochs_; }
  double rest_level() const { return rest_level_; }

  Update push(const PracticePose& pose) {
    Update u;
    if ((last_seq_ && pose.received_seq <= *last_seq_) || pose.frame_index < 0 ||
        pose.frame_index >= expert_.frame_count) {
      ++dropped_;
      u.dropped = true;
      return u;
    }
    last_seq_ = pose.received_seq;

    std::vector<Vec2> line = detail::arm_polyline(pose.right_arm);
    u.overlay = OverlaySpec{OverlayKind::Segment, std::move(line), std::string(style::kPracticePose)};

    if (latest_ && pose.frame_index < *latest_) restart(pose.frame_index, u);
    latest_ = pose.frame_index;
    record(pose);
    // Frames before the newest one can no longer change.
    advance(pose.frame_index - 1, u);
    return u;
  }

  /// Settles every remaining frame and closes an open epoch.
  Update finish() {
    Update u;
    if (latest_) {
      advance(*latest_, u, true);
      if (auto s = segmenter_.finish()) finalize(*s, u);
    }
    return u;
  }

 private:
  void record(const PracticePose& pose) {
    const auto& ax = expert_.axes.at(pose.frame_index);
    auto& slot = raw_[static_cast<std::size_t>(pose.frame_index)];
    slot.reset();
    if (!ax) return;
    try {
      slot = pose_angles(arm_vector(pose.right_arm, expert_.config.kinematics.right_endpoint), *ax);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateVector) throw;
    }
  }

  // Backward jump (seek): close the current take and start over from `frame`.
  void restart(FrameIndex frame, Update& u) {
    advance(*latest_, u, true);
    if (auto s = segmenter_.finish()) finalize(*s, u);
    for (std::size_t i = static_cast<std::size_t>(frame); i < raw_.size(); ++i) {
      raw_[i].reset();
      smoothed_[i].reset();
    }
    base_ = frame;
    next_ = frame;
  }

  std::optional<double> raw_yaw(FrameIndex f) const {
    const auto& p = raw_[static_cast<std::size_t>(f)];
    return p ? std::optional<double>(p->yaw_deg) : std::nullopt;
  }

  // Feeds smoothed samples to the segmenter for every frame whose
  // smoothing window is settled. `final` settles everything received.
  void advance(FrameIndex settled, Update& u, bool final = false) {
    const FrameIndex last_frame = expert_.frame_count - 1;
    while (next_ <= last_frame) {
      if (final ? next_ > *latest_ : next_ + half_ > settled) break;
      const FrameIndex t = next_++;
      if (raw_yaw(t)) {
        const FrameIndex lo = std::max(base_, t - half_);
        const FrameIndex hi = std::min(last_frame, t + half_);
        double sum = 0.0;
        int count = 0;
        for (FrameIndex k = lo; k <= hi; ++k) {
          if (auto v = raw_yaw(k)) {
            sum += *v;
            ++count;
          }
        }
        smoothed_[static_cast<std::size_t>(t)] = sum / count;
      }
      if (auto s = segmenter_.push(t, smoothed_[static_cast<std::size_t>(t)])) finalize(*s, u);
    }
  }

  std::optional<double> velocity_at(FrameIndex f) const {
    auto at = [&](FrameIndex k) -> std::optional<double> {
      if (k < base_ || k >= next_) return std::nullopt;
      return smoothed_[static_cast<std::size_t>(k)];
    };
    const auto c = at(f);
    if (!c) return std::nullopt;
    const bool first = f == 0;
    const bool last = f == expert_.frame_count - 1;
    if (first) {
      if (auto n = at(f + 1)) return (*n - *c) * expert_.fps;
      return std::nullopt;
    }
    if (last) {
      if (auto p = at(f - 1)) return (*c - *p) * expert_.fps;
      return std::nullopt;
    }
    auto p = at(f - 1);
    auto n = at(f + 1);
    if (p && n) return (*n - *p) * expert_.fps / 2.0;
    return std::nullopt;
  }

  void finalize(const EpochSpan& span, Update& u) {
    CommandEpoch e;
    e.start_frame = span.start;
    e.peak_frame = span.peak;
    e.end_frame = span.end;
    if (const auto& p = raw_[static_cast<std::size_t>(span.peak)]) e.peak_angles = *p;
    double best = -1.0;
    for (FrameIndex f = span.start; f <= span.end; ++f) {
      if (auto v = velocity_at(f); v && std::abs(*v) > best) {
        best = std::abs(*v);
        e.peak_velocity_deg_s = *v;
      }
    }
    e.category = classify_command(e.peak_angles.yaw_deg);
    epochs_.push_back(e);
    u.finalized.push_back(e);

    // Nearest unmatched expert epoch within the window; earlier wins ties.
    std::optional<std::size_t> best_expert;
    FrameIndex best_distance = 0;
    for (std::size_t i = 0; i < expert_.epochs.size(); ++i) {
      if (matched_[i]) continue;
      const FrameIndex d = std::abs(expert_.epochs[i].peak_frame - e.peak_frame);
      if (d <= cfg_.match_window_frames && (!best_expert || d < best_distance)) {
        best_expert = i;
        best_distance = d;
      }
    }
    if (!best_expert) return;
    matched_[*best_expert] = true;
    u.scores.push_back(score_practice(static_cast<std::int64_t>(*best_expert), expert_.epochs[*best_expert], &e,
                                      expert_.fps, velocity_norm(expert_, cfg_), cfg_));
  }

  const SessionAnalysis& expert_;
  ScoringConfig cfg_;
  FrameIndex half_;
  double rest_level_;
  EpochSegmenter segmenter_;
  std::vector<std::optional<PoseAngles>> raw_;
  OptionalValues smoothed_;
  std::vector<bool> matched_;
  std::vector<CommandEpoch> epochs_;
  std::optional<std::int64_t> last_seq_;
  std::optional<FrameIndex> latest_;
  FrameIndex base_{0};
  FrameIndex next_{0};
  std::size_t dropped_{0};
};

}  // namespace guidecue
