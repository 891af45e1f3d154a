#pragma once

// Derived artifacts written next to a session: angle caches, epochs,
// triggers, haptic track, practice scores and the session report.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecue/analytics.hpp"
#include "guidecue/detail/json_util.hpp"
#include "guidecue/haptics.hpp"
#include "guidecue/pipeline.hpp"
#include "guidecue/practice.hpp"
#include "guidecue/practice_pose.hpp"

namespace guidecue {

inline constexpr const char* kEpochsFile = "epochs.jsonl";
inline constexpr const char* kTriggersFile = "triggers.jsonl";
inline constexpr const char* kAnglesFile = "angles.jsonl";
inline constexpr const char* kHapticsFile = "haptics.jsonl";
inline constexpr const char* kScoresFile = "scores.jsonl";
inline constexpr const char* kReportFile = "report.json";

inline nlohmann::json epoch_to_json(const CommandEpoch& e) {
  nlohmann::json status = nullptr;
  if (e.dog_status_at_peak) status = std::string(to_string(*e.dog_status_at_peak));
  return {{"start_frame", e.start_frame},
          {"peak_frame", e.peak_frame},
          {"end_frame", e.end_frame},
          {"peak_yaw_deg", e.peak_angles.yaw_deg},
          {"peak_pitch_deg", e.peak_angles.pitch_deg},
          {"peak_velocity_deg_s", e.peak_velocity_deg_s},
          {"category", std::string(to_string(e.category))},
          {"dog_status", status}};
}

inline CommandEpoch epoch_from_json(const nlohmann::json& j) {
  CommandEpoch e;
  e.start_frame = j.at("start_frame").get<FrameIndex>();
  e.peak_frame = j.at("peak_frame").get<FrameIndex>();
  e.end_frame = j.at("end_frame").get<FrameIndex>();
  e.peak_angles = {j.at("peak_yaw_deg").get<double>(), j.at("peak_pitch_deg").get<double>()};
  e.peak_velocity_deg_s = j.at("peak_velocity_deg_s").get<double>();
  e.category = command_category_from_string(j.at("category").get<std::string>());
  if (const auto it = j.find("dog_status"); it != j.end() && !it->is_null()) {
    e.dog_status_at_peak = dog_status_from_string(it->get<std::string>());
  }
  return e;
}

inline nlohmann::json trigger_to_json(const TriggerEvent& t) {
  return {{"frame", t.frame}, {"head_angle_deg", t.head_angle_deg}, {"sustained_frames", t.sustained_frames}};
}

inline TriggerEvent trigger_from_json(const nlohmann::json& j) {
  return {j.at("frame").get<FrameIndex>(), j.at("head_angle_deg").get<double>(), j.at("sustained_frames").get<int>()};
}

inline nlohmann::json haptic_to_json(const HapticEvent& h) {
  return {{"hand", std::string(to_string(h.hand))},
          {"start_frame", h.start_frame},
          {"duration_frames", h.duration_frames},
          {"frequency_hz", h.frequency_hz},
          {"amplitude", h.amplitude}};
}

inline HapticEvent haptic_from_json(const nlohmann::json& j) {
  HapticEvent h;
  h.hand = hand_from_string(j.at("hand").get<std::string>());
  h.start_frame = j.at("start_frame").get<FrameIndex>();
  h.duration_frames = j.at("duration_frames").get<int>();
  h.frequency_hz = j.at("frequency_hz").get<double>();
  h.amplitude = j.at("amplitude").get<double>();
  return h;
}

inline nlohmann::json score_to_json(const PracticeScore& s) {
  return {{"epoch_id", s.epoch_id},
          {"timing_offset_ms", detail::optional_to_json(s.timing_offset_ms)},
          {"yaw_error_deg", detail::optional_to_json(s.yaw_error_deg)},
          {"pitch_error_deg", detail::optional_to_json(s.pitch_error_deg)},
          {"velocity_error_deg_s", detail::optional_to_json(s.velocity_error_deg_s)},
          {"category_match", s.category_match},
          {"composite", s.composite}};
}

inline PracticeScore score_from_json(const nlohmann::json& j) {
  PracticeScore s;
  s.epoch_id = j.at("epoch_id").get<std::int64_t>();
  s.timing_offset_ms = detail::optional_from_json<double>(j.at("timing_offset_ms"));
  s.yaw_error_deg = detail::optional_from_json<double>(j.at("yaw_error_deg"));
  s.pitch_error_deg = detail::optional_from_json<double>(j.at("pitch_error_deg"));
  s.velocity_error_deg_s = detail::optional_from_json<double>(j.at("velocity_error_deg_s"));
  s.category_match = j.at("category_match").get<bool>();
  s.composite = j.at("composite").get<double>();
  return s;
}

inline nlohmann::json histogram_to_json(const Histogram& h) {
  return {{"bin_width", h.bin_width}, {"lo", h.lo},         {"hi", h.hi},
          {"n", h.n},                 {"counts", h.counts}, {"underflow", h.underflow},
          {"overflow", h.overflow}};
}

inline Histogram histogram_from_json(const nlohmann::json& j) {
  Histogram h;
  h.bin_width = j.at("bin_width").get<double>();
  h.lo = j.at("lo").get<double>();
  h.hi = j.at("hi").get<double>();
  h.n = j.at("n").get<std::int64_t>();
  h.counts = j.at("counts").get<std::vector<std::int64_t>>();
  h.underflow = j.value("underflow", std::int64_t{0});
  h.overflow = j.value("overflow", std::int64_t{0});
  return h;
}

inline nlohmann::json report_to_json(const SessionReport& r) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [c, n] : r.category_counts) cats[std::string(to_string(c))] = n;
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [s, n] : r.status_counts) stats[std::string(to_string(s))] = n;
  return {{"dataset_name", r.dataset_name},
          {"command_count", r.command_count},
          {"category_counts", cats},
          {"status_counts", stats},
          {"head_angle_hist", histogram_to_json(r.head_angle_hist)},
          {"body_angle_hist", histogram_to_json(r.body_angle_hist)},
          {"yaw_hist", histogram_to_json(r.yaw_hist)},
          {"pitch_hist", histogram_to_json(r.pitch_hist)},
          {"velocity_hist", histogram_to_json(r.velocity_hist)}};
}

inline SessionReport report_from_json(const nlohmann::json& j) {
  try {
    SessionReport r;
    r.dataset_name = j.at("dataset_name").get<std::string>();
    r.command_count = j.at("command_count").get<std::int64_t>();
    for (const auto& [k, v] : j.at("category_counts").items()) r.category_counts[command_category_from_string(k)] = v;
    for (const auto& [k, v] : j.at("status_counts").items()) r.status_counts[dog_status_from_string(k)] = v;
    r.head_angle_hist = histogram_from_json(j.at("head_angle_hist"));
    r.body_angle_hist = histogram_from_json(j.at("body_angle_hist"));
    r.yaw_hist = histogram_from_json(j.at("yaw_hist"));
    r.pitch_hist = histogram_from_json(j.at("pitch_hist"));
    r.velocity_hist = histogram_from_json(j.at("velocity_hist"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("report: ") + e.what());
  }
}

inline SessionReport read_report(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text_file(dir / kReportFile));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("report.json: ") + e.what());
  }
  return report_from_json(j);
}

/// One line per frame with every per-frame angle the analysis derived.
inline nlohmann::json angles_row_to_json(const SessionAnalysis& a, FrameIndex f) {
  const auto i = static_cast<std::size_t>(f);
  auto opt = [](const std::optional<double>& v) { return detail::optional_to_json(v); };
  auto yaw = [](const std::optional<PoseAngles>& p) {
    return p ? nlohmann::json(p->yaw_deg) : nlohmann::json(nullptr);
  };
  auto pitch = [](const std::optional<PoseAngles>& p) {
    return p ? nlohmann::json(p->pitch_deg) : nlohmann::json(nullptr);
  };
  return {{"frame_index", f},
          {"right_yaw_deg", yaw(a.right_arm.values[i])},
          {"right_pitch_deg", pitch(a.right_arm.values[i])},
          {"right_yaw_smoothed_deg", opt(a.right_yaw_smoothed.values[i])},
          {"right_velocity_deg_s", opt(a.right_velocity.values[i])},
          {"head_deg", opt(a.head.values[i])},
          {"body_deg", opt(a.body.values[i])},
          {"left_yaw_deg", yaw(a.left_forearm.values[i])},
          {"left_pitch_deg", pitch(a.left_forearm.values[i])}};
}

template <class T, class Fn>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items, Fn&& to_json) {
  std::string out;
  for (const T& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  detail::write_text_file(path, out);
}

template <class Fn>
auto read_jsonl(const std::filesystem::path& path, Fn&& from_json) {
  using T = decltype(from_json(nlohmann::json{}));
  std::vector<T> out;
  const auto lines = detail::split_lines(detail::read_text_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::blank(lines[i])) continue;
    try {
      out.push_back(from_json(nlohmann::json::parse(lines[i])));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, path.filename().string() + ": " + e.what(), i + 1);
    } catch (const Error& e) {
      throw Error(e.code(), path.filename().string() + ": " + e.detail(), i + 1);
    }
  }
  return out;
}

inline void write_analysis(const SessionAnalysis& a, const std::filesystem::path& dir) {
  std::string rows;
  for (FrameIndex f = 0; f < a.frame_count; ++f) {
    rows += angles_row_to_json(a, f).dump();
    rows += '\n';
  }
  detail::write_text_file(dir / kAnglesFile, rows);
  write_jsonl(dir / kEpochsFile, a.epochs, epoch_to_json);
  write_jsonl(dir / kTriggersFile, a.triggers, trigger_to_json);
}

inline void write_haptics(const SessionAnalysis& a, const std::filesystem::path& dir) {
  write_jsonl(dir / kHapticsFile, a.haptic_track, haptic_to_json);
}

inline void write_report(const SessionReport& r, const std::filesystem::path& dir) {
  detail::write_text_file(dir / kReportFile, report_to_json(r).dump(2) + "\n");
}

/// Practice pose line: {"frame":N,"seq":K,"right_arm":[[x,y,c]x3]}, the
/// practice_pose wire message without its type tag.
inline PracticePose practice_pose_from_json(const nlohmann::json& j) {
  PracticePose p;
  p.frame_index = j.at("frame").get<FrameIndex>();
  p.received_seq = j.at("seq").get<std::int64_t>();
  p.right_arm = arm_from_json(j.at("right_arm"), ArmSide::Right);
  return p;
}

inline nlohmann::json practice_pose_to_json(const PracticePose& p) {
  return {{"frame", p.frame_index}, {"seq", p.received_seq}, {"right_arm", arm_to_json(p.right_arm)}};
}

inline std::vector<PracticePose> read_practice_poses(const std::filesystem::path& path) {
  return read_jsonl(path, practice_pose_from_json);
}

}  // namespace guidecue
