#pragma once

// Session data model: keypoint groups per frame, the session manifest, and
// the on-disk session directory (manifest.json + keypoints.jsonl +
// optional annotations.jsonl).

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecue/detail/json_util.hpp"
#include "guidecue/error.hpp"
#include "guidecue/geometry.hpp"

namespace guidecue {

using FrameIndex = std::int64_t;

struct Keypoint {
  double x{0.0};
  double y{0.0};
  double confidence{1.0};

  Vec2 position() const { return {x, y}; }
  bool operator==(const Keypoint&) const = default;
};

enum class ArmSide { Left, Right };

/// Three arm keypoints. Left arm: (wrist, elbow, shoulder). Right arm:
/// (finger, wrist, elbow).
struct ArmKeypoints {
  ArmSide side{ArmSide::Right};
  std::array<Keypoint, 3> points{};

  const Keypoint& wrist() const { return side == ArmSide::Right ? points[1] : points[0]; }
  const Keypoint& elbow() const { return side == ArmSide::Right ? points[2] : points[1]; }
  // Right arm only.
  const Keypoint& finger() const { return points[0]; }
  // Left arm only.
  const Keypoint& shoulder() const { return points[2]; }

  static ArmKeypoints right(Keypoint finger, Keypoint wrist, Keypoint elbow) {
    return {ArmSide::Right, {finger, wrist, elbow}};
  }
  static ArmKeypoints left(Keypoint wrist, Keypoint elbow, Keypoint shoulder) {
    return {ArmSide::Left, {wrist, elbow, shoulder}};
  }

  bool operator==(const ArmKeypoints&) const = default;
};

struct DogKeypoints {
  std::array<Keypoint, 2> ears{};  // (left, right)
  Keypoint neck{};
  Keypoint scapula{};
  std::array<Keypoint, 2> forelimbs{};  // (left, right)
  Keypoint waist{};

  bool operator==(const DogKeypoints&) const = default;
};

/// Marker corners: top-left, top-right, bottom-right, bottom-left.
struct MarkerFrame {
  std::array<Keypoint, 4> corners{};

  std::array<Vec2, 4> positions() const {
    return {corners[0].position(), corners[1].position(), corners[2].position(),
            corners[3].position()};
  }
  bool operator==(const MarkerFrame&) const = default;
};

inline AxesFrame marker_axes(const MarkerFrame& marker) { return marker_axes(marker.positions()); }

struct FrameRecord {
  FrameIndex frame_index{0};
  double timestamp_s{0.0};
  std::optional<ArmKeypoints> left_arm;
  std::optional<ArmKeypoints> right_arm;
  std::optional<DogKeypoints> dog;
  std::optional<MarkerFrame> marker;

  bool operator==(const FrameRecord&) const = default;
};

/// Calls `fn(field_path, keypoint)` for every keypoint present in `record`.
template <class Fn>
void for_each_keypoint(const FrameRecord& record, Fn&& fn) {
  auto arm = [&](const char* name, const std::optional<ArmKeypoints>& a) {
    if (!a) return;
    for (std::size_t i = 0; i < 3; ++i) fn(std::string(name) + "[" + std::to_string(i) + "]", a->points[i]);
  };
  arm("left_arm", record.left_arm);
  arm("right_arm", record.right_arm);
  if (record.dog) {
    const DogKeypoints& d = *record.dog;
    fn("dog.ears[0]", d.ears[0]);
    fn("dog.ears[1]", d.ears[1]);
    fn("dog.neck", d.neck);
    fn("dog.scapula", d.scapula);
    fn("dog.forelimbs[0]", d.forelimbs[0]);
    fn("dog.forelimbs[1]", d.forelimbs[1]);
    fn("dog.waist", d.waist);
  }
  if (record.marker) {
    for (std::size_t i = 0; i < 4; ++i) fn("marker[" + std::to_string(i) + "]", record.marker->corners[i]);
  }
}

struct SessionManifest {
  std::string session_id;
  std::string dataset_name;
  double fps{30.0};
  FrameIndex frame_count{1};
  int frame_width{640};
  int frame_height{640};
  ViewParams view{};
  std::optional<std::int64_t> ground_truth_command_count;

  bool operator==(const SessionManifest&) const = default;

  void validate() const {
    if (!(fps > 0.0) || !std::isfinite(fps)) throw Error(ErrorCode::MalformedRecord, "manifest: fps must be > 0");
    if (frame_count < 1) throw Error(ErrorCode::MalformedRecord, "manifest: frame_count must be >= 1");
    if (frame_width <= 0 || frame_height <= 0) {
      throw Error(ErrorCode::MalformedRecord, "manifest: frame dimensions must be positive");
    }
    try {
      view.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord, "manifest view: " + e.detail());
    }
  }
};

/// Ground-truth command epoch as stored in annotations.jsonl.
struct AnnotatedEpoch {
  FrameIndex start_frame{0};
  FrameIndex peak_frame{0};
  FrameIndex end_frame{0};
  std::string category;

  bool operator==(const AnnotatedEpoch&) const = default;
};

/// A loaded session: immutable after construction, safe to share.
struct Session {
  SessionManifest manifest;
  std::vector<FrameRecord> frames;  // strictly increasing frame_index
  std::optional<std::vector<AnnotatedEpoch>> annotations;

  const FrameRecord* find(FrameIndex frame) const {
    auto it = std::lower_bound(frames.begin(), frames.end(), frame,
                               [](const FrameRecord& r, FrameIndex f) { return r.frame_index < f; });
    return (it != frames.end() && it->frame_index == frame) ? &*it : nullptr;
  }

  bool operator==(const Session&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind { Bounds, Range, Structure, Timing };

struct Violation {
  ViolationKind kind;
  std::string field;
  std::string message;
};

namespace detail {

inline bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) { return (q - p).cross(r - p); };
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 &&
         o4 != 0;
}

}  // namespace detail

/// Every invariant violation in `record`, each tagged with its field path.
inline std::vector<Violation> validate_frame(const FrameRecord& record, const SessionManifest& manifest) {
  std::vector<Violation> out;
  const double w = manifest.frame_width;
  const double h = manifest.frame_height;

  if (record.frame_index < 0 || record.frame_index >= manifest.frame_count) {
    out.push_back({ViolationKind::Structure, "frame_index",
                   "frame_index " + std::to_string(record.frame_index) + " outside [0, frame_count)"});
  }
  const double expected_t = static_cast<double>(record.frame_index) / manifest.fps;
  if (!(std::abs(record.timestamp_s - expected_t) <= 1e-9)) {
    out.push_back({ViolationKind::Timing, "timestamp_s", "timestamp does not equal frame_index / fps"});
  }

  for_each_keypoint(record, [&](const std::string& path, const Keypoint& k) {
    if (!(k.x >= 0.0 && k.x <= w)) {
      out.push_back({ViolationKind::Bounds, path + ".x", "x=" + std::to_string(k.x) + " outside [0, frame_width]"});
    }
    if (!(k.y >= 0.0 && k.y <= h)) {
      out.push_back({ViolationKind::Bounds, path + ".y", "y=" + std::to_string(k.y) + " outside [0, frame_height]"});
    }
    if (!(k.confidence >= 0.0 && k.confidence <= 1.0)) {
      out.push_back({ViolationKind::Range, path + ".confidence",
                     "confidence=" + std::to_string(k.confidence) + " outside [0, 1]"});
    }
  });

  if (record.left_arm && record.left_arm->side != ArmSide::Left) {
    out.push_back({ViolationKind::Structure, "left_arm", "left_arm carries right-arm roles"});
  }
  if (record.right_arm && record.right_arm->side != ArmSide::Right) {
    out.push_back({ViolationKind::Structure, "right_arm", "right_arm carries left-arm roles"});
  }

  if (record.marker) {
    const auto p = record.marker->positions();
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) {
        if ((p[i] - p[j]).norm() < 1e-9) {
          out.push_back({ViolationKind::Structure, "marker",
                         "corners " + std::to_string(i) + " and " + std::to_string(j) + " coincide"});
        }
      }
    }
    if (detail::segments_cross(p[0], p[1], p[2], p[3]) || detail::segments_cross(p[1], p[2], p[3], p[0])) {
      out.push_back({ViolationKind::Structure, "marker", "marker quadrilateral self-intersects"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON codecs

namespace detail {

inline json keypoint_to_json(const Keypoint& k) { return json::array({k.x, k.y, k.confidence}); }

inline Keypoint keypoint_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::MalformedRecord, std::string(what) + ": keypoint must be [x, y, confidence]");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::MalformedRecord, std::string(what) + ": non-numeric keypoint");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <std::size_t N>
json keypoints_to_json(const std::array<Keypoint, N>& pts) {
  json a = json::array();
  for (const auto& k : pts) a.push_back(keypoint_to_json(k));
  return a;
}

template <std::size_t N>
std::array<Keypoint, N> keypoints_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N) {
    throw Error(ErrorCode::MalformedRecord,
                std::string(what) + ": expected " + std::to_string(N) + " keypoints");
  }
  std::array<Keypoint, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = keypoint_from_json(j[i], what);
  return out;
}

}  // namespace detail

inline nlohmann::json arm_to_json(const ArmKeypoints& arm) { return detail::keypoints_to_json(arm.points); }

inline ArmKeypoints arm_from_json(const nlohmann::json& j, ArmSide side) {
  return {side, detail::keypoints_from_json<3>(j, side == ArmSide::Right ? "right_arm" : "left_arm")};
}

inline nlohmann::json dog_to_json(const DogKeypoints& d) {
  return {{"ears", detail::keypoints_to_json(d.ears)},
          {"neck", detail::keypoint_to_json(d.neck)},
          {"scapula", detail::keypoint_to_json(d.scapula)},
          {"forelimbs", detail::keypoints_to_json(d.forelimbs)},
          {"waist", detail::keypoint_to_json(d.waist)}};
}

inline DogKeypoints dog_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "dog: expected object");
  auto field = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) throw Error(ErrorCode::MalformedRecord, std::string("dog: missing ") + key);
    return *it;
  };
  DogKeypoints d;
  d.ears = detail::keypoints_from_json<2>(field("ears"), "dog.ears");
  d.neck = detail::keypoint_from_json(field("neck"), "dog.neck");
  d.scapula = detail::keypoint_from_json(field("scapula"), "dog.scapula");
  d.forelimbs = detail::keypoints_from_json<2>(field("forelimbs"), "dog.forelimbs");
  d.waist = detail::keypoint_from_json(field("waist"), "dog.waist");
  return d;
}

/// Keypoint groups of a frame, without the frame index. Absent groups are
/// omitted.
inline nlohmann::json keypoint_groups_to_json(const FrameRecord& r, bool include_right_arm = true) {
  nlohmann::json j = nlohmann::json::object();
  if (r.left_arm) j["left_arm"] = arm_to_json(*r.left_arm);
  if (r.right_arm && include_right_arm) j["right_arm"] = arm_to_json(*r.right_arm);
  if (r.dog) j["dog"] = dog_to_json(*r.dog);
  if (r.marker) j["marker"] = detail::keypoints_to_json(r.marker->corners);
  return j;
}

inline nlohmann::json frame_to_json(const FrameRecord& r) {
  nlohmann::json j = keypoint_groups_to_json(r);
  j["frame_index"] = r.frame_index;
  return j;
}

/// Parses one keypoints.jsonl record. Schema errors raise MalformedRecord.
inline FrameRecord frame_from_json(const nlohmann::json& j, double fps) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "record must be an object");
  auto idx = j.find("frame_index");
  if (idx == j.end() || !idx->is_number_integer()) {
    throw Error(ErrorCode::MalformedRecord, "frame_index missing or not an integer");
  }
  FrameRecord r;
  r.frame_index = idx->get<FrameIndex>();
  r.timestamp_s = static_cast<double>(r.frame_index) / fps;
  auto present = [&](const char* key) -> const nlohmann::json* {
    auto it = j.find(key);
    return (it == j.end() || it->is_null()) ? nullptr : &*it;
  };
  if (auto* a = present("left_arm")) r.left_arm = arm_from_json(*a, ArmSide::Left);
  if (auto* a = present("right_arm")) r.right_arm = arm_from_json(*a, ArmSide::Right);
  if (auto* d = present("dog")) r.dog = dog_from_json(*d);
  if (auto* m = present("marker")) r.marker = MarkerFrame{detail::keypoints_from_json<4>(*m, "marker")};
  return r;
}

inline nlohmann::json manifest_to_json(const SessionManifest& m) {
  nlohmann::json j = {
      {"session_id", m.session_id},
      {"dataset_name", m.dataset_name},
      {"fps", m.fps},
      {"frame_count", m.frame_count},
      {"frame_width", m.frame_width},
      {"frame_height", m.frame_height},
      {"view",
       {{"theta_deg", m.view.theta_deg},
        {"phi_deg", m.view.phi_deg},
        {"fov_deg", m.view.fov_deg},
        {"pano_width", m.view.pano_width},
        {"pano_height", m.view.pano_height}}},
  };
  if (m.ground_truth_command_count) j["ground_truth_command_count"] = *m.ground_truth_command_count;
  return j;
}

inline SessionManifest manifest_from_json(const nlohmann::json& j) {
  try {
    SessionManifest m;
    m.session_id = j.at("session_id").get<std::string>();
    m.dataset_name = j.at("dataset_name").get<std::string>();
    detail::read_if_present(j, "fps", m.fps);
    m.frame_count = j.at("frame_count").get<FrameIndex>();
    detail::read_if_present(j, "frame_width", m.frame_width);
    detail::read_if_present(j, "frame_height", m.frame_height);
    const auto& v = j.at("view");
    m.view.theta_deg = v.at("theta_deg").get<double>();
    m.view.phi_deg = v.at("phi_deg").get<double>();
    m.view.fov_deg = v.at("fov_deg").get<double>();
    m.view.pano_width = v.at("pano_width").get<int>();
    m.view.pano_height = v.at("pano_height").get<int>();
    m.view.out_width = m.frame_width;
    m.view.out_height = m.frame_height;
    detail::read_if_present(j, "ground_truth_command_count", m.ground_truth_command_count);
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("manifest: ") + e.what());
  }
}

inline nlohmann::json annotation_to_json(const AnnotatedEpoch& a) {
  return {{"start_frame", a.start_frame},
          {"peak_frame", a.peak_frame},
          {"end_frame", a.end_frame},
          {"category", a.category}};
}

inline AnnotatedEpoch annotation_from_json(const nlohmann::json& j) {
  try {
    return {j.at("start_frame").get<FrameIndex>(), j.at("peak_frame").get<FrameIndex>(),
            j.at("end_frame").get<FrameIndex>(), j.at("category").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("annotation: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Session directory I/O

struct LoadOptions {
  /// A keypoint group is dropped for a frame when any of its keypoints has
  /// a confidence below this floor.
  double confidence_floor{0.5};
};

/// Drops keypoint groups that contain a keypoint below `floor`.
inline void apply_confidence_floor(FrameRecord& r, double floor) {
  auto low = [floor](const auto& pts) {
    return std::any_of(pts.begin(), pts.end(), [floor](const Keypoint& k) { return k.confidence < floor; });
  };
  if (r.left_arm && low(r.left_arm->points)) r.left_arm.reset();
  if (r.right_arm && low(r.right_arm->points)) r.right_arm.reset();
  if (r.dog) {
    const DogKeypoints& d = *r.dog;
    const std::array<Keypoint, 7> all{d.ears[0], d.ears[1], d.neck, d.scapula, d.forelimbs[0], d.forelimbs[1], d.waist};
    if (low(all)) r.dog.reset();
  }
  if (r.marker && low(r.marker->corners)) r.marker.reset();
}

/// One problem found while checking a session directory.
struct Diagnostic {
  ErrorCode code;
  std::size_t line{0};  // 1-based line in keypoints.jsonl; 0 for file-level issues
  std::string field;
  std::string message;
};

namespace detail {

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

inline bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

inline SessionManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingManifest, "no manifest.json in " + dir.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("manifest.json: ") + e.what());
  }
  return manifest_from_json(j);
}

// Walks keypoints.jsonl, reporting each problem to `sink`. Returns records
// that parsed, in file order.
template <class Sink>
std::vector<FrameRecord> scan_keypoints(const std::filesystem::path& dir, const SessionManifest& manifest,
                                        Sink&& sink) {
  const auto path = dir / "keypoints.jsonl";
  if (!std::filesystem::exists(path)) {
    sink(Diagnostic{ErrorCode::IoFailure, 0, "keypoints.jsonl", "missing keypoint stream file"});
    return {};
  }
  const auto lines = split_lines(read_text_file(path));
  std::vector<FrameRecord> frames;
  std::optional<FrameIndex> last;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (blank(lines[i])) continue;
    FrameRecord r;
    try {
      r = frame_from_json(nlohmann::json::parse(lines[i]), manifest.fps);
    } catch (const nlohmann::json::exception& e) {
      sink(Diagnostic{ErrorCode::MalformedRecord, line_no, "", e.what()});
      continue;
    } catch (const Error& e) {
      sink(Diagnostic{e.code(), line_no, "", e.detail()});
      continue;
    }
    if (last && r.frame_index <= *last) {
      sink(Diagnostic{ErrorCode::NonMonotonicFrameIndex, line_no, "frame_index",
                      "frame_index " + std::to_string(r.frame_index) + " does not follow " +
                          std::to_string(*last)});
    }
    last = r.frame_index;
    for (const Violation& v : validate_frame(r, manifest)) {
      sink(Diagnostic{v.kind == ViolationKind::Bounds ? ErrorCode::DimensionMismatch : ErrorCode::MalformedRecord,
                      line_no, v.field, v.message});
    }
    frames.push_back(std::move(r));
  }
  return frames;
}

inline std::optional<std::vector<AnnotatedEpoch>> read_annotations(const std::filesystem::path& dir) {
  const auto path = dir / "annotations.jsonl";
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::vector<AnnotatedEpoch> out;
  const auto lines = split_lines(read_text_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    try {
      out.push_back(annotation_from_json(nlohmann::json::parse(lines[i])));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, std::string("annotations.jsonl: ") + e.what(), i + 1);
    } catch (const Error& e) {
      throw Error(e.code(), "annotations.jsonl: " + e.detail(), i + 1);
    }
  }
  return out;
}

}  // namespace detail

/// Loads and validates a session directory. The first problem found is
/// raised; use `check_session_dir` to collect all of them.
inline Session load_session(const std::filesystem::path& dir, const LoadOptions& options = {}) {
  Session s;
  s.manifest = detail::read_manifest(dir);
  s.frames = detail::scan_keypoints(dir, s.manifest, [](const Diagnostic& d) {
    std::string detail = d.field.empty() ? d.message : d.field + ": " + d.message;
    if (d.line == 0) throw Error(d.code, detail);
    throw Error(d.code, detail, d.line);
  });
  for (FrameRecord& r : s.frames) apply_confidence_floor(r, options.confidence_floor);
  s.annotations = detail::read_annotations(dir);
  if (s.annotations && s.manifest.ground_truth_command_count &&
      static_cast<std::int64_t>(s.annotations->size()) != *s.manifest.ground_truth_command_count) {
    throw Error(ErrorCode::MalformedRecord, "ground_truth_command_count does not match annotations.jsonl");
  }
  return s;
}

/// Every problem in a session directory, in file order. Empty when valid.
inline std::vector<Diagnostic> check_session_dir(const std::filesystem::path& dir) {
  std::vector<Diagnostic> out;
  SessionManifest manifest;
  try {
    manifest = detail::read_manifest(dir);
  } catch (const Error& e) {
    out.push_back({e.code(), 0, "manifest.json", e.detail()});
    return out;
  }
  detail::scan_keypoints(dir, manifest, [&](const Diagnostic& d) { out.push_back(d); });
  try {
    auto ann = detail::read_annotations(dir);
    if (ann && manifest.ground_truth_command_count &&
        static_cast<std::int64_t>(ann->size()) != *manifest.ground_truth_command_count) {
      out.push_back({ErrorCode::MalformedRecord, 0, "annotations.jsonl",
                     "ground_truth_command_count does not match annotation count"});
    }
  } catch (const Error& e) {
    out.push_back({e.code(), e.line().value_or(0), "annotations.jsonl", e.detail()});
  }
  return out;
}

inline void save_session(const Session& s, const std::filesystem::path& dir) {
  detail::write_text_file(dir / "manifest.json", manifest_to_json(s.manifest).dump(2) + "\n");
  std::string lines;
  for (const FrameRecord& r : s.frames) lines += frame_to_json(r).dump() + "\n";
  detail::write_text_file(dir / "keypoints.jsonl", lines);
  if (s.annotations) {
    std::string ann;
    for (const AnnotatedEpoch& a : *s.annotations) ann += annotation_to_json(a).dump() + "\n";
    detail::write_text_file(dir / "annotations.jsonl", ann);
  }
}

}  // namespace guidecue
