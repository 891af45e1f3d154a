#pragma once

// Per-frame overlay primitives for the four auxiliary-information modes:
//   A  command cues and dog-head cues
//   B  command cues only
//   C  dog-head cues only
//   D  evaluation: the expert's right arm is masked behind a relaxed pose

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "guidecue/command_analysis.hpp"
#include "guidecue/error.hpp"
#include "guidecue/geometry.hpp"
#include "guidecue/pipeline.hpp"
#include "guidecue/practice_pose.hpp"
#include "guidecue/session.hpp"

namespace guidecue {

enum class Mode { A_Both, B_CommandOnly, C_DogOnly, D_Evaluation };

constexpr std::string_view mode_letter(Mode m) {
  switch (m) {
    case Mode::A_Both: return "A";
    case Mode::B_CommandOnly: return "B";
    case Mode::C_DogOnly: return "C";
    case Mode::D_Evaluation: return "D";
  }
  return "A";
}

inline std::optional<Mode> mode_from_letter(std::string_view s) {
  if (s == "A") return Mode::A_Both;
  if (s == "B") return Mode::B_CommandOnly;
  if (s == "C") return Mode::C_DogOnly;
  if (s == "D") return Mode::D_Evaluation;
  return std::nullopt;
}

enum class OverlayKind { PointSet, Segment, AngleArc, MaskRegion, Label };

constexpr std::string_view to_string(OverlayKind k) {
  switch (k) {
    case OverlayKind::PointSet: return "PointSet";
    case OverlayKind::Segment: return "Segment";
    case OverlayKind::AngleArc: return "AngleArc";
    case OverlayKind::MaskRegion: return "MaskRegion";
    case OverlayKind::Label: return "Label";
  }
  return "PointSet";
}

inline OverlayKind overlay_kind_from_string(std::string_view s) {
  for (OverlayKind k : {OverlayKind::PointSet, OverlayKind::Segment, OverlayKind::AngleArc, OverlayKind::MaskRegion,
                        OverlayKind::Label}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::MalformedRecord, "unknown overlay kind '" + std::string(s) + "'");
}

namespace style {
inline constexpr std::string_view kStandardPose = "standard-pose";
inline constexpr std::string_view kCommandCategory = "command-category";
inline constexpr std::string_view kCommandRange = "command-range";
inline constexpr std::string_view kDogHead = "dog-head";
inline constexpr std::string_view kDogStatus = "dog-status";
inline constexpr std::string_view kDogStatusRange = "dog-status-range";
inline constexpr std::string_view kPracticePose = "practice-pose";
inline constexpr std::string_view kRelaxedArmMask = "relaxed-arm-mask";
inline constexpr std::string_view kRelaxedArm = "relaxed-arm";
}  // namespace style

/// Drawable cue primitive in perspective-frame pixels.
///
/// Segment coords form a polyline; MaskRegion coords a convex polygon.
/// AngleArc uses coords[0] as its center; `from_deg`/`to_deg` are measured
/// from the marker's horizontal axis toward its gravity axis, and
/// `reference_deg` is the on-screen direction of that horizontal axis.
struct OverlaySpec {
  OverlayKind kind{OverlayKind::PointSet};
  std::vector<Vec2> coords;
  std::string style_tag;
  std::optional<std::string> text;
  double radius{0.0};
  double from_deg{0.0};
  double to_deg{0.0};
  double reference_deg{0.0};

  bool operator==(const OverlaySpec&) const = default;
};

inline bool operator<(const OverlaySpec& a, const OverlaySpec& b) {
  auto key = [](const OverlaySpec& o) {
    return std::tie(o.kind, o.style_tag, o.text, o.radius, o.from_deg, o.to_deg, o.reference_deg);
  };
  if (key(a) != key(b)) return key(a) < key(b);
  return std::lexicographical_compare(a.coords.begin(), a.coords.end(), b.coords.begin(), b.coords.end(),
                                      [](Vec2 p, Vec2 q) { return std::tie(p.x, p.y) < std::tie(q.x, q.y); });
}

struct CueConfig {
  int lead_frames{15};
  int trigger_display_frames{30};
  double arc_radius_px{60.0};
  double mask_pad_px{20.0};
  /// Hanging-forearm pose as offsets from the elbow: finger, wrist, elbow.
  std::array<Vec2, 3> relaxed_template{Vec2{12.0, 95.0}, Vec2{8.0, 65.0}, Vec2{0.0, 0.0}};
};

namespace detail {

inline Vec2 clamp_to_frame(Vec2 p, double w, double h) { return {std::clamp(p.x, 0.0, w), std::clamp(p.y, 0.0, h)}; }

inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  auto turn = [](Vec2 o, Vec2 a, Vec2 b) { return (a - o).cross(b - o); };
  for (const Vec2& p : pts) {
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Sutherland-Hodgman against the frame rectangle.
inline std::vector<Vec2> clip_polygon(std::vector<Vec2> poly, double w, double h) {
  auto clip = [&](auto inside, auto intersect) {
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 cur = poly[i];
      const Vec2 prev = poly[(i + poly.size() - 1) % poly.size()];
      const bool ci = inside(cur);
      const bool pi = inside(prev);
      if (ci) {
        if (!pi) out.push_back(intersect(prev, cur));
        out.push_back(cur);
      } else if (pi) {
        out.push_back(intersect(prev, cur));
      }
    }
    poly = std::move(out);
  };
  auto at_x = [](double x) {
    return [x](Vec2 a, Vec2 b) { return Vec2{x, a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)}; };
  };
  auto at_y = [](double y) {
    return [y](Vec2 a, Vec2 b) { return Vec2{a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y), y}; };
  };
  clip([](Vec2 p) { return p.x >= 0.0; }, at_x(0.0));
  clip([w](Vec2 p) { return p.x <= w; }, at_x(w));
  clip([](Vec2 p) { return p.y >= 0.0; }, at_y(0.0));
  clip([h](Vec2 p) { return p.y <= h; }, at_y(h));
  for (Vec2& p : poly) p = clamp_to_frame(p, w, h);
  return poly;
}

inline std::vector<Vec2> arm_polyline(const ArmKeypoints& arm) {
  return {arm.elbow().position(), arm.wrist().position(), arm.finger().position()};
}

}  // namespace detail

/// Mode-D occluder for the expert right arm: the arm's convex hull dilated
/// by `pad_px`, plus the relaxed-arm template anchored at the elbow.
inline std::pair<OverlaySpec, OverlaySpec> mask_right_arm(FrameIndex frame_index,
                                                           const std::optional<ArmKeypoints>& right_arm,
                                                           const std::array<Vec2, 3>& relaxed_template,
                                                           double pad_px, double frame_width, double frame_height) {
  if (!right_arm) {
    throw Error(ErrorCode::ArmAbsent, "no right arm at frame " + std::to_string(frame_index));
  }
  // A regular polygon circumscribing the pad circle keeps the dilation conservative.
  constexpr int kSides = 16;
  const double r = pad_px / std::cos(std::numbers::pi / kSides);
  std::vector<Vec2> cloud;
  for (const Keypoint& k : right_arm->points) {
    for (int i = 0; i < kSides; ++i) {
      const double a = 2.0 * std::numbers::pi * i / kSides;
      cloud.push_back(k.position() + Vec2{r * std::cos(a), r * std::sin(a)});
    }
  }
  OverlaySpec mask{OverlayKind::MaskRegion,
                   detail::clip_polygon(detail::convex_hull(std::move(cloud)), frame_width, frame_height),
                   std::string(style::kRelaxedArmMask)};

  const Vec2 elbow = right_arm->elbow().position();
  const Vec2 anchor = relaxed_template[2];
  OverlaySpec relaxed{OverlayKind::Segment, {}, std::string(style::kRelaxedArm)};
  // elbow -> wrist -> finger, matching the other arm polylines
  for (std::size_t i : {std::size_t{2}, std::size_t{1}, std::size_t{0}}) {
    relaxed.coords.push_back(detail::clamp_to_frame(elbow + (relaxed_template[i] - anchor), frame_width, frame_height));
  }
  return {std::move(mask), std::move(relaxed)};
}

/// Builds cue overlays for one frame from a precomputed analysis.
class CueEngine {
 public:
  CueEngine(const Session& session, const SessionAnalysis& analysis, CueConfig cfg = {})
      : session_(session), analysis_(analysis), cfg_(std::move(cfg)) {
    if (analysis.session_id != session.manifest.session_id || analysis.frame_count != session.manifest.frame_count) {
      throw Error(ErrorCode::AnalysisMissing, "analysis does not belong to session " + session.manifest.session_id);
    }
  }

  const CueConfig& config() const { return cfg_; }

  std::vector<OverlaySpec> build(FrameIndex frame, Mode mode, const PracticePose* practice = nullptr) const {
    if (frame < 0 || frame >= session_.manifest.frame_count) {
      throw Error(ErrorCode::InvalidArgument, "frame " + std::to_string(frame) + " outside session");
    }
    std::vector<OverlaySpec> out;
    switch (mode) {
      case Mode::A_Both:
        command_cues(frame, out);
        dog_cues(frame, out);
        break;
      case Mode::B_CommandOnly:
        command_cues(frame, out);
        break;
      case Mode::C_DogOnly:
        dog_cues(frame, out);
        break;
      case Mode::D_Evaluation:
        evaluation_mask(frame, out);
        break;
    }
    if (practice) {
      std::vector<Vec2> line = detail::arm_polyline(practice->right_arm);
      for (Vec2& p : line) p = clamp(p);
      out.push_back({OverlayKind::Segment, std::move(line), std::string(style::kPracticePose)});
    }
    return out;
  }

 private:
  Vec2 clamp(Vec2 p) const {
    return detail::clamp_to_frame(p, session_.manifest.frame_width, session_.manifest.frame_height);
  }

  double horizontal_screen_deg(FrameIndex f) const {
    const auto& ax = analysis_.axes.at(f);
    const Vec2 h = ax ? ax->horizontal : Vec2{1.0, 0.0};
    return rad_to_deg(std::atan2(h.y, h.x));
  }

  void command_cues(FrameIndex frame, std::vector<OverlaySpec>& out) const {
    for (const CommandEpoch& e : analysis_.epochs) {
      if (frame < e.start_frame - cfg_.lead_frames || frame > e.end_frame) continue;
      const FrameRecord* peak = session_.find(e.peak_frame);
      std::optional<Vec2> elbow;
      if (peak && peak->right_arm) {
        std::vector<Vec2> line = detail::arm_polyline(*peak->right_arm);
        for (Vec2& p : line) p = clamp(p);
        elbow = line[0];
        out.push_back({OverlayKind::PointSet, line, std::string(style::kStandardPose)});
        out.push_back({OverlayKind::Segment, std::move(line), std::string(style::kStandardPose)});
      }
      const Vec2 anchor = elbow.value_or(clamp(Vec2{10.0, 20.0}));
      out.push_back({OverlayKind::Label, {anchor}, std::string(style::kCommandCategory), std::string(to_string(e.category))});
      if (auto band = category_band(e.category)) {
        out.push_back({OverlayKind::AngleArc, {anchor}, std::string(style::kCommandRange), std::nullopt,
                       cfg_.arc_radius_px, band->lo_deg, band->hi_deg, horizontal_screen_deg(e.peak_frame)});
      }
    }
  }

  void dog_cues(FrameIndex frame, std::vector<OverlaySpec>& out) const {
    for (const TriggerEvent& t : analysis_.triggers) {
      if (frame < t.frame || frame >= t.frame + cfg_.trigger_display_frames) continue;
      const FrameRecord* rec = session_.find(frame);
      if (!rec || !rec->dog) rec = session_.find(t.frame);
      std::optional<Vec2> neck;
      if (rec && rec->dog) {
        const DogKeypoints& d = *rec->dog;
        neck = clamp(d.neck.position());
        out.push_back({OverlayKind::PointSet,
                       {clamp(d.ears[0].position()), clamp(d.ears[1].position()), *neck},
                       std::string(style::kDogHead)});
      }
      const Vec2 anchor = neck.value_or(clamp(Vec2{10.0, 40.0}));
      AngleBand band{0.0, analysis_.config.triggers.turn_threshold_deg};
      std::string status = "head-turn";
      if (analysis_.status_thresholds) {
        const DogStatusCategory s = classify_dog_status(t.head_angle_deg, *analysis_.status_thresholds);
        band = analysis_.status_thresholds->band(s);
        status = std::string(to_string(s));
      }
      out.push_back({OverlayKind::Label, {anchor}, std::string(style::kDogStatus), status});
      out.push_back({OverlayKind::AngleArc, {anchor}, std::string(style::kDogStatusRange), std::nullopt,
                     cfg_.arc_radius_px, band.lo_deg, band.hi_deg, horizontal_screen_deg(t.frame)});
    }
  }

  void evaluation_mask(FrameIndex frame, std::vector<OverlaySpec>& out) const {
    const FrameRecord* rec = session_.find(frame);
    if (!rec || !rec->right_arm) return;  // no arm to hide this frame
    auto [mask, relaxed] = mask_right_arm(frame, rec->right_arm, cfg_.relaxed_template, cfg_.mask_pad_px,
                                          session_.manifest.frame_width, session_.manifest.frame_height);
    out.push_back(std::move(mask));
    out.push_back(std::move(relaxed));
  }

  const Session& session_;
  const SessionAnalysis& analysis_;
  CueConfig cfg_;
};

inline std::vector<OverlaySpec> build_overlays(FrameIndex frame, Mode mode, const Session& session,
                                               const SessionAnalysis& analysis, const PracticePose* practice = nullptr,
                                               const CueConfig& cfg = {}) {
  return CueEngine(session, analysis, cfg).build(frame, mode, practice);
}

}  // namespace guidecue
