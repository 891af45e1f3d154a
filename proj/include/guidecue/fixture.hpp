#pragma once

// Synthetic sessions with planted ground truth. Angle trajectories are
// drawn first and keypoints placed around a fixed skeleton layout so the
// analysis pipeline recovers the planted angles.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecue/command_analysis.hpp"
#include "guidecue/detail/json_util.hpp"
#include "guidecue/error.hpp"
#include "guidecue/geometry.hpp"
#include "guidecue/session.hpp"

namespace guidecue {

enum class MarkerMotion { Static, SlowDrift };

struct PlantedEpoch {
  FrameIndex start{0};
  FrameIndex peak{0};
  FrameIndex end{0};
  double peak_yaw_deg{120.0};
  /// Selects which side of the horizontal axis the arm swings on: the one
  /// whose pitch at the peak is closer to this value. Lower side when unset.
  std::optional<double> peak_pitch_deg;
  /// Dog head angle reached at the peak; the head stays at its baseline when unset.
  std::optional<double> head_at_peak_deg;

  bool operator==(const PlantedEpoch&) const = default;
};

/// Left forearm deviation from the walking pose.
struct LeftExcursion {
  FrameIndex start{0};
  FrameIndex frames{1};
  double offset_deg{20.0};

  bool operator==(const LeftExcursion&) const = default;
};

struct FixtureSpec {
  std::uint64_t seed{1};
  std::string session_id{"synthetic"};
  std::string dataset_name{"synthetic"};
  double fps{30.0};
  FrameIndex frame_count{300};
  std::vector<PlantedEpoch> planted_epochs;
  std::vector<FrameIndex> planted_triggers;  // first frame of each head dip
  std::vector<LeftExcursion> left_excursions;
  double noise_sigma_deg{0.0};
  MarkerMotion marker_motion{MarkerMotion::Static};

  double rest_yaw_deg{60.0};
  double head_baseline_deg{100.0};
  double head_dip_deg{30.0};
  int head_dip_hold_frames{12};
  int head_dip_ramp_frames{4};
  double body_deg{170.0};
  double left_center_deg{100.0};
  double left_wobble_deg{6.0};
  int left_wobble_period_frames{30};

  bool operator==(const FixtureSpec&) const = default;
};

/// Parameters for a seeded random epoch layout.
struct RandomLayout {
  int epochs{10};
  int lead_frames{90};
  int tail_frames{60};
  int min_half_width{10};
  int max_half_width{16};
  int min_gap{30};
  int max_gap{60};
  double head_clusters_deg[3]{55.0, 75.0, 95.0};
  double head_jitter_deg{3.0};
  int trigger_every{4};         // plant a head dip after every k-th epoch; 0 disables
  int left_excursion_every{0};  // plant a left forearm excursion after every k-th epoch; 0 disables
};

/// Fills `spec` with `layout.epochs` symmetric epochs, gaps and triggers
/// drawn from `spec.seed`, and sets `frame_count` to fit.
inline void apply_random_layout(FixtureSpec& spec, const RandomLayout& layout) {
  if (layout.epochs < 0 || layout.min_half_width < 3 || layout.max_half_width < layout.min_half_width ||
      layout.min_gap < 1 || layout.max_gap < layout.min_gap || layout.lead_frames < 0 || layout.tail_frames < 0) {
    throw Error(ErrorCode::InvalidArgument, "random layout parameters out of range");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> half_width(layout.min_half_width, layout.max_half_width);
  std::uniform_int_distribution<int> gap(layout.min_gap, layout.max_gap);
  std::uniform_int_distribution<int> band(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const AngleBand bands[3] = {*category_band(CommandCategory::AttentionOrRightTurn),
                              *category_band(CommandCategory::MovementControl),
                              *category_band(CommandCategory::LeftFrontDirectional)};
  const int dip_frames = spec.head_dip_hold_frames + 2 * spec.head_dip_ramp_frames;

  spec.planted_epochs.clear();
  spec.planted_triggers.clear();
  spec.left_excursions.clear();
  FrameIndex cursor = layout.lead_frames;
  for (int i = 0; i < layout.epochs; ++i) {
    const int hw = half_width(rng);
    const AngleBand b = bands[band(rng)];
    PlantedEpoch e;
    e.start = cursor;
    e.peak = cursor + hw;
    e.end = cursor + 2 * hw;
    e.peak_yaw_deg = b.lo_deg + 2.0 + unit(rng) * (b.hi_deg - b.lo_deg - 4.0);
    e.head_at_peak_deg = layout.head_clusters_deg[i % 3] + (2.0 * unit(rng) - 1.0) * layout.head_jitter_deg;
    spec.planted_epochs.push_back(e);
    cursor = e.end + 1;

    int g = gap(rng);
    const bool trigger = layout.trigger_every > 0 && (i + 1) % layout.trigger_every == 0;
    const bool excursion = layout.left_excursion_every > 0 && (i + 1) % layout.left_excursion_every == 0;
    if (trigger || excursion) g = std::max(g, dip_frames + 20);
    if (trigger) spec.planted_triggers.push_back(cursor + 10);
    if (excursion) spec.left_excursions.push_back({cursor + 5, 15, 20.0});
    cursor += g;
  }
  spec.frame_count = std::max<FrameIndex>(cursor + layout.tail_frames, 1);
}

inline void validate(const FixtureSpec& spec) {
  if (!(spec.fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "fixture fps must be > 0");
  if (spec.frame_count < 1) throw Error(ErrorCode::InvalidArgument, "fixture frame_count must be >= 1");
  if (!(spec.noise_sigma_deg >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  if (spec.head_dip_hold_frames < 0 || spec.head_dip_ramp_frames < 1 || spec.left_wobble_period_frames < 1) {
    throw Error(ErrorCode::InvalidArgument, "head dip / wobble timing out of range");
  }
  for (const PlantedEpoch& e : spec.planted_epochs) {
    if (!(e.start < e.peak && e.peak < e.end) || e.start < 0 || e.end >= spec.frame_count) {
      throw Error(ErrorCode::InvalidArgument, "planted epoch needs 0 <= start < peak < end < frame_count");
    }
    if (!(e.peak_yaw_deg > 0.0 && e.peak_yaw_deg < 180.0)) {
      throw Error(ErrorCode::InvalidArgument, "planted peak yaw must lie in (0, 180)");
    }
  }
  std::vector<PlantedEpoch> sorted = spec.planted_epochs;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start <= sorted[i - 1].end) {
      throw Error(ErrorCode::OverlappingEpochs, "planted epochs starting at frames " +
                                                    std::to_string(sorted[i - 1].start) + " and " +
                                                    std::to_string(sorted[i].start) + " overlap");
    }
  }
  for (FrameIndex t : spec.planted_triggers) {
    if (t < 0 || t >= spec.frame_count) throw Error(ErrorCode::InvalidArgument, "planted trigger out of range");
  }
  for (const LeftExcursion& x : spec.left_excursions) {
    if (x.start < 0 || x.frames < 1 || x.start + x.frames > spec.frame_count) {
      throw Error(ErrorCode::InvalidArgument, "left excursion out of range");
    }
  }
}

namespace detail {

// Skeleton layout in perspective pixels (640x640 frame).
inline constexpr Vec2 kRightElbow{400.0, 400.0};
inline constexpr double kRightForearmPx = 120.0;
inline constexpr double kRightWristPx = 80.0;
inline constexpr Vec2 kLeftElbow{160.0, 300.0};
inline constexpr double kLeftForearmPx = 100.0;
inline constexpr Vec2 kDogNeck{250.0, 450.0};
inline constexpr double kDogHeadPx = 60.0;
inline constexpr double kEarHalfSpanPx = 12.0;
inline constexpr Vec2 kDogForelimbMid{300.0, 540.0};
inline constexpr double kDogBackPx = 150.0;
inline constexpr Vec2 kMarkerCenter{320.0, 120.0};
inline constexpr double kMarkerHalfSide = 30.0;
inline constexpr double kKeypointConfidence = 0.95;

/// 0 at the span ends, 1 at the peak; raised cosine on each side.
inline double bump_weight(const PlantedEpoch& e, FrameIndex f) {
  if (f <= e.start || f >= e.end) return 0.0;
  const double t = f <= e.peak ? static_cast<double>(f - e.start) / static_cast<double>(e.peak - e.start)
                               : static_cast<double>(e.end - f) / static_cast<double>(e.end - e.peak);
  return 0.5 * (1.0 - std::cos(std::numbers::pi * t));
}

inline double dip_weight(FrameIndex start, int hold, int ramp, FrameIndex f) {
  const FrameIndex rel = f - start;
  if (rel < 0 || rel >= 2 * ramp + hold) return 0.0;
  if (rel < ramp) return 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(rel + 1) / (ramp + 1)));
  if (rel < ramp + hold) return 1.0;
  const FrameIndex back = 2 * ramp + hold - rel;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(back) / (ramp + 1)));
}

/// Unit direction making `screen_deg` with `axes.horizontal`, positive
/// toward `axes.gravity`.
inline Vec2 direction_in(const AxesFrame& axes, double screen_deg) {
  const Vec2 h = normalized(axes.horizontal);
  const Vec2 g = normalized(axes.gravity);
  const double r = deg_to_rad(screen_deg);
  return h * std::cos(r) + g * std::sin(r);
}

/// Signed screen angle for an unsigned yaw on the side whose pitch is
/// closest to `pitch` (lower side, pitch = |yaw - 90|, when unset).
inline double signed_side(double yaw, std::optional<double> pitch) {
  if (!pitch) return 1.0;
  const double lower = std::abs(yaw - 90.0);
  const double upper = 180.0 - lower;
  return std::abs(*pitch - lower) <= std::abs(*pitch - upper) ? 1.0 : -1.0;
}

inline MarkerFrame marker_at(MarkerMotion motion, FrameIndex f, double fps) {
  double rot = 0.0;
  Vec2 shift{0.0, 0.0};
  if (motion == MarkerMotion::SlowDrift) {
    const double t = static_cast<double>(f) / fps;
    rot = 3.0 * std::sin(2.0 * std::numbers::pi * t / 30.0);
    shift = {5.0 * std::sin(2.0 * std::numbers::pi * t / 40.0), 3.0 * std::sin(2.0 * std::numbers::pi * t / 55.0)};
  }
  const double s = kMarkerHalfSide;
  const Vec2 local[4] = {{-s, -s}, {s, -s}, {s, s}, {-s, s}};
  MarkerFrame m;
  for (int i = 0; i < 4; ++i) {
    const Vec2 p = kMarkerCenter + shift + rotated(local[i], rot);
    m.corners[static_cast<std::size_t>(i)] = {p.x, p.y, kKeypointConfidence};
  }
  return m;
}

inline Keypoint kp(Vec2 p) { return {p.x, p.y, kKeypointConfidence}; }

}  // namespace detail

/// Builds the session and its exact planted annotations. Pure function of
/// `spec`.
inline Session generate(const FixtureSpec& spec) {
  validate(spec);
  using namespace detail;

  std::vector<PlantedEpoch> epochs = spec.planted_epochs;
  std::sort(epochs.begin(), epochs.end(), [](const auto& a, const auto& b) { return a.start < b.start; });

  Session s;
  s.manifest.session_id = spec.session_id;
  s.manifest.dataset_name = spec.dataset_name;
  s.manifest.fps = spec.fps;
  s.manifest.frame_count = spec.frame_count;
  s.manifest.ground_truth_command_count = static_cast<std::int64_t>(epochs.size());

  std::mt19937_64 noise_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  auto noise = [&] { return spec.noise_sigma_deg > 0.0 ? spec.noise_sigma_deg * unit_normal(noise_rng) : 0.0; };

  std::size_t next = 0;  // first epoch that may still contain f
  s.frames.reserve(static_cast<std::size_t>(spec.frame_count));
  for (FrameIndex f = 0; f < spec.frame_count; ++f) {
    while (next < epochs.size() && epochs[next].end < f) ++next;

    double arm_yaw = spec.rest_yaw_deg;
    double arm_side = 1.0;
    double head = spec.head_baseline_deg;
    if (next < epochs.size() && epochs[next].start <= f) {
      const PlantedEpoch& e = epochs[next];
      const double w = bump_weight(e, f);
      arm_yaw = spec.rest_yaw_deg + (e.peak_yaw_deg - spec.rest_yaw_deg) * w;
      arm_side = signed_side(e.peak_yaw_deg, e.peak_pitch_deg);
      if (e.head_at_peak_deg) head = spec.head_baseline_deg + (*e.head_at_peak_deg - spec.head_baseline_deg) * w;
    }
    for (FrameIndex t : spec.planted_triggers) {
      const double w = dip_weight(t, spec.head_dip_hold_frames, spec.head_dip_ramp_frames, f);
      if (w > 0.0) head = spec.head_baseline_deg + (spec.head_dip_deg - spec.head_baseline_deg) * w;
    }
    double left = spec.left_center_deg +
                  spec.left_wobble_deg *
                      std::sin(2.0 * std::numbers::pi * static_cast<double>(f) / spec.left_wobble_period_frames);
    for (const LeftExcursion& x : spec.left_excursions) {
      if (f >= x.start && f < x.start + x.frames) left += x.offset_deg;
    }

    const double arm_n = noise();
    const double head_n = noise();
    const double body_n = noise();
    const double left_n = noise();

    FrameRecord r;
    r.frame_index = f;
    r.timestamp_s = static_cast<double>(f) / spec.fps;
    r.marker = marker_at(spec.marker_motion, f, spec.fps);
    const AxesFrame axes = marker_axes(*r.marker);

    const Vec2 arm_dir = direction_in(axes, arm_side * arm_yaw + arm_n);
    r.right_arm = ArmKeypoints::right(kp(kRightElbow + arm_dir * kRightForearmPx),
                                      kp(kRightElbow + arm_dir * kRightWristPx), kp(kRightElbow));

    const Vec2 left_dir = direction_in(axes, -(left + left_n));
    r.left_arm = ArmKeypoints::left(kp(kLeftElbow + left_dir * kLeftForearmPx), kp(kLeftElbow),
                                    kp(kLeftElbow + Vec2{0.0, -90.0}));

    DogKeypoints dog;
    const Vec2 head_dir = direction_in(axes, -(head + head_n));
    const Vec2 ear_mid = kDogNeck + head_dir * kDogHeadPx;
    const Vec2 across = rotated(head_dir, 90.0) * kEarHalfSpanPx;
    dog.ears = {kp(ear_mid - across), kp(ear_mid + across)};
    dog.neck = kp(kDogNeck);
    dog.scapula = kp(kDogNeck + Vec2{20.0, 40.0});
    dog.forelimbs = {kp(kDogForelimbMid + Vec2{-8.0, 0.0}), kp(kDogForelimbMid + Vec2{8.0, 0.0})};
    dog.waist = kp(kDogForelimbMid + direction_in(axes, -(spec.body_deg + body_n)) * kDogBackPx);
    r.dog = dog;

    s.frames.push_back(std::move(r));
  }

  std::vector<AnnotatedEpoch> ann;
  for (const PlantedEpoch& e : epochs) {
    ann.push_back({e.start, e.peak, e.end, std::string(to_string(classify_command(e.peak_yaw_deg)))});
  }
  s.annotations = std::move(ann);
  return s;
}

// --- spec files ---

inline nlohmann::json fixture_spec_to_json(const FixtureSpec& s) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const PlantedEpoch& e : s.planted_epochs) {
    epochs.push_back({{"start", e.start},
                      {"peak", e.peak},
                      {"end", e.end},
                      {"peak_yaw", e.peak_yaw_deg},
                      {"peak_pitch", detail::optional_to_json(e.peak_pitch_deg)},
                      {"head_at_peak", detail::optional_to_json(e.head_at_peak_deg)}});
  }
  nlohmann::json excursions = nlohmann::json::array();
  for (const LeftExcursion& x : s.left_excursions) {
    excursions.push_back({{"start", x.start}, {"frames", x.frames}, {"offset_deg", x.offset_deg}});
  }
  return {{"seed", s.seed},
          {"session_id", s.session_id},
          {"dataset_name", s.dataset_name},
          {"fps", s.fps},
          {"frame_count", s.frame_count},
          {"noise_sigma_deg", s.noise_sigma_deg},
          {"marker_motion", s.marker_motion == MarkerMotion::Static ? "static" : "slow-drift"},
          {"planted_epochs", epochs},
          {"planted_triggers", s.planted_triggers},
          {"left_excursions", excursions}};
}

/// Reads a spec. A `random_layout` object ({"epochs": N, ...}) replaces the
/// explicit epoch, trigger and excursion lists with a seeded layout.
inline FixtureSpec fixture_spec_from_json(const nlohmann::json& j) {
  using detail::read_if_present;
  FixtureSpec s;
  try {
    read_if_present(j, "seed", s.seed);
    read_if_present(j, "session_id", s.session_id);
    read_if_present(j, "dataset_name", s.dataset_name);
    read_if_present(j, "fps", s.fps);
    read_if_present(j, "frame_count", s.frame_count);
    read_if_present(j, "noise_sigma_deg", s.noise_sigma_deg);
    if (j.contains("marker_motion")) {
      const auto m = j.at("marker_motion").get<std::string>();
      if (m == "static") {
        s.marker_motion = MarkerMotion::Static;
      } else if (m == "slow-drift") {
        s.marker_motion = MarkerMotion::SlowDrift;
      } else {
        throw Error(ErrorCode::InvalidArgument, "marker_motion must be static|slow-drift");
      }
    }
    if (const auto it = j.find("random_layout"); it != j.end()) {
      RandomLayout layout;
      read_if_present(*it, "epochs", layout.epochs);
      read_if_present(*it, "lead_frames", layout.lead_frames);
      read_if_present(*it, "tail_frames", layout.tail_frames);
      read_if_present(*it, "min_half_width", layout.min_half_width);
      read_if_present(*it, "max_half_width", layout.max_half_width);
      read_if_present(*it, "min_gap", layout.min_gap);
      read_if_present(*it, "max_gap", layout.max_gap);
      read_if_present(*it, "trigger_every", layout.trigger_every);
      read_if_present(*it, "left_excursion_every", layout.left_excursion_every);
      apply_random_layout(s, layout);
    } else {
      for (const auto& e : j.value("planted_epochs", nlohmann::json::array())) {
        PlantedEpoch p;
        p.start = e.at("start").get<FrameIndex>();
        p.peak = e.at("peak").get<FrameIndex>();
        p.end = e.at("end").get<FrameIndex>();
        p.peak_yaw_deg = e.at("peak_yaw").get<double>();
        read_if_present(e, "peak_pitch", p.peak_pitch_deg);
        read_if_present(e, "head_at_peak", p.head_at_peak_deg);
        s.planted_epochs.push_back(p);
      }
      read_if_present(j, "planted_triggers", s.planted_triggers);
      for (const auto& x : j.value("left_excursions", nlohmann::json::array())) {
        s.left_excursions.push_back(
            {x.at("start").get<FrameIndex>(), x.at("frames").get<FrameIndex>(), x.at("offset_deg").get<double>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("fixture spec: ") + e.what());
  }
  validate(s);
  return s;
}

inline FixtureSpec load_fixture_spec(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "fixture spec " + path.string() + ": " + e.what());
  }
  return fixture_spec_from_json(j);
}

/// Named presets mirroring four recorded datasets by command count.
inline FixtureSpec preset_spec(const std::string& name, std::uint64_t seed = 1, double noise_sigma_deg = 0.0) {
  struct Preset {
    const char* name;
    int epochs;
  };
  static constexpr Preset presets[] = {{"Hybrid1", 37}, {"Hybrid2", 48}, {"Room1", 31}, {"Room2", 52}};
  for (const Preset& p : presets) {
    if (name == p.name) {
      FixtureSpec s;
      s.seed = seed;
      s.dataset_name = std::string(p.name) + "-synth";
      s.session_id = s.dataset_name;
      std::transform(s.session_id.begin(), s.session_id.end(), s.session_id.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      s.noise_sigma_deg = noise_sigma_deg;
      RandomLayout layout;
      layout.epochs = p.epochs;
      layout.left_excursion_every = 6;
      apply_random_layout(s, layout);
      return s;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown preset '" + name + "' (Hybrid1|Hybrid2|Room1|Room2)");
}

}  // namespace guidecue
