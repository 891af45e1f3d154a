#pragma once

// Every tunable threshold in one nested key-value document. Missing keys
// keep their defaults, so a config file only needs the values it changes.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "guidecue/cue_engine.hpp"
#include "guidecue/detail/json_util.hpp"
#include "guidecue/pipeline.hpp"
#include "guidecue/practice.hpp"
#include "guidecue/session.hpp"

namespace guidecue {

struct PipelineConfig {
  LoadOptions session;
  AnalysisConfig analysis;
  CueConfig cues;
  ScoringConfig scoring;
};

namespace detail {

inline json vec2_to_json(Vec2 v) { return json::array({v.x, v.y}); }
inline Vec2 vec2_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace detail

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  using nlohmann::json;
  const auto& a = c.analysis;
  json status = nullptr;
  if (a.status.thresholds) {
    status = {{"low_high_split", a.status.thresholds->low_high_split},
              {"mid_high_split", a.status.thresholds->mid_high_split}};
  }
  json tmpl = json::array();
  for (const Vec2& v : c.cues.relaxed_template) tmpl.push_back(detail::vec2_to_json(v));
  return {
      {"session", {{"confidence_floor", c.session.confidence_floor}}},
      {"kinematics",
       {{"right_endpoint", a.kinematics.right_endpoint == RightArmEndpoint::Finger ? "finger" : "wrist"},
        {"marker_lookback_frames", a.kinematics.marker_lookback_frames},
        {"smoothing_window", a.kinematics.smoothing_window}}},
      {"segmentation",
       {{"rest_level_deg", detail::optional_to_json(a.segmentation.rest_level_deg)},
        {"rest_percentile", a.segmentation.rest_percentile},
        {"enter_hysteresis_deg", a.segmentation.enter_hysteresis_deg},
        {"retract_drop_deg", a.segmentation.retract_drop_deg},
        {"min_length_frames", a.segmentation.min_length_frames}}},
      {"triggers",
       {{"turn_threshold_deg", a.triggers.turn_threshold_deg},
        {"rearm_hysteresis_deg", a.triggers.rearm_hysteresis_deg},
        {"sustain_frames", a.triggers.sustain_frames}}},
      {"status", {{"thresholds", status}}},
      {"haptics",
       {{"v_min", detail::optional_to_json(a.haptics.v_min)},
        {"v_max", detail::optional_to_json(a.haptics.v_max)},
        {"v_min_percentile", a.haptics.v_min_percentile},
        {"v_max_percentile", a.haptics.v_max_percentile},
        {"yaw_min", a.haptics.yaw_min},
        {"yaw_max", a.haptics.yaw_max},
        {"amp_floor", a.haptics.amp_floor},
        {"merge_frequency_hz", a.haptics.merge_frequency_hz},
        {"merge_amplitude", a.haptics.merge_amplitude},
        {"right_mode", a.haptics.right_mode == RightHandMode::Continuous ? "continuous" : "onset"},
        {"calibration_start_frame", a.haptics.calibration_start_frame},
        {"calibration_frames", a.haptics.calibration_frames},
        {"min_calibration_s", a.haptics.min_calibration_s},
        {"band_margin_deg", a.haptics.band_margin_deg},
        {"alert_sustain_frames", a.haptics.alert_sustain_frames},
        {"alert_frequency_hz", a.haptics.alert_frequency_hz},
        {"alert_full_scale_deg", a.haptics.alert_full_scale_deg}}},
      {"analytics",
       {{"angle_bin_width_deg", a.analytics.angle_bin_width_deg},
        {"angle_lo_deg", a.analytics.angle_lo_deg},
        {"angle_hi_deg", a.analytics.angle_hi_deg},
        {"velocity_bin_width_deg_s", a.analytics.velocity_bin_width_deg_s},
        {"velocity_hi_deg_s", a.analytics.velocity_hi_deg_s}}},
      {"cues",
       {{"lead_frames", c.cues.lead_frames},
        {"trigger_display_frames", c.cues.trigger_display_frames},
        {"arc_radius_px", c.cues.arc_radius_px},
        {"mask_pad_px", c.cues.mask_pad_px},
        {"relaxed_template", tmpl}}},
      {"scoring",
       {{"weights",
         {{"yaw", c.scoring.weights.yaw},
          {"pitch", c.scoring.weights.pitch},
          {"timing", c.scoring.weights.timing},
          {"velocity", c.scoring.weights.velocity}}},
        {"match_window_frames", c.scoring.match_window_frames},
        {"yaw_norm_deg", c.scoring.yaw_norm_deg},
        {"pitch_norm_deg", c.scoring.pitch_norm_deg},
        {"timing_norm_ms", c.scoring.timing_norm_ms},
        {"velocity_norm_deg_s", detail::optional_to_json(c.scoring.velocity_norm_deg_s)}}},
  };
}

/// Overlays the keys present in `j` onto `base`.
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c = {}) {
  using detail::read_if_present;
  try {
    auto section = [&](const char* name) -> const nlohmann::json& {
      static const nlohmann::json empty = nlohmann::json::object();
      auto it = j.find(name);
      return it == j.end() ? empty : *it;
    };
    auto& a = c.analysis;
    read_if_present(section("session"), "confidence_floor", c.session.confidence_floor);

    const auto& kin = section("kinematics");
    if (kin.contains("right_endpoint")) {
      const auto v = kin.at("right_endpoint").get<std::string>();
      if (v != "finger" && v != "wrist") throw Error(ErrorCode::InvalidArgument, "right_endpoint must be finger|wrist");
      a.kinematics.right_endpoint = v == "finger" ? RightArmEndpoint::Finger : RightArmEndpoint::Wrist;
    }
    read_if_present(kin, "marker_lookback_frames", a.kinematics.marker_lookback_frames);
    read_if_present(kin, "smoothing_window", a.kinematics.smoothing_window);

    const auto& seg = section("segmentation");
    if (seg.contains("rest_level_deg")) a.segmentation.rest_level_deg = detail::optional_from_json<double>(seg.at("rest_level_deg"));
    read_if_present(seg, "rest_percentile", a.segmentation.rest_percentile);
    read_if_present(seg, "enter_hysteresis_deg", a.segmentation.enter_hysteresis_deg);
    read_if_present(seg, "retract_drop_deg", a.segmentation.retract_drop_deg);
    read_if_present(seg, "min_length_frames", a.segmentation.min_length_frames);

    const auto& trg = section("triggers");
    read_if_present(trg, "turn_threshold_deg", a.triggers.turn_threshold_deg);
    read_if_present(trg, "rearm_hysteresis_deg", a.triggers.rearm_hysteresis_deg);
    read_if_present(trg, "sustain_frames", a.triggers.sustain_frames);

    const auto& st = section("status");
    if (st.contains("thresholds")) {
      const auto& t = st.at("thresholds");
      if (t.is_null()) {
        a.status.thresholds.reset();
      } else {
        StatusThresholds th{t.at("low_high_split").get<double>(), t.at("mid_high_split").get<double>()};
        th.validate();
        a.status.thresholds = th;
      }
    }

    const auto& hap = section("haptics");
    if (hap.contains("v_min")) a.haptics.v_min = detail::optional_from_json<double>(hap.at("v_min"));
    if (hap.contains("v_max")) a.haptics.v_max = detail::optional_from_json<double>(hap.at("v_max"));
    read_if_present(hap, "v_min_percentile", a.haptics.v_min_percentile);
    read_if_present(hap, "v_max_percentile", a.haptics.v_max_percentile);
    read_if_present(hap, "yaw_min", a.haptics.yaw_min);
    read_if_present(hap, "yaw_max", a.haptics.yaw_max);
    read_if_present(hap, "amp_floor", a.haptics.amp_floor);
    read_if_present(hap, "merge_frequency_hz", a.haptics.merge_frequency_hz);
    read_if_present(hap, "merge_amplitude", a.haptics.merge_amplitude);
    if (hap.contains("right_mode")) {
      const auto v = hap.at("right_mode").get<std::string>();
      if (v != "continuous" && v != "onset") throw Error(ErrorCode::InvalidArgument, "right_mode must be continuous|onset");
      a.haptics.right_mode = v == "continuous" ? RightHandMode::Continuous : RightHandMode::OnsetOnly;
    }
    read_if_present(hap, "calibration_start_frame", a.haptics.calibration_start_frame);
    read_if_present(hap, "calibration_frames", a.haptics.calibration_frames);
    read_if_present(hap, "min_calibration_s", a.haptics.min_calibration_s);
    read_if_present(hap, "band_margin_deg", a.haptics.band_margin_deg);
    read_if_present(hap, "alert_sustain_frames", a.haptics.alert_sustain_frames);
    read_if_present(hap, "alert_frequency_hz", a.haptics.alert_frequency_hz);
    read_if_present(hap, "alert_full_scale_deg", a.haptics.alert_full_scale_deg);

    const auto& an = section("analytics");
    read_if_present(an, "angle_bin_width_deg", a.analytics.angle_bin_width_deg);
    read_if_present(an, "angle_lo_deg", a.analytics.angle_lo_deg);
    read_if_present(an, "angle_hi_deg", a.analytics.angle_hi_deg);
    read_if_present(an, "velocity_bin_width_deg_s", a.analytics.velocity_bin_width_deg_s);
    read_if_present(an, "velocity_hi_deg_s", a.analytics.velocity_hi_deg_s);

    const auto& cue = section("cues");
    read_if_present(cue, "lead_frames", c.cues.lead_frames);
    read_if_present(cue, "trigger_display_frames", c.cues.trigger_display_frames);
    read_if_present(cue, "arc_radius_px", c.cues.arc_radius_px);
    read_if_present(cue, "mask_pad_px", c.cues.mask_pad_px);
    if (cue.contains("relaxed_template")) {
      const auto& t = cue.at("relaxed_template");
      if (!t.is_array() || t.size() != 3) throw Error(ErrorCode::InvalidArgument, "relaxed_template needs 3 points");
      for (std::size_t i = 0; i < 3; ++i) c.cues.relaxed_template[i] = detail::vec2_from_json(t[i]);
    }

    const auto& sc = section("scoring");
    if (sc.contains("weights")) {
      const auto& w = sc.at("weights");
      read_if_present(w, "yaw", c.scoring.weights.yaw);
      read_if_present(w, "pitch", c.scoring.weights.pitch);
      read_if_present(w, "timing", c.scoring.weights.timing);
      read_if_present(w, "velocity", c.scoring.weights.velocity);
    }
    read_if_present(sc, "match_window_frames", c.scoring.match_window_frames);
    read_if_present(sc, "yaw_norm_deg", c.scoring.yaw_norm_deg);
    read_if_present(sc, "pitch_norm_deg", c.scoring.pitch_norm_deg);
    read_if_present(sc, "timing_norm_ms", c.scoring.timing_norm_ms);
    if (sc.contains("velocity_norm_deg_s")) {
      c.scoring.velocity_norm_deg_s = detail::optional_from_json<double>(sc.at("velocity_norm_deg_s"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  return c;
}

/// Cross-field checks, run once after every source has been applied.
inline void validate_config(const PipelineConfig& c) {
  c.scoring.weights.validate();
  if (c.analysis.kinematics.smoothing_window < 1 || c.analysis.kinematics.smoothing_window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "kinematics.smoothing_window must be odd and >= 1");
  }
  if (c.scoring.match_window_frames < 0) throw Error(ErrorCode::InvalidArgument, "scoring.match_window_frames < 0");
  if (!(c.scoring.yaw_norm_deg > 0 && c.scoring.pitch_norm_deg > 0 && c.scoring.timing_norm_ms > 0)) {
    throw Error(ErrorCode::InvalidArgument, "scoring norms must be positive");
  }
  if (!(c.session.confidence_floor >= 0.0 && c.session.confidence_floor <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "session.confidence_floor must lie in [0, 1]");
  }
}

inline PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "config " + path.string() + ": " + e.what());
  }
  PipelineConfig c = config_from_json(j, std::move(base));
  validate_config(c);
  return c;
}

/// Applies a `section.key=value` override; the value is parsed as JSON and
/// falls back to a plain string.
inline PipelineConfig apply_override(const PipelineConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::InvalidArgument, "override must look like section.key=value: " + assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  std::string pointer = "/" + path;
  for (char& ch : pointer)
    if (ch == '.') ch = '/';
  nlohmann::json patch = nlohmann::json::object();
  try {
    patch[nlohmann::json::json_pointer(pointer)] = value;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "bad override path '" + path + "': " + e.what());
  }
  if (path.find('.') == std::string::npos || !config_to_json(c).contains(nlohmann::json::json_pointer(pointer))) {
    throw Error(ErrorCode::InvalidArgument, "unknown config key '" + path + "'");
  }
  return config_from_json(patch, c);
}

}  // namespace guidecue
