#pragma once

// Angle / velocity histograms and per-session distribution reports.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "guidecue/command_analysis.hpp"
#include "guidecue/error.hpp"
#include "guidecue/kinematics.hpp"

namespace guidecue {

struct Histogram {
  double bin_width{3.0};
  double lo{0.0};
  double hi{180.0};
  std::vector<std::int64_t> counts;
  std::int64_t n{0};
  // Out-of-range samples; already included in the edge bins.
  std::int64_t underflow{0};
  std::int64_t overflow{0};

  double bin_lo(std::size_t k) const { return lo + static_cast<double>(k) * bin_width; }
  bool operator==(const Histogram&) const = default;
};

/// Half-open bins [lo + k*w, lo + (k+1)*w). The top edge `hi` itself lands
/// in the last bin; anything beyond the range is clamped into an edge bin
/// and tallied in underflow/overflow. NaN samples are ignored.
inline Histogram histogram(std::span<const double> values, double bin_width = 3.0, double lo = 0.0,
                           double hi = 180.0) {
  if (!(bin_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "bin width must be positive");
  if (!(hi > lo)) throw Error(ErrorCode::InvalidArgument, "histogram range must have hi > lo");
  Histogram h{bin_width, lo, hi, {}, 0, 0, 0};
  const auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / bin_width));
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (std::isnan(v)) continue;
    std::size_t k = 0;
    if (v < lo) {
      ++h.underflow;
    } else if (v > hi) {
      k = bins - 1;
      ++h.overflow;
    } else {
      k = std::min(bins - 1, static_cast<std::size_t>(std::floor((v - lo) / bin_width)));
    }
    ++h.counts[k];
    ++h.n;
  }
  return h;
}

struct AnalyticsConfig {
  double angle_bin_width_deg{3.0};
  double angle_lo_deg{0.0};
  double angle_hi_deg{180.0};
  double velocity_bin_width_deg_s{20.0};
  double velocity_hi_deg_s{600.0};
};

struct SessionReport {
  std::string dataset_name;
  std::int64_t command_count{0};
  Histogram head_angle_hist;
  Histogram body_angle_hist;
  Histogram yaw_hist;
  Histogram pitch_hist;
  Histogram velocity_hist;
  std::map<CommandCategory, std::int64_t> category_counts;
  std::map<DogStatusCategory, std::int64_t> status_counts;

  bool operator==(const SessionReport&) const = default;
};

/// Inputs for a report. Angle series are the raw (unsmoothed) ones.
struct ReportInputs {
  std::string dataset_name;
  const std::vector<CommandEpoch>* epochs{nullptr};
  const AngleSeries* head{nullptr};
  const AngleSeries* body{nullptr};
  const PoseSeries* right_arm{nullptr};
  const VelocitySeries* right_velocity{nullptr};
};

inline SessionReport session_report(const ReportInputs& in, const AnalyticsConfig& cfg = {}) {
  if (!in.epochs) throw Error(ErrorCode::AnalysisMissing, "report needs command epochs");
  SessionReport r;
  r.dataset_name = in.dataset_name;
  r.command_count = static_cast<std::int64_t>(in.epochs->size());
  for (CommandCategory c : kAllCommandCategories) r.category_counts[c] = 0;
  for (DogStatusCategory s : kAllDogStatuses) r.status_counts[s] = 0;

  std::vector<double> head, body, yaw, pitch, speed;
  auto sample = [](const AngleSeries* s, FrameIndex f, std::vector<double>& out) {
    if (!s) return;
    if (const auto& v = s->values.at(static_cast<std::size_t>(f))) out.push_back(*v);
  };
  for (const CommandEpoch& e : *in.epochs) {
    ++r.category_counts[e.category];
    if (e.dog_status_at_peak) ++r.status_counts[*e.dog_status_at_peak];
    sample(in.head, e.peak_frame, head);
    sample(in.body, e.peak_frame, body);
    if (in.right_arm) {
      if (const auto& p = in.right_arm->values.at(static_cast<std::size_t>(e.peak_frame))) {
        yaw.push_back(p->yaw_deg);
        pitch.push_back(p->pitch_deg);
      }
    }
    if (in.right_velocity) {
      for (FrameIndex f = e.start_frame; f <= e.end_frame; ++f) {
        if (const auto& v = in.right_velocity->values.at(static_cast<std::size_t>(f))) speed.push_back(std::abs(*v));
      }
    }
  }
  auto angle_hist = [&](const std::vector<double>& v) {
    return histogram(v, cfg.angle_bin_width_deg, cfg.angle_lo_deg, cfg.angle_hi_deg);
  };
  r.head_angle_hist = angle_hist(head);
  r.body_angle_hist = angle_hist(body);
  r.yaw_hist = angle_hist(yaw);
  r.pitch_hist = angle_hist(pitch);
  r.velocity_hist = histogram(speed, cfg.velocity_bin_width_deg_s, 0.0, cfg.velocity_hi_deg_s);
  return r;
}

namespace detail {
inline void render_histogram(std::ostringstream& os, const char* name, const Histogram& h, const char* unit) {
  os << name << " (bin " << h.bin_width << ' ' << unit << ", n=" << h.n;
  if (h.underflow || h.overflow) os << ", underflow=" << h.underflow << ", overflow=" << h.overflow;
  os << ")\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    if (h.counts[k] == 0) continue;
    os << "  [" << std::setw(6) << h.bin_lo(k) << ", " << std::setw(6) << h.bin_lo(k + 1) << ") " << std::setw(5)
       << h.counts[k] << ' ' << std::string(static_cast<std::size_t>(std::min<std::int64_t>(h.counts[k], 60)), '#')
       << '\n';
  }
}
}  // namespace detail

/// Plain-text table of a report for terminal display.
inline std::string render_report_text(const SessionReport& r) {
  std::ostringstream os;
  os << "dataset: " << r.dataset_name << '\n';
  os << "command_count: " << r.command_count << '\n';
  os << "category_counts:";
  for (const auto& [c, n] : r.category_counts) os << ' ' << to_string(c) << '=' << n;
  os << "\nstatus_counts:";
  for (const auto& [s, n] : r.status_counts) os << ' ' << to_string(s) << '=' << n;
  os << '\n';
  detail::render_histogram(os, "head_angle_hist", r.head_angle_hist, "deg");
  detail::render_histogram(os, "body_angle_hist", r.body_angle_hist, "deg");
  detail::render_histogram(os, "yaw_hist", r.yaw_hist, "deg");
  detail::render_histogram(os, "pitch_hist", r.pitch_hist, "deg");
  detail::render_histogram(os, "velocity_hist", r.velocity_hist, "deg/s");
  return os.str();
}

}  // namespace guidecue
