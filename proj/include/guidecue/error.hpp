#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace guidecue {

enum class ErrorCode {
  InvalidArgument,
  MissingManifest,
  MalformedRecord,
  NonMonotonicFrameIndex,
  DimensionMismatch,
  IoFailure,
  DegenerateVector,
  DegenerateMarker,
  OutOfFrame,
  BehindCamera,
  OutOfFov,
  NoMarkerEver,
  EmptySeries,
  AllAbsent,
  TooFewSamples,
  DegenerateClusters,
  InsufficientCalibration,
  AnalysisMissing,
  ArmAbsent,
  OutOfOrderPose,
  OverlappingEpochs,
  UnknownSession,
  MalformedMessage,
  NotSubscribed,
  SeekOutOfRange,
  InvalidRate,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingManifest: return "MissingManifest";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::NonMonotonicFrameIndex: return "NonMonotonicFrameIndex";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::DegenerateMarker: return "DegenerateMarker";
    case ErrorCode::OutOfFrame: return "OutOfFrame";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::OutOfFov: return "OutOfFov";
    case ErrorCode::NoMarkerEver: return "NoMarkerEver";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::AllAbsent: return "AllAbsent";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateClusters: return "DegenerateClusters";
    case ErrorCode::InsufficientCalibration: return "InsufficientCalibration";
    case ErrorCode::AnalysisMissing: return "AnalysisMissing";
    case ErrorCode::ArmAbsent: return "ArmAbsent";
    case ErrorCode::OutOfOrderPose: return "OutOfOrderPose";
    case ErrorCode::OverlappingEpochs: return "OverlappingEpochs";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::MalformedMessage: return "MalformedMessage";
    case ErrorCode::NotSubscribed: return "NotSubscribed";
    case ErrorCode::SeekOutOfRange: return "SeekOutOfRange";
    case ErrorCode::InvalidRate: return "InvalidRate";
  }
  return "Unknown";
}

/// Exception type for every recoverable failure raised by the library.
///
/// `line()` is set for record-level failures while reading line-delimited
/// files (1-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(format(code, detail, line)),
        code_(code),
        detail_(detail),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::optional<std::size_t>& line() const noexcept { return line_; }

 private:
  static std::string format(ErrorCode code, const std::string& detail,
                            std::optional<std::size_t> line) {
    std::string out(to_string(code));
    if (line) out += " (line " + std::to_string(*line) + ")";
    if (!detail.empty()) out += ": " + detail;
    return out;
  }

  ErrorCode code_;
  std::string detail_;
  std::optional<std::size_t> line_;
};

}  // namespace guidecue
