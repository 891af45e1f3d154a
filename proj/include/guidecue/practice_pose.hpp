#pragma once

#include <cstdint>

#include "guidecue/session.hpp"

namespace guidecue {

/// Learner-supplied right-arm keypoints, stamped with the replay frame they
/// were made against and a per-stream sequence number.
struct PracticePose {
  FrameIndex frame_index{0};
  ArmKeypoints right_arm{};
  std::int64_t received_seq{0};

  bool operator==(const PracticePose&) const = default;
};

}  // namespace guidecue
