#pragma once

#include <optional>

#include "manilong/cloud.hpp"
#include "manilong/segmenter.hpp"

namespace manilong {

/// One observation: labelled cloud plus proprioception. `attached_instance` is set
/// while the gripper holds an object.
struct TrajectoryState {
  LabeledCloud cloud;
  ProprioFrame proprio;
  std::optional<int> attached_instance;
};

}  // namespace manilong
