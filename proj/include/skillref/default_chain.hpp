#pragma once

#include "kinematics.hpp"

namespace skillref {

/// Bundled generic 7-DOF arm with alternating z/y axes, ~1.2 m reach and
/// +-2.9 rad limits ("iiwa-like"). Real robot dimensions belong in a chain
/// config file; this is only a reasonable default.
inline KinematicChain iiwa_like_chain() {
  const double limit = 2.9;
  std::vector<JointDescriptor> joints(7);
  const double link_z[7] = {0.30, 0.0, 0.40, 0.0, 0.40, 0.0, 0.10};
  for (int i = 0; i < 7; ++i) {
    joints[i].origin.translation = Vector3d(0, 0, link_z[i]);
    joints[i].axis = (i % 2 == 0) ? Vector3d::UnitZ() : Vector3d::UnitY();
    joints[i].lower = -limit;
    joints[i].upper = limit;
  }
  return KinematicChain(std::move(joints), RigidTransform{});
}

}  // namespace skillref
