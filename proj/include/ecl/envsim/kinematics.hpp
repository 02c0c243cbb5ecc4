#pragma once

#include <Eigen/Core>

namespace ecl::envsim {

/// Two revolute joints of the planar arm, radians in (-pi, pi].
/// These stand in for the shoulder/wrist joints the model consumes.
struct ArmPose {
  double j1 = 0.0;
  double j2 = 0.0;

  friend bool operator==(const ArmPose&, const ArmPose&) = default;
};

struct LinkLengths {
  double upper = 50.0;  // cm
  double lower = 40.0;  // cm
};

/// End-effector position (cm) in the arm base frame.
Eigen::Vector2d forward_kinematics(const ArmPose& pose, const LinkLengths& links);

bool reachable(const Eigen::Vector2d& target, const LinkLengths& links);

/// Elbow-up IK solution (elbow on the counter-clockwise side of the
/// base-to-target line, i.e. j2 <= 0). Throws ReachError outside the annulus.
ArmPose inverse_kinematics(const Eigen::Vector2d& target, const LinkLengths& links);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double radians);

}  // namespace ecl::envsim
