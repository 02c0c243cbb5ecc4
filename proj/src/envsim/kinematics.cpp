#include "ecl/envsim/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ecl/core/errors.hpp"

namespace ecl::envsim {

namespace {
constexpr double kReachSlack = 1e-9;
}

double wrap_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::remainder(radians, two_pi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += two_pi;
  return a == 0.0 ? 0.0 : a;  // normalize -0
}

Eigen::Vector2d forward_kinematics(const ArmPose& pose, const LinkLengths& links) {
  const double a = pose.j1;
  const double b = pose.j1 + pose.j2;
  return {links.upper * std::cos(a) + links.lower * std::cos(b),
          links.upper * std::sin(a) + links.lower * std::sin(b)};
}

bool reachable(const Eigen::Vector2d& target, const LinkLengths& links) {
  const double r = target.norm();
  return r <= links.upper + links.lower + kReachSlack &&
         r >= std::abs(links.upper - links.lower) - kReachSlack;
}

ArmPose inverse_kinematics(const Eigen::Vector2d& target, const LinkLengths& links) {
  if (!reachable(target, links)) {
    throw ReachError("target (" + std::to_string(target.x()) + ", " + std::to_string(target.y()) +
                     ") outside reachable annulus");
  }
  const double l1 = links.upper;
  const double l2 = links.lower;
  const double r2 = target.squaredNorm();
  const double cos_elbow = std::clamp((r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double j2 = -std::acos(cos_elbow);
  const double j1 = std::atan2(target.y(), target.x()) -
                    std::atan2(l2 * std::sin(j2), l1 + l2 * std::cos(j2));
  return {wrap_angle(j1), wrap_angle(j2)};
}

}  // namespace ecl::envsim
