#pragma once

#include "ecl/envsim/scene.hpp"

namespace ecl::envsim {

/// Workspace-frame end-effector position for a pose.
Eigen::Vector2d end_effector(const ArmPose& pose, const RenderConfig& config);

/// Egocentric view: a square window of config.view_extent cm centered on the
/// end-effector, rasterized with anti-aliased disks over a flat background.
/// Everything outside the workspace is background. Pure function.
Image render_scene(const WorkspaceScene& scene, const ArmPose& pose, const RenderConfig& config);

}  // namespace ecl::envsim
