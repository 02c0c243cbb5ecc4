#include "ecl/envsim/render.hpp"

#include <algorithm>
#include <cmath>

#include "ecl/core/errors.hpp"

namespace ecl::envsim {

const std::array<Rgb, 6>& ball_palette() {
  static const std::array<Rgb, 6> palette{{{0.85f, 0.12f, 0.10f},
                                           {0.10f, 0.55f, 0.20f},
                                           {0.12f, 0.25f, 0.80f},
                                           {0.95f, 0.80f, 0.10f},
                                           {0.60f, 0.15f, 0.65f},
                                           {0.95f, 0.50f, 0.05f}}};
  return palette;
}

void WorkspaceScene::validate() const {
  if (balls.empty() || balls.size() > 10) {
    throw Error("scene must hold 1..10 balls, got " + std::to_string(balls.size()));
  }
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const auto& c = balls[i].center;
    if (c.x() < 0.0 || c.x() > kWidth || c.y() < 0.0 || c.y() > kHeight) {
      throw Error("ball " + std::to_string(i) + " outside workspace");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if ((balls[j].center - c).norm() < kBallDiameter) {
        throw Error("balls " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
      }
    }
  }
}

Eigen::Vector2d end_effector(const ArmPose& pose, const RenderConfig& config) {
  return config.arm_base + forward_kinematics(pose, config.links);
}

Image render_scene(const WorkspaceScene& scene, const ArmPose& pose, const RenderConfig& config) {
  Image img;
  img.height = config.height;
  img.width = config.width;
  img.rgb.resize(static_cast<std::size_t>(config.height) * config.width * 3);
  for (std::size_t p = 0; p < img.rgb.size(); p += 3) {
    img.rgb[p] = config.background[0];
    img.rgb[p + 1] = config.background[1];
    img.rgb[p + 2] = config.background[2];
  }

  const Eigen::Vector2d eye = end_effector(pose, config);
  const double px_per_cm_x = config.width / config.view_extent;
  const double px_per_cm_y = config.height / config.view_extent;
  const double radius_px = 0.5 * WorkspaceScene::kBallDiameter * px_per_cm_x;

  for (const Ball& ball : scene.balls) {
    // Continuous pixel coordinates: pixel (r, c) spans [r, r+1) x [c, c+1);
    // the end-effector maps to (H/2, W/2). Image rows grow with -y.
    const double cx = (ball.center.x() - eye.x()) * px_per_cm_x + 0.5 * config.width;
    const double cy = -(ball.center.y() - eye.y()) * px_per_cm_y + 0.5 * config.height;
    const int r0 = std::max(0, static_cast<int>(std::floor(cy - radius_px - 1.0)));
    const int r1 = std::min(config.height - 1, static_cast<int>(std::ceil(cy + radius_px + 1.0)));
    const int c0 = std::max(0, static_cast<int>(std::floor(cx - radius_px - 1.0)));
    const int c1 = std::min(config.width - 1, static_cast<int>(std::ceil(cx + radius_px + 1.0)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        // Outside the table the view shows background only.
        const double wx = eye.x() + (c + 0.5 - 0.5 * config.width) / px_per_cm_x;
        const double wy = eye.y() - (r + 0.5 - 0.5 * config.height) / px_per_cm_y;
        if (wx < 0.0 || wx > WorkspaceScene::kWidth || wy < 0.0 || wy > WorkspaceScene::kHeight) {
          continue;
        }
        const double d = std::hypot(c + 0.5 - cx, r + 0.5 - cy);
        const double coverage = std::clamp(radius_px - d + 0.5, 0.0, 1.0);
        if (coverage <= 0.0) continue;
        const auto a = static_cast<float>(coverage);
        for (int ch = 0; ch < 3; ++ch) {
          float& v = img.at(r, c, ch);
          v = v * (1.0f - a) + ball.color[ch] * a;
        }
      }
    }
  }
  return img;
}

}  // namespace ecl::envsim
