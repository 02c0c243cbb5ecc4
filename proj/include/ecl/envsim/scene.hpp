#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ecl/envsim/kinematics.hpp"

namespace ecl::envsim {

using Rgb = std::array<float, 3>;

struct Ball {
  Eigen::Vector2d center;  // cm, workspace frame
  Rgb color;
};

/// Tabletop with colored balls. Workspace frame: x in [0, width], y in
/// [0, height], origin bottom-left.
struct WorkspaceScene {
  static constexpr double kWidth = 90.0;
  static constexpr double kHeight = 60.0;
  static constexpr double kBallDiameter = 4.0;

  std::vector<Ball> balls;

  /// Throws ecl::Error when an invariant is violated.
  void validate() const;
};

/// Rendering and arm geometry shared by the simulator and the dataset.
struct RenderConfig {
  int height = 64;
  int width = 64;
  double view_extent = 40.0;  // cm, side of the square egocentric window
  LinkLengths links{};
  Eigen::Vector2d arm_base{0.0, 30.0};  // workspace frame, mid-left edge
  Rgb background{0.82f, 0.80f, 0.74f};
};

/// Fixed ball palette.
const std::array<Rgb, 6>& ball_palette();

/// Dense image, row-major pixels with interleaved RGB (H x W x 3).
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> rgb;

  float at(int row, int col, int channel) const {
    return rgb[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
  }
  float& at(int row, int col, int channel) {
    return rgb[(static_cast<std::size_t>(row) * width + col) * 3 + channel];
  }
};

struct Frame {
  Image image;
  ArmPose pose;
};

/// One counting trial: the arm visits each ball once, one frame per visit.
struct Episode {
  std::string id;
  int count = 0;
  std::vector<Frame> frames;
};

}  // namespace ecl::envsim
