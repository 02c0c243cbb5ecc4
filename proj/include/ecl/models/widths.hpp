#pragma once

#include <array>

#include "ecl/core/errors.hpp"
#include "ecl/core/types.hpp"

namespace ecl {

struct ModelWidths {
  std::array<int, 3> conv_channels{8, 16, 32};
  int visual = 64;
  int motor_hidden = 32;
  int motor = 64;
  int hidden = 128;            // both LSTM layers
  int classifier_hidden = 64;  // vision-only MLP head
  double dropout = 0.3;        // between LSTM layers, training only
  int joints = 2;
  int classes = kNumClasses;

  int lstm_input() const { return visual + motor; }

  void validate() const {
    for (int c : conv_channels)
      if (c < 1) throw ConfigError("conv channel widths must be positive");
    if (visual < 1 || motor_hidden < 1 || motor < 1 || hidden < 1 || classifier_hidden < 1 || classes < 1)
      throw ConfigError("layer widths must be positive");
    if (visual != motor) throw ConfigError("visual and motor feature widths must match");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  }
};

}  // namespace ecl
