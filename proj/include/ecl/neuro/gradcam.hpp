#pragma once

#include <filesystem>

#include "ecl/models/embodied.hpp"
#include "ecl/models/vision.hpp"

namespace ecl::neuro {

/// map = ReLU(sum_k alpha_k A_k) with alpha_k the spatial mean of dy_c/dA_k;
/// returns a height x width matrix.
Mat<double> grad_cam(const FeatureMap<double>& activation, const FeatureMap<double>& gradient);

/// Bilinear resampling with pixel-center alignment.
Mat<double> upsample_bilinear(const Mat<double>& map, int height, int width);

/// 8-bit binary PGM scaled so the maximum maps to 255 (all zeros stay 0).
void write_pgm(const std::filesystem::path& path, const Mat<double>& map);

/// Grad-CAM of count class `label` (1-based) at conv block `block` (1..3)
/// for frame `frame` of the episode, upsampled to the frame size.
Mat<double> embodied_grad_cam(const EmbodiedParams<float>& params, const SequenceInput<float>& input, Index frame,
                              int block, int label);
Mat<double> vision_grad_cam(const VisionParams<float>& params, const SequenceInput<float>& input, VisionMode mode,
                            Index frame, int block, int label);

}  // namespace ecl::neuro
