#include "ecl/neuro/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ecl::neuro {

namespace {

FeatureMap<double> widen(const FeatureMap<float>& f) { return {f.data.cast<double>(), f.height, f.width}; }

void check_tap(int block, int label) {
  if (block < 1 || block > 3) throw ConfigError("Grad-CAM block must be 1, 2 or 3");
  if (label < 1 || label > kNumClasses) throw LabelError("Grad-CAM class out of range");
}

}  // namespace

Mat<double> grad_cam(const FeatureMap<double>& activation, const FeatureMap<double>& gradient) {
  if (activation.data.rows() != gradient.data.rows() || activation.data.cols() != gradient.data.cols())
    throw DimensionError("grad_cam: activation and gradient shapes differ");
  const Vec<double> alpha = gradient.data.rowwise().mean();
  const Vec<double> flat = (activation.data.transpose() * alpha).cwiseMax(0.0);
  Mat<double> map(activation.height, activation.width);
  for (int r = 0; r < activation.height; ++r)
    for (int c = 0; c < activation.width; ++c) map(r, c) = flat(static_cast<Index>(r) * activation.width + c);
  return map;
}

Mat<double> upsample_bilinear(const Mat<double>& map, int height, int width) {
  if (map.size() == 0) throw DimensionError("upsample_bilinear: empty map");
  Mat<double> out(height, width);
  const double sy = static_cast<double>(map.rows()) / height;
  const double sx = static_cast<double>(map.cols()) / width;
  for (int r = 0; r < height; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(map.rows() - 1));
    const auto y0 = static_cast<Index>(std::floor(y));
    const Index y1 = std::min<Index>(y0 + 1, map.rows() - 1);
    const double fy = y - static_cast<double>(y0);
    for (int c = 0; c < width; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(map.cols() - 1));
      const auto x0 = static_cast<Index>(std::floor(x));
      const Index x1 = std::min<Index>(x0 + 1, map.cols() - 1);
      const double fx = x - static_cast<double>(x0);
      out(r, c) = (1 - fy) * ((1 - fx) * map(y0, x0) + fx * map(y0, x1)) + fy * ((1 - fx) * map(y1, x0) + fx * map(y1, x1));
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Mat<double>& map) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetIoError("cannot write " + path.string());
  out << "P5\n" << map.cols() << " " << map.rows() << "\n255\n";
  const double peak = map.size() > 0 ? map.maxCoeff() : 0.0;
  for (Index r = 0; r < map.rows(); ++r)
    for (Index c = 0; c < map.cols(); ++c) {
      const double v = peak > 0 ? std::clamp(map(r, c) / peak, 0.0, 1.0) : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
}

Mat<double> embodied_grad_cam(const EmbodiedParams<float>& params, const SequenceInput<float>& input, Index frame,
                              int block, int label) {
  check_tap(block, label);
  if (frame < 0 || frame >= input.steps()) throw DimensionError("Grad-CAM frame out of range");
  const auto fwd = embodied_forward(input, params);
  auto scratch = zeros_like(params);
  std::array<FeatureMap<float>, 3> taps;
  embodied_backward(input, params, fwd, Vec<float>(Vec<float>::Unit(params.widths.classes, label - 1)),
                    Mat<float>(Mat<float>::Zero(input.steps(), params.widths.joints)), scratch, frame, &taps);
  const auto b = static_cast<std::size_t>(block - 1);
  const auto map = grad_cam(widen(fwd.tape.visual[static_cast<std::size_t>(frame)].activation[b]), widen(taps[b]));
  const auto& img = input.images()[static_cast<std::size_t>(frame)];
  return upsample_bilinear(map, img.height, img.width);
}

Mat<double> vision_grad_cam(const VisionParams<float>& params, const SequenceInput<float>& input, VisionMode mode,
                            Index frame, int block, int label) {
  check_tap(block, label);
  if (frame < 0 || frame >= input.steps()) throw DimensionError("Grad-CAM frame out of range");
  const auto fwd = vision_forward(input, params, mode);
  // Single mode only consumes the final frame.
  const std::size_t tap_frame = mode == VisionMode::Single ? 0 : static_cast<std::size_t>(frame);
  if (mode == VisionMode::Single && frame != input.steps() - 1)
    throw DimensionError("single-image baseline only sees the final frame");
  auto scratch = zeros_like(params);
  std::array<FeatureMap<float>, 3> taps;
  vision_backward(params, fwd, Vec<float>(Vec<float>::Unit(params.widths.classes, label - 1)), scratch, tap_frame,
                  &taps);
  const auto b = static_cast<std::size_t>(block - 1);
  const auto map = grad_cam(widen(fwd.tape.visual[tap_frame].activation[b]), widen(taps[b]));
  const auto& img = input.images()[static_cast<std::size_t>(frame)];
  return upsample_bilinear(map, img.height, img.width);
}

}  // namespace ecl::neuro
