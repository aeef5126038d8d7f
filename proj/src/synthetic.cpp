#include "lfsr/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace lfsr {

Image<float> shapes_texture(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(rows, cols, 0.5);
  const double scale = std::min(rows, cols) / 138.0;
  const int count = std::max(1, static_cast<int>(std::lround(40.0 * rows * cols / (138.0 * 138.0))));
  for (int i = 0; i < count; ++i) {
    const double cy = unit(rng) * rows, cx = unit(rng) * cols;
    const double r = (3.0 + 11.0 * unit(rng)) * scale;
    const double v = 0.05 + 0.9 * unit(rng);
    const bool disc = unit(rng) < 0.5;
    for (Index y = 0; y < rows; ++y)
      for (Index x = 0; x < cols; ++x) {
        const double dy = y - cy, dx = x - cx;
        const bool inside = disc ? dy * dy + dx * dx < r * r : std::abs(dy) < r && std::abs(dx) < 0.6 * r;
        if (inside) t(y, x) = v;
      }
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) t(y, x) += 0.1 * std::sin(two_pi * x / 9.0) * std::cos(two_pi * y / 13.0);
  return t.cwiseMax(0.0).cwiseMin(1.0).cast<float>();
}

Scene make_synthetic_scene(Index size, Index angular_rows, Index angular_cols, double disparity, std::uint64_t seed,
                           const std::string& name) {
  const Index margin = synth_margin(static_cast<float>(std::abs(disparity)), angular_rows, angular_cols);
  SynthSpec<float> spec;
  spec.texture = shapes_texture(size + 2 * margin, size + 2 * margin, seed);
  spec.disparity = static_cast<float>(disparity);
  spec.angular_rows = angular_rows;
  spec.angular_cols = angular_cols;
  Scene scene;
  scene.name = name;
  scene.luma = synth_lightfield(spec);
  scene.disparity = disparity;
  return scene;
}

}  // namespace lfsr
