#ifndef LFSR_PLOT_HPP
#define LFSR_PLOT_HPP

#include "lfsr/light_field.hpp"
#include "lfsr/metrics.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace lfsr {

/// RGB raster in [0, 1], one plane per channel.
struct Canvas {
  std::vector<Image<float>> planes;

  Canvas(Index rows, Index cols, std::array<float, 3> fill = {1.f, 1.f, 1.f});
  Index rows() const { return planes[0].rows(); }
  Index cols() const { return planes[0].cols(); }
  void put(Index y, Index x, std::array<float, 3> c);
  void fill_rect(Index y0, Index x0, Index h, Index w, std::array<float, 3> c);
  void line(double y0, double x0, double y1, double x1, std::array<float, 3> c, int thickness = 1);
};

/// Perceptual blue-green-yellow ramp for t in [0, 1].
std::array<float, 3> colormap(double t);

/// Per-view PSNR heatmap, `cell` pixels per view; infinite entries drawn white.
/// Colour range is [lo, hi]; both default to the finite min/max.
Canvas psnr_heatmap(const Eigen::MatrixXd& grid, int cell = 32, double lo = 0.0, double hi = 0.0);

/// Recall on x, precision on y, both over [0, 1]; one colour per curve in
/// palette order.
Canvas pr_plot(const std::vector<std::vector<PrPoint>>& curves, int size = 320);
std::array<float, 3> palette(std::size_t i);

/// EPI with the angular axis stretched by `stretch` so the line slopes are visible.
Image<float> epi_strip(const LightField<float>& lf, EpiOrientation orientation, Index spatial, Index angular,
                       int stretch = 8);

}  // namespace lfsr

#endif  // LFSR_PLOT_HPP
