#include "lfsr/plot.hpp"

#include <algorithm>
#include <cmath>

namespace lfsr {

Canvas::Canvas(Index rows, Index cols, std::array<float, 3> fill) {
  for (float v : fill) planes.push_back(Image<float>::Constant(rows, cols, v));
}

void Canvas::put(Index y, Index x, std::array<float, 3> c) {
  if (y < 0 || x < 0 || y >= rows() || x >= cols()) return;
  for (int k = 0; k < 3; ++k) planes[static_cast<std::size_t>(k)](y, x) = c[static_cast<std::size_t>(k)];
}

void Canvas::fill_rect(Index y0, Index x0, Index h, Index w, std::array<float, 3> c) {
  for (Index y = y0; y < y0 + h; ++y)
    for (Index x = x0; x < x0 + w; ++x) put(y, x, c);
}

void Canvas::line(double y0, double x0, double y1, double x1, std::array<float, 3> c, int thickness) {
  const double len = std::max(std::abs(y1 - y0), std::abs(x1 - x0));
  const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
  const int r = thickness / 2;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const auto y = static_cast<Index>(std::lround(y0 + t * (y1 - y0)));
    const auto x = static_cast<Index>(std::lround(x0 + t * (x1 - x0)));
    fill_rect(y - r, x - r, thickness, thickness, c);
  }
}

std::array<float, 3> colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{{0.267, 0.005, 0.329},
                                                               {0.231, 0.322, 0.545},
                                                               {0.129, 0.569, 0.549},
                                                               {0.369, 0.788, 0.384},
                                                               {0.993, 0.906, 0.144}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  std::array<float, 3> c{};
  for (std::size_t k = 0; k < 3; ++k) c[k] = static_cast<float>(stops[i][k] * (1 - f) + stops[i + 1][k] * f);
  return c;
}

Canvas psnr_heatmap(const Eigen::MatrixXd& grid, int cell, double lo, double hi) {
  if (lo >= hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (Index i = 0; i < grid.size(); ++i)
      if (std::isfinite(grid.data()[i])) {
        lo = std::min(lo, grid.data()[i]);
        hi = std::max(hi, grid.data()[i]);
      }
    if (!std::isfinite(lo)) lo = hi = 0.0;
  }
  const double span = hi > lo ? hi - lo : 1.0;
  Canvas c(grid.rows() * cell, grid.cols() * cell);
  for (Index m = 0; m < grid.rows(); ++m)
    for (Index n = 0; n < grid.cols(); ++n) {
      const double v = grid(m, n);
      const auto col = std::isfinite(v) ? colormap((v - lo) / span) : std::array<float, 3>{1.f, 1.f, 1.f};
      c.fill_rect(m * cell, n * cell, cell, cell, col);
    }
  return c;
}

std::array<float, 3> palette(std::size_t i) {
  static constexpr std::array<std::array<float, 3>, 6> p{{{0.12f, 0.47f, 0.71f},
                                                          {1.00f, 0.50f, 0.05f},
                                                          {0.17f, 0.63f, 0.17f},
                                                          {0.84f, 0.15f, 0.16f},
                                                          {0.58f, 0.40f, 0.74f},
                                                          {0.55f, 0.34f, 0.29f}}};
  return p[i % p.size()];
}

Canvas pr_plot(const std::vector<std::vector<PrPoint>>& curves, int size) {
  const int pad = 20, inner = size - 2 * pad;
  Canvas c(size, size);
  const std::array<float, 3> axis{0.2f, 0.2f, 0.2f}, gridc{0.88f, 0.88f, 0.88f};
  for (int k = 1; k < 10; ++k) {
    const double g = pad + inner * k / 10.0;
    c.line(pad, g, pad + inner, g, gridc);
    c.line(g, pad, g, pad + inner, gridc);
  }
  c.line(pad + inner, pad, pad + inner, pad + inner, axis);
  c.line(pad, pad, pad + inner, pad, axis);
  auto to_px = [&](const PrPoint& p) {
    return std::pair{pad + inner * (1.0 - p.precision), pad + inner * p.recall};
  };
  for (std::size_t i = 0; i < curves.size(); ++i) {
    auto pts = curves[i];
    std::sort(pts.begin(), pts.end(), [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const auto [y, x] = to_px(pts[j]);
      c.fill_rect(static_cast<Index>(y) - 2, static_cast<Index>(x) - 2, 5, 5, palette(i));
      if (j > 0) {
        const auto [py, px] = to_px(pts[j - 1]);
        c.line(py, px, y, x, palette(i), 2);
      }
    }
  }
  return c;
}

Image<float> epi_strip(const LightField<float>& lf, EpiOrientation orientation, Index spatial, Index angular,
                       int stretch) {
  const auto e = epi_slice(lf, orientation, spatial, angular);
  Image<float> out(e.data.rows() * stretch, e.data.cols());
  for (Index r = 0; r < out.rows(); ++r) out.row(r) = e.data.row(r / stretch);
  return out;
}

}  // namespace lfsr
