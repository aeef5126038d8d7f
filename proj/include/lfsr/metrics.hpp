#ifndef LFSR_METRICS_HPP
#define LFSR_METRICS_HPP

#include "lfsr/light_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lfsr {

/// 10 log10(peak^2 / MSE); +infinity for identical inputs.
template <typename Scalar>
double psnr(const Image<Scalar>& a, const Image<Scalar>& b, double peak = 1.0) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("psnr: shape mismatch");
  const double mse = (a - b).template cast<double>().squaredNorm() / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

/// Mean of the finite entries; `excluded` receives the number skipped.
inline double finite_mean(const std::vector<double>& values, int* excluded = nullptr) {
  double sum = 0.0;
  int n = 0, skipped = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    } else {
      ++skipped;
    }
  }
  if (excluded) *excluded = skipped;
  return n ? sum / n : std::numeric_limits<double>::infinity();
}

namespace detail {

inline Eigen::VectorXd gaussian_window(int size, double sigma) {
  Eigen::VectorXd g(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) g[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
  return g / g.sum();
}

/// Separable 'valid' filtering.
inline Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& img, const Eigen::VectorXd& k) {
  const Index n = k.size(), oh = img.rows() - n + 1, ow = img.cols() - n + 1;
  Eigen::MatrixXd tmp(oh, img.cols());
  for (Index y = 0; y < oh; ++y) tmp.row(y) = k.transpose() * img.middleRows(y, n);
  Eigen::MatrixXd out(oh, ow);
  for (Index x = 0; x < ow; ++x) out.col(x) = tmp.middleCols(x, n) * k;
  return out;
}

}  // namespace detail

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, peak 1, averaged over positions where the window fits.
template <typename Scalar>
double ssim(const Image<Scalar>& a, const Image<Scalar>& b) {
  constexpr int kWindow = 11;
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("ssim: shape mismatch");
  if (a.rows() < kWindow || a.cols() < kWindow) throw Error("ssim: image smaller than the 11x11 window");
  const Eigen::MatrixXd x = a.template cast<double>(), y = b.template cast<double>();
  const auto g = detail::gaussian_window(kWindow, 1.5);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const Eigen::ArrayXXd mx = detail::filter_valid(x, g).array();
  const Eigen::ArrayXXd my = detail::filter_valid(y, g).array();
  const Eigen::ArrayXXd sxx = detail::filter_valid(x.cwiseProduct(x), g).array() - mx * mx;
  const Eigen::ArrayXXd syy = detail::filter_valid(y.cwiseProduct(y), g).array() - my * my;
  const Eigen::ArrayXXd sxy = detail::filter_valid(x.cwiseProduct(y), g).array() - mx * my;
  const Eigen::ArrayXXd map =
      ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean();
}

/// Per-view PSNR with the corner-vs-center diagnostic.
struct ViewPsnrGrid {
  Eigen::MatrixXd grid;  // (M, N) dB
  double min = 0.0;
  double max = 0.0;
  /// mean(center 3x3 block) - mean(four corners)
  double center_corner_gap = 0.0;
};

inline double center_corner_gap(const Eigen::MatrixXd& grid) {
  const Index m = grid.rows(), n = grid.cols();
  const Index r0 = std::max<Index>(0, m / 2 - 1), c0 = std::max<Index>(0, n / 2 - 1);
  const Index rh = std::min<Index>(3, m - r0), ch = std::min<Index>(3, n - c0);
  const double center = grid.block(r0, c0, rh, ch).mean();
  const double corners = (grid(0, 0) + grid(0, n - 1) + grid(m - 1, 0) + grid(m - 1, n - 1)) / 4.0;
  return center - corners;
}

template <typename Scalar>
ViewPsnrGrid per_view_psnr_grid(const LightField<Scalar>& pred, const LightField<Scalar>& gt) {
  require_same_shape(pred, gt, "per_view_psnr_grid");
  ViewPsnrGrid r;
  r.grid.resize(pred.angular_rows(), pred.angular_cols());
  for (Index m = 0; m < pred.angular_rows(); ++m)
    for (Index n = 0; n < pred.angular_cols(); ++n)
      r.grid(m, n) = psnr(Image<Scalar>(pred.view({m, n})), Image<Scalar>(gt.view({m, n})));
  r.min = r.grid.minCoeff();
  r.max = r.grid.maxCoeff();
  r.center_corner_gap = center_corner_gap(r.grid);
  return r;
}

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

/// Sobel gradient magnitude with replicated borders.
template <typename Scalar>
Eigen::MatrixXd sobel_magnitude(const Image<Scalar>& img) {
  const Index h = img.rows(), w = img.cols();
  auto at = [&](Index y, Index x) {
    return static_cast<double>(img(std::clamp<Index>(y, 0, h - 1), std::clamp<Index>(x, 0, w - 1)));
  };
  Eigen::MatrixXd mag(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      const double gx = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
      mag(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  return mag;
}

/// Sobel magnitudes of every horizontal EPI followed by every vertical EPI,
/// flattened. Each entry identifies one (orientation, EPI, pixel).
template <typename Scalar>
std::vector<double> epi_edge_strength(const LightField<Scalar>& lf) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * lf.data().size()));
  auto append = [&](const EpiSlice<Scalar>& e) {
    const Eigen::MatrixXd mag = sobel_magnitude(e.data);
    for (Index i = 0; i < mag.rows(); ++i)
      for (Index j = 0; j < mag.cols(); ++j) out.push_back(mag(i, j));
  };
  for (Index m = 0; m < lf.angular_rows(); ++m)
    for (Index y = 0; y < lf.height(); ++y) append(epi_slice(lf, EpiOrientation::horizontal, y, m));
  for (Index n = 0; n < lf.angular_cols(); ++n)
    for (Index x = 0; x < lf.width(); ++x) append(epi_slice(lf, EpiOrientation::vertical, x, n));
  return out;
}

/// Default edge-strength cutoff defining the ground-truth edge set.
inline constexpr double kReferenceEdgeThreshold = 0.5;

/// Edge-parallax precision/recall stand-in computed on EPI Sobel edges.
///
/// Ground-truth edges: gt EPI pixels above `reference_threshold`. For each
/// cutoff t, predicted edges are pred EPI pixels above t. An empty predicted
/// set has precision 1; an empty ground-truth set has recall 1.
template <typename Scalar>
std::vector<PrPoint> parallax_pr_curve(const LightField<Scalar>& pred, const LightField<Scalar>& gt,
                                       const std::vector<double>& thresholds,
                                       double reference_threshold = kReferenceEdgeThreshold) {
  require_same_shape(pred, gt, "parallax_pr_curve");
  const auto ps = epi_edge_strength(pred);
  const auto gs = epi_edge_strength(gt);
  std::vector<PrPoint> points;
  for (double t : thresholds) {
    std::size_t both = 0, predicted = 0, truth = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const bool p = ps[i] > t, g = gs[i] > reference_threshold;
      predicted += p;
      truth += g;
      both += p && g;
    }
    PrPoint pt;
    pt.threshold = t;
    pt.precision = predicted ? static_cast<double>(both) / static_cast<double>(predicted) : 1.0;
    pt.recall = truth ? static_cast<double>(both) / static_cast<double>(truth) : 1.0;
    points.push_back(pt);
  }
  return points;
}

/// Descending cutoffs from `hi` to `lo`, evenly spaced.
inline std::vector<double> default_pr_thresholds(int count = 24, double hi = 2.0, double lo = 0.05) {
  std::vector<double> t;
  for (int i = 0; i < count; ++i) t.push_back(hi - (hi - lo) * i / (count - 1));
  return t;
}

/// Every operating point of the stand-in curve: one per distinct predicted
/// edge strength v (predicted set: strength >= v), in order of rising recall.
/// The threshold field holds v.
template <typename Scalar>
std::vector<PrPoint> parallax_pr_curve_full(const LightField<Scalar>& pred, const LightField<Scalar>& gt,
                                            double reference_threshold = kReferenceEdgeThreshold) {
  require_same_shape(pred, gt, "parallax_pr_curve_full");
  const auto ps = epi_edge_strength(pred);
  const auto gs = epi_edge_strength(gt);
  std::vector<std::size_t> order(ps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ps[a] > ps[b]; });
  std::size_t truth = 0;
  for (double g : gs) truth += g > reference_threshold;
  std::vector<PrPoint> points;
  std::size_t both = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    both += gs[order[k]] > reference_threshold;
    if (k + 1 < order.size() && ps[order[k + 1]] == ps[order[k]]) continue;
    PrPoint pt;
    pt.threshold = ps[order[k]];
    pt.precision = static_cast<double>(both) / static_cast<double>(k + 1);
    pt.recall = truth ? static_cast<double>(both) / static_cast<double>(truth) : 1.0;
    points.push_back(pt);
  }
  return points;
}

/// Interpolated precision at recall r: the best precision reached at any
/// recall >= r.
inline double interpolated_precision(const std::vector<PrPoint>& curve, double r) {
  double best = 0.0;
  for (const auto& p : curve)
    if (p.recall >= r) best = std::max(best, p.precision);
  return best;
}

/// interpolated_precision for many queries: sorted recalls plus suffix maxima.
class InterpolatedPrecision {
 public:
  explicit InterpolatedPrecision(const std::vector<PrPoint>& curve) {
    std::vector<std::pair<double, double>> rp;
    for (const auto& p : curve) rp.emplace_back(p.recall, p.precision);
    std::sort(rp.begin(), rp.end());
    recall_.resize(rp.size());
    best_.resize(rp.size());
    double best = 0.0;
    for (std::size_t i = rp.size(); i-- > 0;) {
      best = std::max(best, rp[i].second);
      recall_[i] = rp[i].first;
      best_[i] = best;
    }
  }

  double operator()(double r) const {
    const auto it = std::lower_bound(recall_.begin(), recall_.end(), r);
    return it == recall_.end() ? 0.0 : best_[static_cast<std::size_t>(it - recall_.begin())];
  }

  double min_recall() const { return recall_.empty() ? 1.0 : recall_.front(); }
  double max_recall() const { return recall_.empty() ? 0.0 : recall_.back(); }

 private:
  std::vector<double> recall_;
  std::vector<double> best_;
};

/// Smallest interpolated-precision margin of `a` over `b` across the recall
/// levels of both curves inside their shared recall range, and where it
/// occurs. +inf when the ranges do not overlap.
inline std::pair<double, double> pr_margin(const std::vector<PrPoint>& a, const std::vector<PrPoint>& b) {
  const InterpolatedPrecision ia(a), ib(b);
  const double lo = std::max(ia.min_recall(), ib.min_recall()), hi = std::min(ia.max_recall(), ib.max_recall());
  std::pair<double, double> worst{std::numeric_limits<double>::infinity(), 0.0};
  if (lo > hi) return worst;
  for (const auto* c : {&a, &b})
    for (const auto& p : *c)
      if (p.recall >= lo && p.recall <= hi) {
        const double m = ia(p.recall) - ib(p.recall);
        if (m < worst.first) worst = {m, p.recall};
      }
  return worst;
}

/// True if `a` reaches at least `b`'s interpolated precision at every recall
/// level both curves cover.
inline bool pr_dominates(const std::vector<PrPoint>& a, const std::vector<PrPoint>& b, double tol = 0.0) {
  return pr_margin(a, b).first + tol >= 0.0;
}

}  // namespace lfsr

#endif  // LFSR_METRICS_HPP
