#ifndef LFSR_RESAMPLE_HPP
#define LFSR_RESAMPLE_HPP

#include "lfsr/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace lfsr {

enum class Clamp { yes, no };

/// Keys cubic convolution kernel with a = -0.5.
template <typename Scalar>
Scalar keys_cubic(Scalar x) {
  const Scalar a = Scalar(-0.5);
  const Scalar t = std::abs(x);
  if (t <= Scalar(1)) return (a + 2) * t * t * t - (a + 3) * t * t + 1;
  if (t < Scalar(2)) return a * t * t * t - 5 * a * t * t + 8 * a * t - 4 * a;
  return Scalar(0);
}

/// Dense (out x in) interpolation matrix for one axis.
///
/// Pixel centers follow the half-pixel convention; when shrinking, the kernel
/// is stretched by 1/scale (antialiasing). Rows are normalized to sum to one
/// and out-of-range taps are folded onto the edge pixel (replicate border).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cubic_axis_weights(Index in, Index out) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> w =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(out, in);
  const double scale = static_cast<double>(out) / static_cast<double>(in);
  const double stretch = scale < 1.0 ? scale : 1.0;
  const double half_width = 2.0 / stretch;
  for (Index i = 0; i < out; ++i) {
    const double center = (static_cast<double>(i) + 0.5) / scale - 0.5;
    const auto first = static_cast<Index>(std::floor(center - half_width));
    const auto last = static_cast<Index>(std::ceil(center + half_width));
    double total = 0.0;
    for (Index j = first; j <= last; ++j) {
      const double k = stretch * keys_cubic(stretch * (center - static_cast<double>(j)));
      if (k == 0.0) continue;
      const Index src = std::clamp<Index>(j, 0, in - 1);
      w(i, src) += static_cast<Scalar>(k);
      total += k;
    }
    w.row(i) /= static_cast<Scalar>(total);
  }
  return w;
}

/// Bicubic resize by the rational factor num/den.
///
/// Downsampling requires both dimensions to be divisible by den/num.
template <typename Scalar>
Image<Scalar> bicubic_resize(const Image<Scalar>& img, int num, int den, Clamp clamp = Clamp::yes) {
  if (num <= 0 || den <= 0) throw Error("bicubic_resize: factor must be positive");
  const Index h = img.rows(), w = img.cols();
  if ((h * num) % den != 0 || (w * num) % den != 0)
    throw Error("bicubic_resize: dimensions " + std::to_string(h) + "x" + std::to_string(w) +
                " not divisible for factor " + std::to_string(num) + "/" + std::to_string(den));
  const Index oh = h * num / den, ow = w * num / den;
  const auto rows = cubic_axis_weights<Scalar>(h, oh);
  const auto cols = cubic_axis_weights<Scalar>(w, ow);
  Image<Scalar> out = rows * img * cols.transpose();
  if (clamp == Clamp::yes) out = out.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return out;
}

template <typename Scalar>
Image<Scalar> bicubic_upsample(const Image<Scalar>& img, int alpha, Clamp clamp = Clamp::yes) {
  return bicubic_resize(img, alpha, 1, clamp);
}

template <typename Scalar>
Image<Scalar> bicubic_downsample(const Image<Scalar>& img, int alpha, Clamp clamp = Clamp::yes) {
  return bicubic_resize(img, 1, alpha, clamp);
}

}  // namespace lfsr

#endif  // LFSR_RESAMPLE_HPP
