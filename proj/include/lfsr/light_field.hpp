#ifndef LFSR_LIGHT_FIELD_HPP
#define LFSR_LIGHT_FIELD_HPP

#include "lfsr/resample.hpp"
#include "lfsr/tensor.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

namespace lfsr {

struct AngularIndex {
  Index m = 0;  // angular row (v)
  Index n = 0;  // angular column (u)
  friend bool operator==(const AngularIndex&, const AngularIndex&) = default;
};

/// 4D light field L(x, u) stored as data(m, n, y, x).
///
/// Angular rows m correspond to v, angular columns n to u. Values are
/// luminance in [0, 1] once ingested.
template <typename Scalar>
class LightField {
 public:
  LightField() = default;
  LightField(Index m, Index n, Index h, Index w) : data_(m, n, h, w) {
    if (m < 1 || n < 1 || h < 1 || w < 1) throw Error("light field dimensions must be positive");
  }
  explicit LightField(Tensor4<Scalar> data) : data_(std::move(data)) {
    for (int a = 0; a < 4; ++a)
      if (data_.dim(a) < 1) throw Error("light field dimensions must be positive");
  }

  Index angular_rows() const { return data_.dim(0); }
  Index angular_cols() const { return data_.dim(1); }
  Index height() const { return data_.dim(2); }
  Index width() const { return data_.dim(3); }
  Index view_count() const { return data_.dim(0) * data_.dim(1); }

  Tensor4<Scalar>& data() { return data_; }
  const Tensor4<Scalar>& data() const { return data_; }

  bool contains(AngularIndex u) const {
    return u.m >= 0 && u.m < angular_rows() && u.n >= 0 && u.n < angular_cols();
  }
  Index raster(AngularIndex u) const { return u.m * angular_cols() + u.n; }

  typename Tensor4<Scalar>::PlaneMap view(AngularIndex u) { return data_.plane(u.m, u.n); }
  typename Tensor4<Scalar>::ConstPlaneMap view(AngularIndex u) const { return data_.plane(u.m, u.n); }

  template <typename Other>
  LightField<Other> cast() const {
    return LightField<Other>(data_.template cast<Other>());
  }

 private:
  Tensor4<Scalar> data_;
};

template <typename Scalar>
void require_same_shape(const LightField<Scalar>& a, const LightField<Scalar>& b, const char* what) {
  require_same_shape(a.data(), b.data(), what);
}

/// Copy of the (m, n) sub-aperture view.
template <typename Scalar>
Image<Scalar> extract_view(const LightField<Scalar>& lf, AngularIndex u) {
  if (!lf.contains(u))
    throw std::out_of_range("extract_view: angular index (" + std::to_string(u.m) + "," +
                            std::to_string(u.n) + ") out of range");
  return Image<Scalar>(lf.view(u));
}

template <typename Scalar>
void set_view(LightField<Scalar>& lf, AngularIndex u, const Image<Scalar>& img) {
  if (!lf.contains(u)) throw std::out_of_range("set_view: angular index out of range");
  if (img.rows() != lf.height() || img.cols() != lf.width()) throw Error("set_view: view size mismatch");
  lf.view(u) = img;
}

enum class EpiOrientation { horizontal, vertical };

/// Epipolar-plane slice.
///
/// Horizontal E_{y,v}: fixed (y, m), data(n, x). Vertical E_{x,u}: fixed
/// (x, n), data(m, y).
template <typename Scalar>
struct EpiSlice {
  Image<Scalar> data;
  EpiOrientation orientation = EpiOrientation::horizontal;
  Index fixed_spatial = 0;  // y for horizontal, x for vertical
  Index fixed_angular = 0;  // m for horizontal, n for vertical
};

template <typename Scalar>
EpiSlice<Scalar> epi_slice(const LightField<Scalar>& lf, EpiOrientation orientation, Index spatial,
                           Index angular) {
  const auto& d = lf.data();
  EpiSlice<Scalar> s{{}, orientation, spatial, angular};
  if (orientation == EpiOrientation::horizontal) {
    if (spatial < 0 || spatial >= lf.height() || angular < 0 || angular >= lf.angular_rows())
      throw std::out_of_range("epi_slice: horizontal slice coordinates out of range");
    s.data.resize(lf.angular_cols(), lf.width());
    for (Index n = 0; n < lf.angular_cols(); ++n)
      for (Index x = 0; x < lf.width(); ++x) s.data(n, x) = d(angular, n, spatial, x);
  } else {
    if (spatial < 0 || spatial >= lf.width() || angular < 0 || angular >= lf.angular_cols())
      throw std::out_of_range("epi_slice: vertical slice coordinates out of range");
    s.data.resize(lf.angular_rows(), lf.height());
    for (Index m = 0; m < lf.angular_rows(); ++m)
      for (Index y = 0; y < lf.height(); ++y) s.data(m, y) = d(m, angular, y, spatial);
  }
  return s;
}

/// Applies an image-to-image function to every view.
template <typename Scalar, typename Fn>
LightField<Scalar> map_views(const LightField<Scalar>& lf, Fn&& fn) {
  Image<Scalar> first = fn(Image<Scalar>(lf.view({0, 0})));
  LightField<Scalar> out(lf.angular_rows(), lf.angular_cols(), first.rows(), first.cols());
  for (Index m = 0; m < lf.angular_rows(); ++m)
    for (Index n = 0; n < lf.angular_cols(); ++n)
      out.view({m, n}) = (m == 0 && n == 0) ? first : fn(Image<Scalar>(lf.view({m, n})));
  return out;
}

template <typename Scalar>
LightField<Scalar> upsample_views(const LightField<Scalar>& lf, int alpha) {
  return map_views(lf, [alpha](const Image<Scalar>& v) { return bicubic_upsample(v, alpha); });
}

template <typename Scalar>
LightField<Scalar> downsample_views(const LightField<Scalar>& lf, int alpha) {
  return map_views(lf, [alpha](const Image<Scalar>& v) { return bicubic_downsample(v, alpha); });
}

/// Spatial crop applied identically to every view.
template <typename Scalar>
LightField<Scalar> crop(const LightField<Scalar>& lf, Index y0, Index x0, Index h, Index w) {
  if (y0 < 0 || x0 < 0 || y0 + h > lf.height() || x0 + w > lf.width())
    throw std::out_of_range("crop: window exceeds light field");
  return map_views(lf, [&](const Image<Scalar>& v) { return Image<Scalar>(v.block(y0, x0, h, w)); });
}

/// Synthetic scene description: a center-view texture displaced by disparity.
template <typename Scalar>
struct SynthSpec {
  Image<Scalar> texture;
  /// Pixels per angular step; either one value or a map the size of the output.
  std::variant<Scalar, Image<Scalar>> disparity = Scalar(0);
  Index angular_rows = 7;
  Index angular_cols = 7;
};

/// Samples an image at a real-valued position with the Keys bicubic kernel.
/// Integer positions return the stored pixel exactly.
template <typename Scalar>
Scalar sample_bicubic(const Image<Scalar>& img, Scalar py, Scalar px) {
  const auto y0 = static_cast<Index>(std::floor(py));
  const auto x0 = static_cast<Index>(std::floor(px));
  Scalar acc = 0;
  for (Index i = y0 - 1; i <= y0 + 2; ++i) {
    const Scalar wy = keys_cubic(py - static_cast<Scalar>(i));
    if (wy == Scalar(0)) continue;
    const Index yy = std::clamp<Index>(i, 0, img.rows() - 1);
    for (Index j = x0 - 1; j <= x0 + 2; ++j) {
      const Scalar wx = keys_cubic(px - static_cast<Scalar>(j));
      if (wx == Scalar(0)) continue;
      acc += wy * wx * img(yy, std::clamp<Index>(j, 0, img.cols() - 1));
    }
  }
  return acc;
}

/// Margin (pixels per side) that synth_lightfield crops from the texture.
template <typename Scalar>
Index synth_margin(Scalar max_abs_disparity, Index angular_rows, Index angular_cols) {
  const double reach =
      static_cast<double>(max_abs_disparity) * static_cast<double>(std::max(angular_rows, angular_cols) - 1) / 2.0;
  return static_cast<Index>(std::ceil(reach)) + 2;
}

/// Renders L_u(x) = T(x - d (u - u_c)) for every angular position u.
///
/// The center view (u_c) is the texture itself; every view is cropped to the
/// region where all warps sample inside the texture. A per-pixel disparity map
/// is indexed in output (cropped) coordinates.
template <typename Scalar>
LightField<Scalar> synth_lightfield(const SynthSpec<Scalar>& spec) {
  const Index th = spec.texture.rows(), tw = spec.texture.cols();
  if (spec.angular_rows < 1 || spec.angular_cols < 1) throw Error("synth_lightfield: empty angular grid");
  const Scalar* constant = std::get_if<Scalar>(&spec.disparity);
  const Image<Scalar>* map = std::get_if<Image<Scalar>>(&spec.disparity);
  const Scalar max_d = constant ? std::abs(*constant) : map->cwiseAbs().maxCoeff();
  const Index extent = std::max(spec.angular_rows, spec.angular_cols);
  if (!(static_cast<double>(max_d) * static_cast<double>(extent) < static_cast<double>(std::min(th, tw)) / 4.0))
    throw Error("synth_lightfield: disparity too large for texture size");
  const Index margin = synth_margin(max_d, spec.angular_rows, spec.angular_cols);
  const Index h = th - 2 * margin, w = tw - 2 * margin;
  if (h < 1 || w < 1) throw Error("synth_lightfield: texture too small for disparity margin");
  if (map && (map->rows() != h || map->cols() != w))
    throw Error("synth_lightfield: disparity map must match output size " + std::to_string(h) + "x" +
                std::to_string(w));

  LightField<Scalar> lf(spec.angular_rows, spec.angular_cols, h, w);
  const Scalar cm = Scalar(spec.angular_rows - 1) / 2, cn = Scalar(spec.angular_cols - 1) / 2;
  for (Index m = 0; m < spec.angular_rows; ++m) {
    for (Index n = 0; n < spec.angular_cols; ++n) {
      auto v = lf.view({m, n});
      const Scalar dm = Scalar(m) - cm, dn = Scalar(n) - cn;
      for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x) {
          const Scalar d = constant ? *constant : (*map)(y, x);
          const Scalar s = sample_bicubic(spec.texture, Scalar(y + margin) - d * dm, Scalar(x + margin) - d * dn);
          v(y, x) = std::clamp(s, Scalar(0), Scalar(1));
        }
    }
  }
  return lf;
}

// Color conversion, full-range BT.601.

template <typename Scalar>
using ColorImage = std::array<Image<Scalar>, 3>;

template <typename Scalar>
void require_planes(const ColorImage<Scalar>& img) {
  if (img[1].rows() != img[0].rows() || img[1].cols() != img[0].cols() || img[2].rows() != img[0].rows() ||
      img[2].cols() != img[0].cols())
    throw Error("color image planes differ in size");
}

template <typename Scalar>
Image<Scalar> rgb_to_y(const ColorImage<Scalar>& rgb) {
  require_planes(rgb);
  return Scalar(0.299) * rgb[0] + Scalar(0.587) * rgb[1] + Scalar(0.114) * rgb[2];
}

/// Interleaved (h, w*channels) input; throws unless channels == 3.
template <typename Scalar>
ColorImage<Scalar> planes_from_interleaved(const Image<Scalar>& interleaved, int channels) {
  if (channels != 3) throw Error("expected 3 color channels, got " + std::to_string(channels));
  const Index h = interleaved.rows(), w = interleaved.cols() / 3;
  ColorImage<Scalar> out{Image<Scalar>(h, w), Image<Scalar>(h, w), Image<Scalar>(h, w)};
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(c)](y, x) = interleaved(y, 3 * x + c);
  return out;
}

/// RGB -> (Y, Cb, Cr) with chroma offset by 0.5.
template <typename Scalar>
ColorImage<Scalar> ycbcr_split(const ColorImage<Scalar>& rgb) {
  ColorImage<Scalar> out;
  out[0] = rgb_to_y(rgb);
  out[1] = ((rgb[2] - out[0]) / Scalar(1.772)).array() + Scalar(0.5);
  out[2] = ((rgb[0] - out[0]) / Scalar(1.402)).array() + Scalar(0.5);
  return out;
}

template <typename Scalar>
ColorImage<Scalar> ycbcr_merge(const ColorImage<Scalar>& ycc) {
  require_planes(ycc);
  ColorImage<Scalar> rgb;
  rgb[0] = ycc[0] + Scalar(1.402) * (ycc[2].array() - Scalar(0.5)).matrix();
  rgb[2] = ycc[0] + Scalar(1.772) * (ycc[1].array() - Scalar(0.5)).matrix();
  rgb[1] = (ycc[0] - Scalar(0.299) * rgb[0] - Scalar(0.114) * rgb[2]) / Scalar(0.587);
  return rgb;
}

/// (S_h, S_w, c, M*N) -> (M, N, c, S_h*S_w) with
/// F_a(m, n, k, y*S_w + x) = F_s(y, x, k, m*N + n).
template <typename Scalar>
Tensor4<Scalar> reshape_spatial_to_angular(const Tensor4<Scalar>& fs, Index m_rows, Index n_cols) {
  const Index sh = fs.dim(0), sw = fs.dim(1), c = fs.dim(2);
  if (m_rows < 1 || n_cols < 1 || fs.dim(3) != m_rows * n_cols)
    throw Error("reshape_spatial_to_angular: view axis " + std::to_string(fs.dim(3)) + " != " +
                std::to_string(m_rows) + "*" + std::to_string(n_cols));
  Tensor4<Scalar> fa(m_rows, n_cols, c, sh * sw);
  for (Index y = 0; y < sh; ++y)
    for (Index x = 0; x < sw; ++x)
      for (Index k = 0; k < c; ++k)
        for (Index m = 0; m < m_rows; ++m)
          for (Index n = 0; n < n_cols; ++n) fa(m, n, k, y * sw + x) = fs(y, x, k, m * n_cols + n);
  return fa;
}

/// Inverse of reshape_spatial_to_angular.
template <typename Scalar>
Tensor4<Scalar> reshape_angular_to_spatial(const Tensor4<Scalar>& fa, Index s_rows, Index s_cols) {
  const Index m_rows = fa.dim(0), n_cols = fa.dim(1), c = fa.dim(2);
  if (s_rows < 1 || s_cols < 1 || fa.dim(3) != s_rows * s_cols)
    throw Error("reshape_angular_to_spatial: spatial axis " + std::to_string(fa.dim(3)) + " != " +
                std::to_string(s_rows) + "*" + std::to_string(s_cols));
  Tensor4<Scalar> fs(s_rows, s_cols, c, m_rows * n_cols);
  for (Index y = 0; y < s_rows; ++y)
    for (Index x = 0; x < s_cols; ++x)
      for (Index k = 0; k < c; ++k)
        for (Index m = 0; m < m_rows; ++m)
          for (Index n = 0; n < n_cols; ++n) fs(y, x, k, m * n_cols + n) = fa(m, n, k, y * s_cols + x);
  return fs;
}

}  // namespace lfsr

#endif  // LFSR_LIGHT_FIELD_HPP
