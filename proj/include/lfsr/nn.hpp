#ifndef LFSR_NN_HPP
#define LFSR_NN_HPP

#include "lfsr/autodiff.hpp"
#include "lfsr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace lfsr {

/// Owns a model's parameters; addresses stay stable for the store's lifetime.
template <typename Scalar>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  ParamTensor<Scalar>* add(const std::string& name, const Shape4& shape) {
    if (index_.count(name)) throw Error("duplicate parameter name: " + name);
    params_.push_back(std::make_unique<ParamTensor<Scalar>>(name, shape));
    index_[name] = params_.size() - 1;
    return params_.back().get();
  }

  std::size_t size() const { return params_.size(); }
  ParamTensor<Scalar>& operator[](std::size_t i) { return *params_[i]; }
  const ParamTensor<Scalar>& operator[](std::size_t i) const { return *params_[i]; }

  ParamTensor<Scalar>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }
  const ParamTensor<Scalar>* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
  }

  Index count() const {
    Index total = 0;
    for (const auto& p : params_) total += p->value.size();
    return total;
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& p : params_) fn(*p);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& p : params_) fn(static_cast<const ParamTensor<Scalar>&>(*p));
  }

 private:
  std::vector<std::unique_ptr<ParamTensor<Scalar>>> params_;
  std::map<std::string, std::size_t> index_;
};

/// 3x3 convolution with zero padding 1 (spatial size preserved).
struct ConvSpec {
  Index in_channels = 1;
  Index out_channels = 64;
  bool relu = false;
};

template <typename Scalar>
struct Conv {
  ConvSpec spec;
  ParamTensor<Scalar>* weight = nullptr;  // (out, in, 3, 3)
  ParamTensor<Scalar>* bias = nullptr;    // (out, 1, 1, 1)
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights scaled by `gain`; zero bias.
template <typename Scalar>
Conv<Scalar> make_conv(ParamStore<Scalar>& store, const std::string& name, ConvSpec spec, std::mt19937_64& rng,
                       double gain = 1.0) {
  Conv<Scalar> c{spec, store.add(name + ".weight", {spec.out_channels, spec.in_channels, 3, 3}),
                 store.add(name + ".bias", {spec.out_channels, 1, 1, 1})};
  const double bound = gain / std::sqrt(static_cast<double>(spec.in_channels * 9));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index i = 0; i < c.weight->value.size(); ++i) c.weight->value.data()[i] = static_cast<Scalar>(dist(rng));
  return c;
}

namespace detail {

/// Fills rows (ci*9 + ky*3 + kx) of a (cin*9) x (count*h*w) row-major matrix.
template <typename Scalar>
void im2col(const Scalar* x, Index count, Index cin, Index h, Index w, Scalar* col) {
  const Index plane = h * w, cols = count * plane;
  for (Index ci = 0; ci < cin; ++ci)
    for (Index ky = 0; ky < 3; ++ky)
      for (Index kx = 0; kx < 3; ++kx) {
        Scalar* row = col + (ci * 9 + ky * 3 + kx) * cols;
        const Index dy = ky - 1, dx = kx - 1;
        const Index x_lo = std::max<Index>(0, -dx), x_hi = std::min(w, w - dx);
        for (Index b = 0; b < count; ++b) {
          const Scalar* src = x + (b * cin + ci) * plane;
          Scalar* dst = row + b * plane;
          for (Index y = 0; y < h; ++y) {
            Scalar* d = dst + y * w;
            const Index sy = y + dy;
            if (sy < 0 || sy >= h) {
              std::fill(d, d + w, Scalar(0));
              continue;
            }
            const Scalar* s = src + sy * w + dx;
            for (Index xx = 0; xx < x_lo; ++xx) d[xx] = Scalar(0);
            std::copy(s + x_lo, s + x_hi, d + x_lo);
            for (Index xx = x_hi; xx < w; ++xx) d[xx] = Scalar(0);
          }
        }
      }
}

/// Adjoint of im2col, accumulating into dx.
template <typename Scalar>
void col2im(const Scalar* col, Index count, Index cin, Index h, Index w, Scalar* dx) {
  const Index plane = h * w, cols = count * plane;
  for (Index ci = 0; ci < cin; ++ci)
    for (Index ky = 0; ky < 3; ++ky)
      for (Index kx = 0; kx < 3; ++kx) {
        const Scalar* row = col + (ci * 9 + ky * 3 + kx) * cols;
        const Index dy = ky - 1, dxo = kx - 1;
        const Index x_lo = std::max<Index>(0, -dxo), x_hi = std::min(w, w - dxo);
        const Index y_lo = std::max<Index>(0, -dy), y_hi = std::min(h, h - dy);
        for (Index b = 0; b < count; ++b) {
          Scalar* dst = dx + (b * cin + ci) * plane;
          const Scalar* src = row + b * plane;
          for (Index y = y_lo; y < y_hi; ++y) {
            const Scalar* s = src + y * w;
            Scalar* d = dst + (y + dy) * w + dxo;
            for (Index xx = x_lo; xx < x_hi; ++xx) d[xx] += s[xx];
          }
        }
      }
}

/// Items per GEMM: whole items, roughly 2048 columns per product.
inline Index conv_chunk(Index batch, Index plane) {
  return std::clamp<Index>(2048 / std::max<Index>(plane, 1), 1, std::max<Index>(batch, 1));
}

template <typename Scalar>
using RowMajorMap = Eigen::Map<Image<Scalar>>;
template <typename Scalar>
using ConstRowMajorMap = Eigen::Map<const Image<Scalar>>;

/// Per-thread grow-only buffers, so the hot loop does not touch fresh pages.
template <typename Scalar, int Slot>
RowMajorMap<Scalar> scratch(Index rows, Index cols) {
  thread_local std::vector<Scalar> buf;
  if (static_cast<Index>(buf.size()) < rows * cols) buf.resize(rows * cols);
  return RowMajorMap<Scalar>(buf.data(), rows, cols);
}

}  // namespace detail

/// Plain-tensor forward of a 3x3 convolution (cross-correlation).
template <typename Scalar>
Tensor4<Scalar> conv2d_forward(const Tensor4<Scalar>& x, const Conv<Scalar>& conv) {
  const Index b = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const Index cout = conv.spec.out_channels, plane = h * w;
  if (cin != conv.spec.in_channels)
    throw Error("conv2d: input has " + std::to_string(cin) + " channels, layer " + conv.weight->name +
                " expects " + std::to_string(conv.spec.in_channels));
  Tensor4<Scalar> y(b, cout, h, w);
  detail::ConstRowMajorMap<Scalar> wmat(conv.weight->value.data(), cout, cin * 9);
  const auto bias = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(conv.bias->value.data(), cout);
  const Index chunk = detail::conv_chunk(b, plane);
  for (Index b0 = 0; b0 < b; b0 += chunk) {
    const Index count = std::min(chunk, b - b0);
    auto col = detail::scratch<Scalar, 0>(cin * 9, count * plane);
    detail::im2col(x.data() + x.offset(b0, 0, 0, 0), count, cin, h, w, col.data());
    if (count == 1) {
      detail::RowMajorMap<Scalar> out(y.data() + y.offset(b0, 0, 0, 0), cout, plane);
      out.noalias() = wmat * col;
      out.colwise() += bias;
      continue;
    }
    auto out = detail::scratch<Scalar, 1>(cout, count * plane);
    out.noalias() = wmat * col;
    for (Index i = 0; i < count; ++i)
      detail::RowMajorMap<Scalar>(y.data() + y.offset(b0 + i, 0, 0, 0), cout, plane) =
          out.middleCols(i * plane, plane).colwise() + bias;
  }
  if (conv.spec.relu) y.array() = y.array().max(Scalar(0));
  return y;
}

/// Differentiable 3x3 convolution with optional fused ReLU.
template <typename Scalar>
Var<Scalar> conv2d(Tape<Scalar>& tape, const Var<Scalar>& x, const Conv<Scalar>& conv) {
  tape.note_param_use(conv.weight);
  tape.note_param_use(conv.bias);
  Tensor4<Scalar> y = conv2d_forward(x->value, conv);
  const bool trainable = conv.weight->trainable || conv.bias->trainable;
  return tape.record(std::move(y), tape.wants_grad({&x}, trainable), [x, conv](Node<Scalar>& out) {
    const auto& xv = x->value;
    const Index b = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    const Index cout = conv.spec.out_channels, plane = h * w;
    // out.grad is not read again once this node has run
    Tensor4<Scalar>& gy = out.grad;
    if (conv.spec.relu) gy.array() = (out.value.array() > Scalar(0)).select(gy.array(), Scalar(0));
    detail::ConstRowMajorMap<Scalar> wmat(conv.weight->value.data(), cout, cin * 9);
    detail::RowMajorMap<Scalar> gw(conv.weight->grad.data(), cout, cin * 9);
    auto gb = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(conv.bias->grad.data(), cout);
    const Index chunk = detail::conv_chunk(b, plane);
    for (Index b0 = 0; b0 < b; b0 += chunk) {
      const Index count = std::min(chunk, b - b0);
      const Scalar* dy_data = gy.data() + gy.offset(b0, 0, 0, 0);
      if (count > 1) {
        auto packed = detail::scratch<Scalar, 1>(cout, count * plane);
        for (Index i = 0; i < count; ++i)
          packed.middleCols(i * plane, plane) =
              detail::ConstRowMajorMap<Scalar>(gy.data() + gy.offset(b0 + i, 0, 0, 0), cout, plane);
        dy_data = packed.data();
      }
      detail::ConstRowMajorMap<Scalar> dy(dy_data, cout, count * plane);
      if (conv.weight->trainable) {
        auto col = detail::scratch<Scalar, 0>(cin * 9, count * plane);
        detail::im2col(xv.data() + xv.offset(b0, 0, 0, 0), count, cin, h, w, col.data());
        gw.noalias() += dy * col.transpose();
      }
      if (conv.bias->trainable) gb += dy.rowwise().sum();
      if (x->requires_grad) {
        auto dcol = detail::scratch<Scalar, 2>(cin * 9, count * plane);
        dcol.noalias() = wmat.transpose() * dy;
        detail::col2im(dcol.data(), count, cin, h, w, x->grad_buffer().data() + xv.offset(b0, 0, 0, 0));
      }
    }
  });
}

/// conv -> ReLU -> conv plus identity skip.
template <typename Scalar>
struct ResBlock {
  Conv<Scalar> first;
  Conv<Scalar> second;
};

template <typename Scalar>
ResBlock<Scalar> make_res_block(ParamStore<Scalar>& store, const std::string& name, Index channels,
                                std::mt19937_64& rng) {
  return {make_conv(store, name + ".conv1", {channels, channels, true}, rng),
          make_conv(store, name + ".conv2", {channels, channels, false}, rng)};
}

template <typename Scalar>
Var<Scalar> residual_block(Tape<Scalar>& tape, const Var<Scalar>& x, const ResBlock<Scalar>& block) {
  if (x->value.dim(1) != block.first.spec.in_channels)
    throw Error("residual_block: input channels " + std::to_string(x->value.dim(1)) + " != block width " +
                std::to_string(block.first.spec.in_channels));
  return add(tape, x, conv2d(tape, conv2d(tape, x, block.first), block.second));
}

template <typename Scalar>
Var<Scalar> residual_chain(Tape<Scalar>& tape, Var<Scalar> x, const std::vector<ResBlock<Scalar>>& blocks) {
  for (const auto& b : blocks) x = residual_block(tape, x, b);
  return x;
}

template <typename Scalar>
std::vector<ResBlock<Scalar>> make_res_chain(ParamStore<Scalar>& store, const std::string& name, int count,
                                             Index channels, std::mt19937_64& rng) {
  std::vector<ResBlock<Scalar>> blocks;
  for (int i = 0; i < count; ++i) blocks.push_back(make_res_block(store, name + "." + std::to_string(i), channels, rng));
  return blocks;
}

/// One spatial/angular convolution pair; parameters shared over views and
/// over spatial locations respectively.
template <typename Scalar>
struct AltConvLayer {
  Conv<Scalar> spatial;
  Conv<Scalar> angular;
};

template <typename Scalar>
AltConvLayer<Scalar> make_altconv(ParamStore<Scalar>& store, const std::string& name, Index channels,
                                  std::mt19937_64& rng) {
  return {make_conv(store, name + ".spatial", {channels, channels, true}, rng),
          make_conv(store, name + ".angular", {channels, channels, true}, rng)};
}

/// Spatial conv on the view stack (M*N, c, H, W), reshape to angular patches
/// (H*W, c, M, N), angular conv, reshape back.
template <typename Scalar>
Var<Scalar> altconv_layer(Tape<Scalar>& tape, const Var<Scalar>& views, Index m_rows, Index n_cols,
                          const AltConvLayer<Scalar>& layer) {
  if (views->value.dim(0) != m_rows * n_cols)
    throw Error("altconv_layer: stack holds " + std::to_string(views->value.dim(0)) + " views, expected " +
                std::to_string(m_rows * n_cols));
  const Index h = views->value.dim(2), w = views->value.dim(3);
  auto s = conv2d(tape, views, layer.spatial);
  auto a = conv2d(tape, spatial_to_angular(tape, s, m_rows, n_cols), layer.angular);
  return angular_to_spatial(tape, a, h, w);
}

}  // namespace lfsr

#endif  // LFSR_NN_HPP
