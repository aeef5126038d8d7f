#ifndef LFSR_OPS_HPP
#define LFSR_OPS_HPP

#include "lfsr/autodiff.hpp"

#include <vector>

namespace lfsr {

template <typename Scalar>
Var<Scalar> relu(Tape<Scalar>& tape, const Var<Scalar>& x) {
  Tensor4<Scalar> y = x->value;
  y.array() = y.array().max(Scalar(0));
  return tape.record(std::move(y), tape.wants_grad({&x}), [x](Node<Scalar>& out) {
    if (!x->requires_grad) return;
    x->grad_buffer().array() += (out.value.array() > Scalar(0)).select(out.grad.array(), Scalar(0));
  });
}

template <typename Scalar>
Var<Scalar> add(Tape<Scalar>& tape, const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor4<Scalar> y = a->value;
  y.array() += b->value.array();
  return tape.record(std::move(y), tape.wants_grad({&a, &b}), [a, b](Node<Scalar>& out) {
    if (a->requires_grad) a->grad_buffer().array() += out.grad.array();
    if (b->requires_grad) b->grad_buffer().array() += out.grad.array();
  });
}

/// x + c for a tensor c that carries no gradient.
template <typename Scalar>
Var<Scalar> add_constant(Tape<Scalar>& tape, const Var<Scalar>& x, const Tensor4<Scalar>& c) {
  require_same_shape(x->value, c, "add_constant");
  Tensor4<Scalar> y = x->value;
  y.array() += c.array();
  return tape.record(std::move(y), tape.wants_grad({&x}), [x](Node<Scalar>& out) {
    if (x->requires_grad) x->grad_buffer().array() += out.grad.array();
  });
}

template <typename Scalar>
Var<Scalar> scale(Tape<Scalar>& tape, const Var<Scalar>& x, Scalar s) {
  Tensor4<Scalar> y = x->value;
  y.array() *= s;
  return tape.record(std::move(y), tape.wants_grad({&x}), [x, s](Node<Scalar>& out) {
    if (x->requires_grad) x->grad_buffer().array() += s * out.grad.array();
  });
}

template <typename Scalar>
Var<Scalar> reshape(Tape<Scalar>& tape, const Var<Scalar>& x, const Shape4& shape) {
  return tape.record(x->value.reshaped(shape), tape.wants_grad({&x}), [x](Node<Scalar>& out) {
    if (x->requires_grad) x->grad_buffer().array() += out.grad.array();
  });
}

/// Rows of the batch axis in the given order.
template <typename Scalar>
Var<Scalar> gather_batch(Tape<Scalar>& tape, const Var<Scalar>& x, const std::vector<Index>& rows) {
  const auto& s = x->value.shape();
  const Index item = s[1] * s[2] * s[3];
  Tensor4<Scalar> y(static_cast<Index>(rows.size()), s[1], s[2], s[3]);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= s[0]) throw std::out_of_range("gather_batch: row out of range");
    y.array().segment(static_cast<Index>(i) * item, item) = x->value.array().segment(rows[i] * item, item);
  }
  return tape.record(std::move(y), tape.wants_grad({&x}), [x, rows, item](Node<Scalar>& out) {
    if (!x->requires_grad) return;
    auto& g = x->grad_buffer();
    for (std::size_t i = 0; i < rows.size(); ++i)
      g.array().segment(rows[i] * item, item) += out.grad.array().segment(static_cast<Index>(i) * item, item);
  });
}

/// Channel concatenation. A batch-1 `a` is broadcast over the batch of `b`.
template <typename Scalar>
Var<Scalar> concat_channels(Tape<Scalar>& tape, const Var<Scalar>& a, const Var<Scalar>& b) {
  const auto& sa = a->value.shape();
  const auto& sb = b->value.shape();
  if (sa[2] != sb[2] || sa[3] != sb[3] || (sa[0] != sb[0] && sa[0] != 1))
    throw Error("concat_channels: incompatible shapes " + to_string(sa) + " and " + to_string(sb));
  const Index batch = sb[0], plane = sa[2] * sa[3];
  const Index na = sa[1] * plane, nb = sb[1] * plane;
  Tensor4<Scalar> y(batch, sa[1] + sb[1], sa[2], sa[3]);
  for (Index i = 0; i < batch; ++i) {
    const Index ia = sa[0] == 1 ? 0 : i;
    y.array().segment(i * (na + nb), na) = a->value.array().segment(ia * na, na);
    y.array().segment(i * (na + nb) + na, nb) = b->value.array().segment(i * nb, nb);
  }
  return tape.record(std::move(y), tape.wants_grad({&a, &b}), [a, b, batch, na, nb](Node<Scalar>& out) {
    const bool bcast = a->value.dim(0) == 1;
    for (Index i = 0; i < batch; ++i) {
      if (a->requires_grad)
        a->grad_buffer().array().segment((bcast ? 0 : i) * na, na) += out.grad.array().segment(i * (na + nb), na);
      if (b->requires_grad)
        b->grad_buffer().array().segment(i * nb, nb) += out.grad.array().segment(i * (na + nb) + na, nb);
    }
  });
}

namespace detail {

/// y(j, i, :, :) = x(i, j, :, :)
template <typename Scalar>
Tensor4<Scalar> swap_leading(const Tensor4<Scalar>& x) {
  const auto& s = x.shape();
  const Index plane = s[2] * s[3];
  Tensor4<Scalar> y(s[1], s[0], s[2], s[3]);
  for (Index i = 0; i < s[0]; ++i)
    for (Index j = 0; j < s[1]; ++j)
      y.array().segment((j * s[0] + i) * plane, plane) = x.array().segment((i * s[1] + j) * plane, plane);
  return y;
}

/// (M*N, c, H, W) <-> (H*W, c, M, N), both directions.
template <typename Scalar>
Tensor4<Scalar> views_to_angular(const Tensor4<Scalar>& x, Index m_rows, Index n_cols) {
  const Index v = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor4<Scalar> y(h * w, c, m_rows, n_cols);
  for (Index a = 0; a < v; ++a)
    for (Index k = 0; k < c; ++k) {
      const Scalar* src = x.data() + x.offset(a, k, 0, 0);
      for (Index p = 0; p < h * w; ++p) y.data()[((p * c + k) * v) + a] = src[p];
    }
  return y;
}

template <typename Scalar>
Tensor4<Scalar> angular_to_views(const Tensor4<Scalar>& y, Index h, Index w) {
  const Index c = y.dim(1), m_rows = y.dim(2), n_cols = y.dim(3), v = m_rows * n_cols;
  Tensor4<Scalar> x(v, c, h, w);
  for (Index a = 0; a < v; ++a)
    for (Index k = 0; k < c; ++k) {
      Scalar* dst = x.data() + x.offset(a, k, 0, 0);
      for (Index p = 0; p < h * w; ++p) dst[p] = y.data()[((p * c + k) * v) + a];
    }
  return x;
}

}  // namespace detail

/// Exchanges the batch and channel axes.
template <typename Scalar>
Var<Scalar> swap_batch_channels(Tape<Scalar>& tape, const Var<Scalar>& x) {
  return tape.record(detail::swap_leading(x->value), tape.wants_grad({&x}), [x](Node<Scalar>& out) {
    if (x->requires_grad) x->grad_buffer().array() += detail::swap_leading(out.grad).array();
  });
}

/// View stack (M*N, c, H, W) to angular patches (H*W, c, M, N).
template <typename Scalar>
Var<Scalar> spatial_to_angular(Tape<Scalar>& tape, const Var<Scalar>& x, Index m_rows, Index n_cols) {
  if (x->value.dim(0) != m_rows * n_cols)
    throw Error("spatial_to_angular: " + std::to_string(x->value.dim(0)) + " views, expected " +
                std::to_string(m_rows * n_cols));
  const Index h = x->value.dim(2), w = x->value.dim(3);
  return tape.record(detail::views_to_angular(x->value, m_rows, n_cols), tape.wants_grad({&x}),
                     [x, h, w](Node<Scalar>& out) {
                       if (x->requires_grad) x->grad_buffer().array() += detail::angular_to_views(out.grad, h, w).array();
                     });
}

/// Angular patches (H*W, c, M, N) back to the view stack (M*N, c, H, W).
template <typename Scalar>
Var<Scalar> angular_to_spatial(Tape<Scalar>& tape, const Var<Scalar>& x, Index h, Index w) {
  if (x->value.dim(0) != h * w) throw Error("angular_to_spatial: location count mismatch");
  const Index m_rows = x->value.dim(2), n_cols = x->value.dim(3);
  return tape.record(detail::angular_to_views(x->value, h, w), tape.wants_grad({&x}),
                     [x, m_rows, n_cols](Node<Scalar>& out) {
                       if (x->requires_grad)
                         x->grad_buffer().array() += detail::views_to_angular(out.grad, m_rows, n_cols).array();
                     });
}

namespace detail {

template <typename Scalar>
Tensor4<Scalar> shuffle_forward(const Tensor4<Scalar>& x, Index alpha) {
  const Index b = x.dim(0), c = x.dim(1) / (alpha * alpha), h = x.dim(2), w = x.dim(3);
  Tensor4<Scalar> y(b, c, alpha * h, alpha * w);
  for (Index i = 0; i < b; ++i)
    for (Index k = 0; k < c; ++k)
      for (Index p = 0; p < alpha; ++p)
        for (Index q = 0; q < alpha; ++q) {
          const auto src = x.plane(i, k * alpha * alpha + p * alpha + q);
          for (Index yy = 0; yy < h; ++yy)
            for (Index xx = 0; xx < w; ++xx) y(i, k, alpha * yy + p, alpha * xx + q) = src(yy, xx);
        }
  return y;
}

template <typename Scalar>
Tensor4<Scalar> shuffle_inverse(const Tensor4<Scalar>& y, Index alpha) {
  const Index b = y.dim(0), c = y.dim(1), h = y.dim(2) / alpha, w = y.dim(3) / alpha;
  Tensor4<Scalar> x(b, c * alpha * alpha, h, w);
  for (Index i = 0; i < b; ++i)
    for (Index k = 0; k < c; ++k)
      for (Index p = 0; p < alpha; ++p)
        for (Index q = 0; q < alpha; ++q) {
          auto dst = x.plane(i, k * alpha * alpha + p * alpha + q);
          for (Index yy = 0; yy < h; ++yy)
            for (Index xx = 0; xx < w; ++xx) dst(yy, xx) = y(i, k, alpha * yy + p, alpha * xx + q);
        }
  return x;
}

}  // namespace detail

/// Sub-pixel rearrangement (B, c*a^2, h, w) -> (B, c, a*h, a*w) with
/// out(k, a*y + p, a*x + q) = in(k*a^2 + p*a + q, y, x).
template <typename Scalar>
Tensor4<Scalar> pixel_shuffle(const Tensor4<Scalar>& x, Index alpha) {
  if (alpha < 1 || x.dim(1) % (alpha * alpha) != 0)
    throw Error("pixel_shuffle: channels " + std::to_string(x.dim(1)) + " not divisible by " +
                std::to_string(alpha * alpha));
  return detail::shuffle_forward(x, alpha);
}

template <typename Scalar>
Tensor4<Scalar> pixel_unshuffle(const Tensor4<Scalar>& y, Index alpha) {
  if (alpha < 1 || y.dim(2) % alpha != 0 || y.dim(3) % alpha != 0)
    throw Error("pixel_unshuffle: spatial size not divisible by factor");
  return detail::shuffle_inverse(y, alpha);
}

template <typename Scalar>
Var<Scalar> pixel_shuffle(Tape<Scalar>& tape, const Var<Scalar>& x, Index alpha) {
  return tape.record(pixel_shuffle(x->value, alpha), tape.wants_grad({&x}), [x, alpha](Node<Scalar>& out) {
    if (x->requires_grad) x->grad_buffer().array() += detail::shuffle_inverse(out.grad, alpha).array();
  });
}

}  // namespace lfsr

#endif  // LFSR_OPS_HPP
