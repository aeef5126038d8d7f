#ifndef LFSR_LOSSES_HPP
#define LFSR_LOSSES_HPP

#include "lfsr/autodiff.hpp"
#include "lfsr/light_field.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string>

namespace lfsr {

/// Total loss with a named breakdown; value is the weighted sum of components.
struct LossValue {
  double value = 0.0;
  std::map<std::string, double> components;
};

template <typename Scalar>
LossValue loss_view(const Image<Scalar>& pred, const Image<Scalar>& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) throw Error("loss_view: shape mismatch");
  const double v = (pred - gt).template cast<double>().cwiseAbs().mean();
  return {v, {{"l_v", v}}};
}

template <typename Scalar>
LossValue loss_reg(const LightField<Scalar>& pred, const LightField<Scalar>& gt) {
  require_same_shape(pred, gt, "loss_reg");
  const double v = (pred.data().array() - gt.data().array()).template cast<double>().abs().mean();
  return {v, {{"l_r", v}}};
}

namespace detail {

/// Forward-difference axes of the EPI gradient loss, in (m, n, y, x) layout:
/// horizontal EPIs contribute x and u (= n), vertical EPIs y and v (= m).
inline constexpr std::array<int, 4> kEpiAxes = {3, 1, 2, 0};
inline constexpr std::array<const char*, 4> kEpiTermNames = {"grad_x", "grad_u", "grad_y", "grad_v"};

inline void require_epi_shape(const Shape4& s) {
  if (s[0] < 2 || s[1] < 2 || s[2] < 2 || s[3] < 2)
    throw Error("loss_epi_gradient: need M, N >= 2 and spatial size >= 2, got " + to_string(s));
}

/// Visits (i, i + step) pairs of forward differences along `axis`.
template <typename Fn>
void for_each_difference(const Shape4& s, int axis, Fn&& fn) {
  std::array<Index, 4> stride{s[1] * s[2] * s[3], s[2] * s[3], s[3], 1};
  const Index step = stride[static_cast<std::size_t>(axis)];
  for (Index a = 0; a < s[0]; ++a)
    for (Index b = 0; b < s[1]; ++b)
      for (Index c = 0; c < s[2]; ++c)
        for (Index d = 0; d < s[3]; ++d) {
          const std::array<Index, 4> idx{a, b, c, d};
          if (idx[static_cast<std::size_t>(axis)] + 1 >= s[static_cast<std::size_t>(axis)]) continue;
          const Index i = a * stride[0] + b * stride[1] + c * stride[2] + d;
          fn(i, i + step);
        }
}

inline Index difference_count(const Shape4& s, int axis) {
  Index n = 1;
  for (int a = 0; a < 4; ++a) n *= (a == axis) ? s[static_cast<std::size_t>(a)] - 1 : s[static_cast<std::size_t>(a)];
  return n;
}

}  // namespace detail

/// l_e: sum over the four EPI gradient directions of the mean absolute
/// difference between predicted and ground-truth forward differences.
template <typename Scalar>
LossValue loss_epi_gradient(const LightField<Scalar>& pred, const LightField<Scalar>& gt) {
  require_same_shape(pred, gt, "loss_epi_gradient");
  const auto& s = pred.data().shape();
  detail::require_epi_shape(s);
  const Scalar* p = pred.data().data();
  const Scalar* g = gt.data().data();
  LossValue out;
  for (std::size_t t = 0; t < 4; ++t) {
    const int axis = detail::kEpiAxes[t];
    double acc = 0.0;
    detail::for_each_difference(s, axis, [&](Index i, Index j) {
      acc += std::abs(static_cast<double>((p[j] - p[i]) - (g[j] - g[i])));
    });
    const double term = acc / static_cast<double>(detail::difference_count(s, axis));
    out.components[detail::kEpiTermNames[t]] = term;
    out.value += term;
  }
  return out;
}

// Differentiable forms.

/// Mean absolute error against a constant target.
template <typename Scalar>
Var<Scalar> l1_loss(Tape<Scalar>& tape, const Var<Scalar>& pred, const Tensor4<Scalar>& target) {
  require_same_shape(pred->value, target, "l1_loss");
  const Index count = target.size();
  Tensor4<Scalar> v(1, 1, 1, 1);
  v(0, 0, 0, 0) = (pred->value.array() - target.array()).abs().sum() / static_cast<Scalar>(count);
  return tape.record(std::move(v), tape.wants_grad({&pred}), [pred, target, count](Node<Scalar>& out) {
    if (!pred->requires_grad) return;
    const Scalar g = out.grad(0, 0, 0, 0) / static_cast<Scalar>(count);
    pred->grad_buffer().array() += g * (pred->value.array() - target.array()).sign();
  });
}

/// l_e on a prediction laid out as (M*N, 1, H, W) or (M, N, H, W); `target` is (M, N, H, W).
template <typename Scalar>
Var<Scalar> epi_gradient_loss(Tape<Scalar>& tape, const Var<Scalar>& pred, const Tensor4<Scalar>& target) {
  const Shape4 s = target.shape();
  if (pred->value.size() != target.size()) throw Error("epi_gradient_loss: size mismatch");
  detail::require_epi_shape(s);
  Tensor4<Scalar> err = pred->value.reshaped(s);
  err.array() -= target.array();
  Tensor4<Scalar> v(1, 1, 1, 1);
  for (int axis : detail::kEpiAxes) {
    Scalar acc = 0;
    detail::for_each_difference(s, axis, [&](Index i, Index j) { acc += std::abs(err.data()[j] - err.data()[i]); });
    v(0, 0, 0, 0) += acc / static_cast<Scalar>(detail::difference_count(s, axis));
  }
  return tape.record(std::move(v), tape.wants_grad({&pred}), [pred, err, s](Node<Scalar>& out) {
    if (!pred->requires_grad) return;
    Scalar* g = pred->grad_buffer().data();
    const Scalar* e = err.data();
    for (int axis : detail::kEpiAxes) {
      const Scalar w = out.grad(0, 0, 0, 0) / static_cast<Scalar>(detail::difference_count(s, axis));
      detail::for_each_difference(s, axis, [&](Index i, Index j) {
        const Scalar d = e[j] - e[i];
        const Scalar sg = d > 0 ? w : (d < 0 ? -w : Scalar(0));
        g[j] += sg;
        g[i] -= sg;
      });
    }
  });
}

}  // namespace lfsr

#endif  // LFSR_LOSSES_HPP
