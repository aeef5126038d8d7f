#ifndef LFSR_ATO_HPP
#define LFSR_ATO_HPP

#include "lfsr/light_field.hpp"
#include "lfsr/nn.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lfsr {

/// All-to-One network hyperparameters.
struct AtoConfig {
  int n1 = 5;  // f1 residual blocks
  int n2 = 2;  // f2 residual blocks
  int n3 = 2;  // f3 channel-wise view fusion residual blocks
  int n4 = 3;  // f3 channel fusion residual blocks
  Index channels = 64;
  int alpha = 2;
  Index angular_rows = 7;
  Index angular_cols = 7;

  Index views() const { return angular_rows * angular_cols; }

  void validate() const {
    if (n1 < 1 || n2 < 1 || n3 < 1 || n4 < 1) throw Error("AtoConfig: residual block counts must be >= 1");
    if (channels < 1) throw Error("AtoConfig: channels must be >= 1");
    if (alpha != 2 && alpha != 4) throw Error("AtoConfig: alpha must be 2 or 4");
    if (angular_rows < 1 || angular_cols < 1 || views() < 2)
      throw Error("AtoConfig: need at least two views");
  }
};

/// Parameters of f1..f4. A single set of f1 weights serves every view and a
/// single set of f2 weights serves every (reference, auxiliary) pair.
template <typename Scalar>
class AtoModel {
 public:
  explicit AtoModel(const AtoConfig& cfg, std::uint64_t seed = 1) : config_(cfg) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const Index c = cfg.channels;
    f1_head = make_conv(params_, "f1.head", {1, c, true}, rng);
    f1_blocks = make_res_chain(params_, "f1.res", cfg.n1, c, rng);
    f2_head = make_conv(params_, "f2.head", {2 * c, c, true}, rng);
    f2_blocks = make_res_chain(params_, "f2.res", cfg.n2, c, rng);
    f3_view_head = make_conv(params_, "f3.view.head", {cfg.views() - 1, c, true}, rng);
    f3_view_blocks = make_res_chain(params_, "f3.view.res", cfg.n3, c, rng);
    f3_view_out = make_conv(params_, "f3.view.out", {c, 1, false}, rng);
    f3_channel_head = make_conv(params_, "f3.channel.head", {c, c, true}, rng);
    f3_channel_blocks = make_res_chain(params_, "f3.channel.res", cfg.n4, c, rng);
    f4_expand = make_conv(params_, "f4.expand", {c, static_cast<Index>(cfg.alpha * cfg.alpha), false}, rng);
    f4_recon = make_conv(params_, "f4.recon", {1, 1, false}, rng);
  }
  AtoModel(AtoModel&&) noexcept = default;
  AtoModel& operator=(AtoModel&&) noexcept = default;

  const AtoConfig& config() const { return config_; }
  ParamStore<Scalar>& params() { return params_; }
  const ParamStore<Scalar>& params() const { return params_; }

  Conv<Scalar> f1_head;
  std::vector<ResBlock<Scalar>> f1_blocks;
  Conv<Scalar> f2_head;
  std::vector<ResBlock<Scalar>> f2_blocks;
  Conv<Scalar> f3_view_head;
  std::vector<ResBlock<Scalar>> f3_view_blocks;
  Conv<Scalar> f3_view_out;
  Conv<Scalar> f3_channel_head;
  std::vector<ResBlock<Scalar>> f3_channel_blocks;
  Conv<Scalar> f4_expand;
  Conv<Scalar> f4_recon;

 private:
  AtoConfig config_;
  ParamStore<Scalar> params_;
};

/// Per-view features: (B, 1, h, w) -> (B, c, h, w).
template <typename Scalar>
Var<Scalar> f1_extract(Tape<Scalar>& tape, const Var<Scalar>& views, const AtoModel<Scalar>& model) {
  if (views->value.dim(1) != 1)
    throw Error("f1_extract: expected single-channel views, got " + std::to_string(views->value.dim(1)));
  return residual_chain(tape, conv2d(tape, views, model.f1_head), model.f1_blocks);
}

/// Embeds each auxiliary feature map (B, c, h, w) into the reference
/// features (1, c, h, w); output is in the reference frame.
template <typename Scalar>
Var<Scalar> f2_pair(Tape<Scalar>& tape, const Var<Scalar>& ref, const Var<Scalar>& aux, const AtoModel<Scalar>& model) {
  const auto& r = ref->value.shape();
  const auto& a = aux->value.shape();
  if (r[1] != a[1] || r[2] != a[2] || r[3] != a[3] || (r[0] != 1 && r[0] != a[0]))
    throw Error("f2_pair: shape mismatch " + to_string(r) + " vs " + to_string(a));
  return residual_chain(tape, conv2d(tape, concat_channels(tape, ref, aux), model.f2_head), model.f2_blocks);
}

/// Fuses the raster-ordered auxiliary stack (M*N-1, c, h, w) into (1, c, h, w).
///
/// Channel-wise view fusion treats each channel's M*N-1 maps as one input
/// (weights shared over channels) and reduces them to a single map; the c
/// resulting maps then go through channel fusion.
template <typename Scalar>
Var<Scalar> f3_fuse(Tape<Scalar>& tape, const Var<Scalar>& stack, const AtoModel<Scalar>& model) {
  const auto& cfg = model.config();
  const auto& s = stack->value.shape();
  if (s[0] != cfg.views() - 1)
    throw Error("f3_fuse: expected MN-1 auxiliary features (" + std::to_string(cfg.views() - 1) + "), got " +
                std::to_string(s[0]));
  if (s[1] != cfg.channels) throw Error("f3_fuse: channel count mismatch");
  auto per_channel = swap_batch_channels(tape, stack);  // (c, MN-1, h, w)
  auto v = conv2d(tape, per_channel, model.f3_view_head);
  v = residual_chain(tape, v, model.f3_view_blocks);
  v = conv2d(tape, v, model.f3_view_out);  // (c, 1, h, w)
  v = reshape(tape, v, {1, s[1], s[2], s[3]});
  return residual_chain(tape, conv2d(tape, v, model.f3_channel_head), model.f3_channel_blocks);
}

/// Residual map through sub-pixel upsampling plus bicubic skip of the LR view.
/// Unclamped; callers clamp at inference.
template <typename Scalar>
Var<Scalar> f4_reconstruct(Tape<Scalar>& tape, const Var<Scalar>& f3, const Image<Scalar>& lr_view,
                           const AtoModel<Scalar>& model) {
  const int alpha = model.config().alpha;
  if (f3->value.dim(0) != 1 || f3->value.dim(2) != lr_view.rows() || f3->value.dim(3) != lr_view.cols())
    throw Error("f4_reconstruct: feature " + to_string(f3->value.shape()) + " does not match LR view " +
                std::to_string(lr_view.rows()) + "x" + std::to_string(lr_view.cols()));
  auto up = pixel_shuffle(tape, conv2d(tape, f3, model.f4_expand), alpha);
  auto residual = conv2d(tape, up, model.f4_recon);
  Tensor4<Scalar> skip(1, 1, alpha * lr_view.rows(), alpha * lr_view.cols());
  skip.plane(0, 0) = bicubic_upsample(lr_view, alpha);
  return add_constant(tape, residual, skip);
}

namespace detail {

template <typename Scalar>
void require_model_fits(const LightField<Scalar>& lf, const AtoConfig& cfg) {
  if (lf.angular_rows() != cfg.angular_rows || lf.angular_cols() != cfg.angular_cols)
    throw Error("angular_res mismatch: light field " + std::to_string(lf.angular_rows()) + "x" +
                std::to_string(lf.angular_cols()) + ", model " + std::to_string(cfg.angular_rows) + "x" +
                std::to_string(cfg.angular_cols));
}

template <typename Scalar>
Tensor4<Scalar> views_as_batch(const LightField<Scalar>& lf) {
  return lf.data().reshaped({lf.view_count(), 1, lf.height(), lf.width()});
}

/// Raster order of every view except the reference.
inline std::vector<Index> auxiliary_order(Index views, Index ref) {
  std::vector<Index> order;
  for (Index a = 0; a < views; ++a)
    if (a != ref) order.push_back(a);
  return order;
}

template <typename Scalar>
Var<Scalar> all_to_one_from_features(Tape<Scalar>& tape, const Var<Scalar>& features, const LightField<Scalar>& lr,
                                      AngularIndex ref, const AtoModel<Scalar>& model) {
  const Index r = lr.raster(ref);
  auto ref_feat = gather_batch(tape, features, {r});
  auto aux_feat = gather_batch(tape, features, auxiliary_order(lr.view_count(), r));
  auto f3 = f3_fuse(tape, f2_pair(tape, ref_feat, aux_feat, model), model);
  return f4_reconstruct(tape, f3, Image<Scalar>(lr.view(ref)), model);
}

}  // namespace detail

/// Super-resolves the reference view from all views. Output (1, 1, a*H, a*W), unclamped.
template <typename Scalar>
Var<Scalar> forward_all_to_one(Tape<Scalar>& tape, const LightField<Scalar>& lr, AngularIndex ref,
                               const AtoModel<Scalar>& model) {
  detail::require_model_fits(lr, model.config());
  if (!lr.contains(ref)) throw std::out_of_range("forward_all_to_one: reference index out of range");
  auto features = f1_extract(tape, tape.constant(detail::views_as_batch(lr)), model);
  return detail::all_to_one_from_features(tape, features, lr, ref, model);
}

template <typename Scalar>
Image<Scalar> clamp_unit(const Image<Scalar>& img) {
  return img.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
}

/// Intermediate super-resolved light field: every view as reference, clamped.
template <typename Scalar>
LightField<Scalar> forward_all_views(const LightField<Scalar>& lr, const AtoModel<Scalar>& model) {
  detail::require_model_fits(lr, model.config());
  const int alpha = model.config().alpha;
  Tape<Scalar> tape(false);
  auto features = f1_extract(tape, tape.constant(detail::views_as_batch(lr)), model);
  LightField<Scalar> out(lr.angular_rows(), lr.angular_cols(), alpha * lr.height(), alpha * lr.width());
  for (Index m = 0; m < lr.angular_rows(); ++m)
    for (Index n = 0; n < lr.angular_cols(); ++n) {
      auto sr = detail::all_to_one_from_features(tape, features, lr, {m, n}, model);
      out.view({m, n}) = clamp_unit(Image<Scalar>(sr->value.plane(0, 0)));
    }
  return out;
}

/// Single-view inference, clamped.
template <typename Scalar>
Image<Scalar> super_resolve_view(const LightField<Scalar>& lr, AngularIndex ref, const AtoModel<Scalar>& model) {
  Tape<Scalar> tape(false);
  return clamp_unit(Image<Scalar>(forward_all_to_one(tape, lr, ref, model)->value.plane(0, 0)));
}

// All-to-All ablation baseline.

enum class AllToAllMode { image, feature };

/// One trunk over the stacked views, predicting all views at once.
///
/// image: the M*N LR views enter as channels. feature: each view first goes
/// through an f1-style extractor, is squeezed to a few channels by a shared
/// conv, and the squeezed maps are stacked. Trunk depth is chosen so the
/// parameter count matches a reference count as closely as possible.
template <typename Scalar>
class AllToAllModel {
 public:
  AllToAllModel(const AtoConfig& cfg, AllToAllMode mode, Index target_params, std::uint64_t seed = 1)
      : config_(cfg), mode_(mode) {
    cfg.validate();
    const Index c = cfg.channels, v = cfg.views();
    const Index a2 = static_cast<Index>(cfg.alpha * cfg.alpha);
    const Index squeeze = std::max<Index>(1, c / 16);
    const Index trunk_in = mode == AllToAllMode::image ? v : v * squeeze;
    const Index block = 2 * (c * c * 9 + c);
    Index fixed = (trunk_in * c * 9 + c) + (c * v * a2 * 9 + v * a2) + 10;
    if (mode == AllToAllMode::feature)
      fixed += (c * 9 + c) + cfg.n1 * block + (c * squeeze * 9 + squeeze);
    const double want = static_cast<double>(target_params - fixed) / static_cast<double>(block);
    depth_ = std::max(1, static_cast<int>(std::lround(want)));

    std::mt19937_64 rng(seed);
    if (mode == AllToAllMode::feature) {
      view_head_ = make_conv(params_, "a2a.view.head", {1, c, true}, rng);
      view_blocks_ = make_res_chain(params_, "a2a.view.res", cfg.n1, c, rng);
      view_squeeze_ = make_conv(params_, "a2a.view.squeeze", {c, squeeze, true}, rng);
    }
    trunk_head_ = make_conv(params_, "a2a.trunk.head", {trunk_in, c, true}, rng);
    trunk_blocks_ = make_res_chain(params_, "a2a.trunk.res", depth_, c, rng);
    expand_ = make_conv(params_, "a2a.expand", {c, v * a2, false}, rng);
    recon_ = make_conv(params_, "a2a.recon", {1, 1, false}, rng);
  }

  const AtoConfig& config() const { return config_; }
  AllToAllMode mode() const { return mode_; }
  int trunk_depth() const { return depth_; }
  ParamStore<Scalar>& params() { return params_; }
  const ParamStore<Scalar>& params() const { return params_; }

  /// Output (M*N, 1, a*H, a*W), unclamped.
  Var<Scalar> forward(Tape<Scalar>& tape, const LightField<Scalar>& lr) const {
    detail::require_model_fits(lr, config_);
    const Index v = lr.view_count(), h = lr.height(), w = lr.width();
    const int alpha = config_.alpha;
    auto views = tape.constant(detail::views_as_batch(lr));
    Var<Scalar> stack;
    if (mode_ == AllToAllMode::image) {
      stack = reshape(tape, views, {1, v, h, w});
    } else {
      auto f = conv2d(tape, residual_chain(tape, conv2d(tape, views, view_head_), view_blocks_), view_squeeze_);
      stack = reshape(tape, f, {1, v * f->value.dim(1), h, w});
    }
    auto t = residual_chain(tape, conv2d(tape, stack, trunk_head_), trunk_blocks_);
    auto up = pixel_shuffle(tape, conv2d(tape, t, expand_), alpha);  // (1, v, a*h, a*w)
    auto residual = conv2d(tape, reshape(tape, up, {v, 1, alpha * h, alpha * w}), recon_);
    Tensor4<Scalar> skip(v, 1, alpha * h, alpha * w);
    for (Index m = 0; m < lr.angular_rows(); ++m)
      for (Index n = 0; n < lr.angular_cols(); ++n)
        skip.plane(lr.raster({m, n}), 0) = bicubic_upsample(Image<Scalar>(lr.view({m, n})), alpha);
    return add_constant(tape, residual, skip);
  }

  Conv<Scalar>& recon() { return recon_; }
  Conv<Scalar>& expand() { return expand_; }

 private:
  AtoConfig config_;
  AllToAllMode mode_;
  int depth_ = 1;
  ParamStore<Scalar> params_;
  Conv<Scalar> view_head_;
  std::vector<ResBlock<Scalar>> view_blocks_;
  Conv<Scalar> view_squeeze_;
  Conv<Scalar> trunk_head_;
  std::vector<ResBlock<Scalar>> trunk_blocks_;
  Conv<Scalar> expand_;
  Conv<Scalar> recon_;
};

/// Inference for the All-to-All baseline, clamped, shaped like forward_all_views.
template <typename Scalar>
LightField<Scalar> forward_all_to_all(const LightField<Scalar>& lr, const AllToAllModel<Scalar>& model) {
  Tape<Scalar> tape(false);
  auto out = model.forward(tape, lr)->value;
  out.array() = out.array().max(Scalar(0)).min(Scalar(1));
  return LightField<Scalar>(out.reshaped({lr.angular_rows(), lr.angular_cols(), out.dim(2), out.dim(3)}));
}

}  // namespace lfsr

#endif  // LFSR_ATO_HPP
