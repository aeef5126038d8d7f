#ifndef LFSR_REG_HPP
#define LFSR_REG_HPP

#include "lfsr/light_field.hpp"
#include "lfsr/nn.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lfsr {

struct RegConfig {
  int n5 = 3;
  Index channels = 64;
  Index angular_rows = 7;
  Index angular_cols = 7;

  void validate() const {
    if (n5 < 1) throw Error("RegConfig: n5 must be >= 1");
    if (channels < 1) throw Error("RegConfig: channels must be >= 1");
    if (angular_rows < 1 || angular_cols < 1) throw Error("RegConfig: empty angular grid");
  }
};

/// Structural-consistency regularizer: shared per-view head, n5 alternate
/// spatial-angular layers, shared per-view tail producing a residual map.
template <typename Scalar>
class RegModel {
 public:
  /// `tail_gain` scales the tail initialization; 0 starts as an exact identity.
  explicit RegModel(const RegConfig& cfg, std::uint64_t seed = 2, double tail_gain = 1.0) : config_(cfg) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    head = make_conv(params_, "reg.head", {1, cfg.channels, true}, rng);
    for (int i = 0; i < cfg.n5; ++i) layers.push_back(make_altconv(params_, "reg.alt." + std::to_string(i), cfg.channels, rng));
    tail = make_conv(params_, "reg.tail", {cfg.channels, 1, false}, rng, tail_gain);
  }
  RegModel(RegModel&&) noexcept = default;
  RegModel& operator=(RegModel&&) noexcept = default;

  const RegConfig& config() const { return config_; }
  ParamStore<Scalar>& params() { return params_; }
  const ParamStore<Scalar>& params() const { return params_; }

  Conv<Scalar> head;
  std::vector<AltConvLayer<Scalar>> layers;
  Conv<Scalar> tail;

 private:
  RegConfig config_;
  ParamStore<Scalar> params_;
};

/// L^rf = L^sr + residual, on the (M*N, 1, H, W) view stack. Unclamped.
template <typename Scalar>
Var<Scalar> regularize(Tape<Scalar>& tape, const Var<Scalar>& views, const RegModel<Scalar>& model) {
  const auto& cfg = model.config();
  const auto& s = views->value.shape();
  if (s[0] != cfg.angular_rows * cfg.angular_cols || s[1] != 1)
    throw Error("regularize: angular_res mismatch, got " + to_string(s) + " for " + std::to_string(cfg.angular_rows) +
                "x" + std::to_string(cfg.angular_cols) + " views");
  auto f = conv2d(tape, views, model.head);
  for (const auto& layer : model.layers) f = altconv_layer(tape, f, cfg.angular_rows, cfg.angular_cols, layer);
  return add(tape, views, conv2d(tape, f, model.tail));
}

/// Inference on a light field; output clamped to [0, 1].
template <typename Scalar>
LightField<Scalar> regularize(const LightField<Scalar>& lf_sr, const RegModel<Scalar>& model) {
  const auto& cfg = model.config();
  if (lf_sr.angular_rows() != cfg.angular_rows || lf_sr.angular_cols() != cfg.angular_cols)
    throw Error("regularize: angular_res mismatch");
  Tape<Scalar> tape(false);
  auto views = tape.constant(lf_sr.data().reshaped({lf_sr.view_count(), 1, lf_sr.height(), lf_sr.width()}));
  auto out = regularize(tape, views, model)->value;
  out.array() = out.array().max(Scalar(0)).min(Scalar(1));
  return LightField<Scalar>(out.reshaped(lf_sr.data().shape()));
}

}  // namespace lfsr

#endif  // LFSR_REG_HPP
