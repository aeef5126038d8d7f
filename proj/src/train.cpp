#include "lfsr/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lfsr {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) throw Error("TrainConfig: stage must be 1 or 2");
  if (!(lr_init > 0) || !(lr_decay > 0) || decay_every < 1) throw Error("TrainConfig: learning-rate schedule must be positive");
  if (batch_size != 1) throw Error("TrainConfig: only batch_size 1 is supported");
  if (alpha != 2 && alpha != 4) throw Error("TrainConfig: alpha must be 2 or 4");
  if (patch_hr < 1 || patch_hr % alpha != 0) throw Error("TrainConfig: patch_hr must be a positive multiple of alpha");
  if (angular_rows < 1 || angular_cols < 1) throw Error("TrainConfig: empty angular grid");
  if (epochs < 0) throw Error("TrainConfig: epochs must be >= 0");
  if (lambda_epi < 0) throw Error("TrainConfig: lambda_epi must be >= 0");
  if (checkpoint_every < 1 || keep_checkpoints < 1) throw Error("TrainConfig: checkpoint cadence must be positive");
}

double TrainConfig::learning_rate(int epoch) const {
  return lr_init * std::pow(lr_decay, static_cast<double>(epoch / decay_every));
}

void Adam::step(ParamStore<float>& params, double lr) {
  if (m_.empty()) {
    params.for_each([&](const ParamTensor<float>& p) {
      names_.push_back(p.name);
      m_.emplace_back(p.value.shape());
      v_.emplace_back(p.value.shape());
    });
  }
  if (m_.size() != params.size()) throw Error("Adam: parameter set changed between steps");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  const auto step_size = static_cast<float>(lr / bc1);
  const auto root_bc2 = static_cast<float>(std::sqrt(bc2));
  const auto b1 = static_cast<float>(beta1), b2 = static_cast<float>(beta2), e = static_cast<float>(eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor<float>& p = params[i];
    if (!p.trainable) continue;
    auto m = m_[i].array();
    auto v = v_[i].array();
    const auto g = p.grad.array();
    m_[i].array() = b1 * m + (1.0f - b1) * g;
    v_[i].array() = b2 * v + (1.0f - b2) * g * g;
    p.value.array() -= step_size * m_[i].array() / (v_[i].array().sqrt() / root_bc2 + e);
  }
}

std::vector<TensorRecord> Adam::export_state() const {
  std::vector<TensorRecord> out;
  for (std::size_t i = 0; i < m_.size(); ++i) {
    out.push_back({"adam.m/" + names_[i], m_[i].shape(), std::vector<float>(m_[i].data(), m_[i].data() + m_[i].size())});
    out.push_back({"adam.v/" + names_[i], v_[i].shape(), std::vector<float>(v_[i].data(), v_[i].data() + v_[i].size())});
  }
  return out;
}

void Adam::import_state(const Container& c, std::int64_t steps) {
  names_.clear();
  m_.clear();
  v_.clear();
  t_ = steps;
  for (const auto& rec : c.tensors) {
    if (rec.name.rfind("adam.m/", 0) != 0) continue;
    const std::string name = rec.name.substr(7);
    const TensorRecord* v = c.find("adam.v/" + name);
    if (!v || v->shape != rec.shape) throw Error("checkpoint optimizer state incomplete for " + name);
    names_.push_back(name);
    Tensor4<float> mt(rec.shape), vt(rec.shape);
    std::copy(rec.values.begin(), rec.values.end(), mt.data());
    std::copy(v->values.begin(), v->values.end(), vt.data());
    m_.push_back(std::move(mt));
    v_.push_back(std::move(vt));
  }
}

TrainingItem sample_training_item(const LightField<float>& scene, const TrainConfig& cfg, std::mt19937_64& rng) {
  const Index p = cfg.patch_hr;
  if (scene.height() < p || scene.width() < p)
    throw Error("scene " + std::to_string(scene.height()) + "x" + std::to_string(scene.width()) +
                " is smaller than the training patch " + std::to_string(p));
  std::uniform_int_distribution<Index> ys(0, scene.height() - p), xs(0, scene.width() - p);
  std::uniform_int_distribution<Index> refs(0, scene.view_count() - 1);
  const Index y0 = ys(rng), x0 = xs(rng);
  const Index r = refs(rng);
  TrainingItem item;
  item.hr = crop(scene, y0, x0, p, p);
  item.lr = downsample_views(item.hr, cfg.alpha);
  item.ref = {r / scene.angular_cols(), r % scene.angular_cols()};
  return item;
}

namespace {

void require_finite(double loss, std::size_t iteration) {
  if (!std::isfinite(loss))
    throw Error("non-finite loss at iteration " + std::to_string(iteration));
}

void require_scenes(const std::vector<LightField<float>>& scenes, const TrainConfig& cfg) {
  if (scenes.empty()) throw Error("training needs at least one scene");
  for (const auto& s : scenes)
    if (s.angular_rows() != cfg.angular_rows || s.angular_cols() != cfg.angular_cols)
      throw Error("scene angular_res " + std::to_string(s.angular_rows()) + "x" + std::to_string(s.angular_cols()) +
                  " does not match config " + std::to_string(cfg.angular_rows) + "x" + std::to_string(cfg.angular_cols));
}

}  // namespace

void train_stage1(const std::vector<LightField<float>>& scenes, const TrainConfig& cfg, AtoModel<float>& model,
                  TrainState& state, const EpochHook& hook) {
  cfg.validate();
  if (cfg.stage != 1) throw Error("train_stage1 requires stage = 1");
  require_scenes(scenes, cfg);
  if (model.config().alpha != cfg.alpha) throw Error("alpha mismatch between model and training config");
  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate(epoch);
    for (const auto& scene : scenes) {
      TrainingItem item = sample_training_item(scene, cfg, state.rng);
      Tape<float> tape;
      auto sr = forward_all_to_one(tape, item.lr, item.ref, model);
      Tensor4<float> gt(1, 1, item.hr.height(), item.hr.width());
      gt.plane(0, 0) = item.hr.view(item.ref);
      auto loss = l1_loss(tape, sr, gt);
      const double value = loss->value(0, 0, 0, 0);
      require_finite(value, state.loss_trace.size());
      model.params().zero_grad();
      tape.backward(loss);
      state.adam.step(model.params(), lr);
      state.loss_trace.push_back(value);
    }
    state.epoch = epoch + 1;
    if (hook) hook(state.epoch, state);
  }
}

std::vector<LightField<float>> stage2_inputs(const std::vector<LightField<float>>& scenes, const AtoModel<float>& ato) {
  std::vector<LightField<float>> out;
  for (const auto& s : scenes) out.push_back(forward_all_views(downsample_views(s, ato.config().alpha), ato));
  return out;
}

void train_stage2(const std::vector<LightField<float>>& scenes, const std::vector<LightField<float>>& intermediates,
                  const TrainConfig& cfg, RegModel<float>& model, TrainState& state, const EpochHook& hook) {
  cfg.validate();
  if (cfg.stage != 2) throw Error("train_stage2 requires stage = 2");
  require_scenes(scenes, cfg);
  if (intermediates.size() != scenes.size()) throw Error("train_stage2: one intermediate result per scene required");
  const Index p = cfg.patch_hr;
  const auto lambda = static_cast<float>(cfg.lambda_epi);
  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate(epoch);
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      const auto& hr = scenes[s];
      require_same_shape(hr, intermediates[s], "train_stage2 intermediate");
      if (hr.height() < p || hr.width() < p) throw Error("scene is smaller than the training patch");
      std::uniform_int_distribution<Index> ys(0, hr.height() - p), xs(0, hr.width() - p);
      const Index y0 = ys(state.rng), x0 = xs(state.rng);
      const auto gt = crop(hr, y0, x0, p, p);
      const auto in = crop(intermediates[s], y0, x0, p, p);

      Tape<float> tape;
      auto views = tape.constant(in.data().reshaped({in.view_count(), 1, p, p}));
      auto out = regularize(tape, views, model);
      auto l_r = l1_loss(tape, out, gt.data().reshaped({in.view_count(), 1, p, p}));
      auto l_e = epi_gradient_loss(tape, out, gt.data());
      auto total = add(tape, l_r, scale(tape, l_e, lambda));
      const double value = total->value(0, 0, 0, 0);
      require_finite(value, state.loss_trace.size());
      model.params().zero_grad();
      tape.backward(total);
      state.adam.step(model.params(), lr);
      state.loss_trace.push_back(value);
      state.lr_trace.push_back(l_r->value(0, 0, 0, 0));
      state.le_trace.push_back(l_e->value(0, 0, 0, 0));
    }
    state.epoch = epoch + 1;
    if (hook) hook(state.epoch, state);
  }
}

CheckpointRotation::CheckpointRotation(fs::path dir, std::string prefix, int keep)
    : dir_(std::move(dir)), prefix_(std::move(prefix)), keep_(keep) {}

fs::path CheckpointRotation::next_path(int epoch) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_epoch_%05d.ckpt", epoch);
  return dir_ / (prefix_ + buf);
}

void CheckpointRotation::commit(const fs::path& written) {
  written_.push_back(written);
  while (static_cast<int>(written_.size()) > keep_) {
    fs::remove(written_.front());
    written_.erase(written_.begin());
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"stage", c.stage},
       {"lr_init", c.lr_init},
       {"lr_decay", c.lr_decay},
       {"decay_every", c.decay_every},
       {"batch_size", c.batch_size},
       {"patch_hr", c.patch_hr},
       {"alpha", c.alpha},
       {"angular_rows", c.angular_rows},
       {"angular_cols", c.angular_cols},
       {"seed", c.seed},
       {"epochs", c.epochs},
       {"lambda_epi", c.lambda_epi},
       {"checkpoint_every", c.checkpoint_every},
       {"keep_checkpoints", c.keep_checkpoints}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.stage = j.value("stage", d.stage);
  c.lr_init = j.value("lr_init", d.lr_init);
  c.lr_decay = j.value("lr_decay", d.lr_decay);
  c.decay_every = j.value("decay_every", d.decay_every);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.patch_hr = j.value("patch_hr", d.patch_hr);
  c.alpha = j.value("alpha", d.alpha);
  c.angular_rows = j.value("angular_rows", d.angular_rows);
  c.angular_cols = j.value("angular_cols", d.angular_cols);
  c.seed = j.value("seed", d.seed);
  c.epochs = j.value("epochs", d.epochs);
  c.lambda_epi = j.value("lambda_epi", d.lambda_epi);
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.keep_checkpoints = j.value("keep_checkpoints", d.keep_checkpoints);
}

void to_json(nlohmann::json& j, const AtoConfig& c) {
  j = {{"n1", c.n1},         {"n2", c.n2},       {"n3", c.n3},
       {"n4", c.n4},         {"channels", c.channels}, {"alpha", c.alpha},
       {"angular_rows", c.angular_rows}, {"angular_cols", c.angular_cols}};
}

void from_json(const nlohmann::json& j, AtoConfig& c) {
  c.n1 = j.at("n1").get<int>();
  c.n2 = j.at("n2").get<int>();
  c.n3 = j.at("n3").get<int>();
  c.n4 = j.at("n4").get<int>();
  c.channels = j.at("channels").get<Index>();
  c.alpha = j.at("alpha").get<int>();
  c.angular_rows = j.at("angular_rows").get<Index>();
  c.angular_cols = j.at("angular_cols").get<Index>();
}

void to_json(nlohmann::json& j, const RegConfig& c) {
  j = {{"n5", c.n5}, {"channels", c.channels}, {"angular_rows", c.angular_rows}, {"angular_cols", c.angular_cols}};
}

void from_json(const nlohmann::json& j, RegConfig& c) {
  c.n5 = j.at("n5").get<int>();
  c.channels = j.at("channels").get<Index>();
  c.angular_rows = j.at("angular_rows").get<Index>();
  c.angular_cols = j.at("angular_cols").get<Index>();
}

}  // namespace lfsr
