#include "lfsr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

namespace lfsr {

namespace fs = std::filesystem;
using nlohmann::json;

void store_params(Container& c, const ParamStore<float>& params) {
  params.for_each([&](const ParamTensor<float>& p) {
    const float* d = p.value.data();
    c.tensors.push_back({"param/" + p.name, p.value.shape(), std::vector<float>(d, d + p.value.size())});
  });
}

void load_params(const Container& c, ParamStore<float>& params) {
  params.for_each([&](ParamTensor<float>& p) {
    const TensorRecord* rec = c.find("param/" + p.name);
    if (!rec) throw Error("checkpoint missing tensor " + p.name);
    if (rec->shape != p.value.shape())
      throw Error("shape mismatch for tensor " + p.name + ": file " + to_string(rec->shape) + ", model " +
                  to_string(p.value.shape()));
    std::copy(rec->values.begin(), rec->values.end(), p.value.data());
  });
}

json state_to_json(const TrainState& s) {
  std::ostringstream rng;
  rng << s.rng;
  return {{"epoch", s.epoch},
          {"rng", rng.str()},
          {"adam_steps", s.adam.steps()},
          {"loss_trace", s.loss_trace},
          {"lr_trace", s.lr_trace},
          {"le_trace", s.le_trace}};
}

void state_from_json(const json& j, const Container& c, TrainState& s) {
  s.epoch = j.at("epoch").get<int>();
  std::istringstream rng(j.at("rng").get<std::string>());
  rng >> s.rng;
  if (!rng) throw Error("checkpoint RNG state unreadable");
  s.loss_trace = j.at("loss_trace").get<std::vector<double>>();
  s.lr_trace = j.value("lr_trace", std::vector<double>{});
  s.le_trace = j.value("le_trace", std::vector<double>{});
  s.adam.import_state(c, j.at("adam_steps").get<std::int64_t>());
}

namespace {

void write_model(const fs::path& path, const char* kind, json config, const ParamStore<float>& params,
                 const TrainConfig* train, const TrainState* state) {
  Container c;
  c.meta = {{"kind", kind}, {"config", std::move(config)}};
  if (train) c.meta["train"] = *train;
  store_params(c, params);
  if (state) {
    c.meta["state"] = state_to_json(*state);
    for (auto& rec : state->adam.export_state()) c.tensors.push_back(std::move(rec));
  }
  write_container(path, c);
}

template <typename Model, typename Config>
Loaded<Model> read_model(const fs::path& path, const char* kind) {
  const Container c = read_container(path);
  const std::string found = c.meta.value("kind", "");
  if (found != kind) throw Error(path.string() + ": expected a " + kind + " checkpoint, found '" + found + "'");
  Loaded<Model> out{Model(c.meta.at("config").get<Config>()), std::nullopt, std::nullopt};
  load_params(c, out.model.params());
  if (c.meta.contains("train")) out.train = c.meta["train"].get<TrainConfig>();
  if (c.meta.contains("state")) {
    TrainState s;
    state_from_json(c.meta["state"], c, s);
    out.state = std::move(s);
  }
  return out;
}

}  // namespace

void save_checkpoint(const fs::path& path, const AtoModel<float>& model, const TrainConfig* train,
                     const TrainState* state) {
  write_model(path, "ato", model.config(), model.params(), train, state);
}

void save_checkpoint(const fs::path& path, const RegModel<float>& model, const TrainConfig* train,
                     const TrainState* state) {
  write_model(path, "reg", model.config(), model.params(), train, state);
}

Loaded<AtoModel<float>> load_ato_checkpoint(const fs::path& path) {
  return read_model<AtoModel<float>, AtoConfig>(path, "ato");
}

Loaded<RegModel<float>> load_reg_checkpoint(const fs::path& path) {
  return read_model<RegModel<float>, RegConfig>(path, "reg");
}

LightField<float> super_resolve(const LightField<float>& lr, const AtoModel<float>& ato, const RegModel<float>* reg,
                                int alpha) {
  const auto& ac = ato.config();
  if (ac.alpha != alpha)
    throw Error("alpha mismatch: requested " + std::to_string(alpha) + ", model trained for " + std::to_string(ac.alpha));
  if (ac.angular_rows != lr.angular_rows() || ac.angular_cols != lr.angular_cols())
    throw Error("angular_res mismatch: scene " + std::to_string(lr.angular_rows()) + "x" +
                std::to_string(lr.angular_cols()) + ", sr model " + std::to_string(ac.angular_rows) + "x" +
                std::to_string(ac.angular_cols));
  if (reg) {
    const auto& rc = reg->config();
    if (rc.angular_rows != lr.angular_rows() || rc.angular_cols != lr.angular_cols())
      throw Error("angular_res mismatch: scene " + std::to_string(lr.angular_rows()) + "x" +
                  std::to_string(lr.angular_cols()) + ", reg model " + std::to_string(rc.angular_rows) + "x" +
                  std::to_string(rc.angular_cols));
  }
  auto out = forward_all_views(lr, ato);
  return reg ? regularize(out, *reg) : out;
}

Scene super_resolve(const Scene& lr, const AtoModel<float>& ato, const RegModel<float>* reg, int alpha) {
  Scene out;
  out.name = lr.name;
  out.disparity = lr.disparity;
  if (out.disparity) *out.disparity *= alpha;
  out.luma = super_resolve(lr.luma, ato, reg, alpha);
  if (lr.chroma) out.chroma = std::array{upsample_views((*lr.chroma)[0], alpha), upsample_views((*lr.chroma)[1], alpha)};
  return out;
}

SceneReport score_scene(const std::string& name, const LightField<float>& pred, const LightField<float>& gt,
                        const std::vector<double>& thresholds) {
  require_same_shape(pred, gt, "score_scene");
  SceneReport r;
  r.name = name;
  r.per_view = per_view_psnr_grid(pred, gt);
  std::vector<double> values(r.per_view.grid.data(), r.per_view.grid.data() + r.per_view.grid.size());
  r.psnr_mean = finite_mean(values, &r.infinite_views);
  if (r.infinite_views > 0)
    std::cerr << "warning: " << name << ": " << r.infinite_views << " view(s) with infinite PSNR excluded from the mean\n";
  double ssim_sum = 0.0;
  for (Index m = 0; m < pred.angular_rows(); ++m)
    for (Index n = 0; n < pred.angular_cols(); ++n)
      ssim_sum += ssim(Image<float>(pred.view({m, n})), Image<float>(gt.view({m, n})));
  r.ssim_mean = ssim_sum / static_cast<double>(pred.view_count());
  r.pr_points = parallax_pr_curve(pred, gt, thresholds);
  return r;
}

EvalReport aggregate(std::vector<SceneReport> scenes, int alpha, const std::string& method) {
  std::sort(scenes.begin(), scenes.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  EvalReport r;
  r.alpha = alpha;
  r.method = method;
  std::vector<double> psnrs;
  double ssim_sum = 0.0;
  for (const auto& s : scenes) {
    psnrs.push_back(s.psnr_mean);
    ssim_sum += s.ssim_mean;
    r.runtime_s += s.runtime_s;
  }
  int excluded = 0;
  r.psnr_mean = finite_mean(psnrs, &excluded);
  if (excluded > 0) std::cerr << "warning: " << excluded << " scene(s) with infinite PSNR excluded from the mean\n";
  r.ssim_mean = scenes.empty() ? 0.0 : ssim_sum / static_cast<double>(scenes.size());
  r.scenes = std::move(scenes);
  return r;
}

EvalReport evaluate(const std::vector<EvalPair>& pairs, const SrMethod& method, int alpha, const std::string& name) {
  std::vector<SceneReport> scenes;
  for (const auto& p : pairs) {
    const auto t0 = std::chrono::steady_clock::now();
    const LightField<float> pred = method(p.lr);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (pred.data().shape() != p.gt.data().shape())
      throw Error("scene " + p.name + ": prediction " + to_string(pred.data().shape()) + " does not match ground truth " +
                  to_string(p.gt.data().shape()));
    auto s = score_scene(p.name, pred, p.gt);
    s.runtime_s = secs;
    scenes.push_back(std::move(s));
  }
  return aggregate(std::move(scenes), alpha, name);
}

namespace {

json db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

}  // namespace

json report_to_json(const EvalReport& r, bool include_runtime) {
  json scenes = json::array();
  for (const auto& s : r.scenes) {
    json grid = json::array();
    for (Index m = 0; m < s.per_view.grid.rows(); ++m) {
      json row = json::array();
      for (Index n = 0; n < s.per_view.grid.cols(); ++n) row.push_back(db(s.per_view.grid(m, n)));
      grid.push_back(row);
    }
    json pr = json::array();
    for (const auto& p : s.pr_points) pr.push_back({{"threshold", p.threshold}, {"recall", p.recall}, {"precision", p.precision}});
    json js = {{"name", s.name},
               {"psnr_mean", db(s.psnr_mean)},
               {"ssim_mean", s.ssim_mean},
               {"infinite_views", s.infinite_views},
               {"per_view_psnr", grid},
               {"per_view_psnr_min", db(s.per_view.min)},
               {"per_view_psnr_max", db(s.per_view.max)},
               {"center_corner_gap", db(s.per_view.center_corner_gap)},
               {"pr_points", pr}};
    if (include_runtime) js["runtime_s"] = s.runtime_s;
    scenes.push_back(std::move(js));
  }
  json j = {{"alpha", r.alpha},
            {"method", r.method},
            {"psnr_mean", db(r.psnr_mean)},
            {"ssim_mean", r.ssim_mean},
            {"scenes", scenes}};
  if (include_runtime) {
    j["runtime_s"] = r.runtime_s;
    j["runtime_note"] = "compute only; model loading excluded";
  }
  return j;
}

std::string pr_csv(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "scene,threshold,recall,precision\n";
  for (const auto& s : r.scenes)
    for (const auto& p : s.pr_points) os << s.name << ',' << p.threshold << ',' << p.recall << ',' << p.precision << '\n';
  return os.str();
}

}  // namespace lfsr
