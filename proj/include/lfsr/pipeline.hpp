#ifndef LFSR_PIPELINE_HPP
#define LFSR_PIPELINE_HPP

#include "lfsr/ato.hpp"
#include "lfsr/io.hpp"
#include "lfsr/metrics.hpp"
#include "lfsr/reg.hpp"
#include "lfsr/train.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lfsr {

// Checkpoints. Parameters are stored as "param/<name>", optimizer moments as
// "adam.m/<name>" and "adam.v/<name>"; configs, epoch, RNG state and loss
// traces live in the header metadata.

/// Writes every parameter of `params` into `c`.
void store_params(Container& c, const ParamStore<float>& params);
/// Copies "param/<name>" tensors into `params`; every parameter must be present
/// with a matching shape.
void load_params(const Container& c, ParamStore<float>& params);

nlohmann::json state_to_json(const TrainState& s);
void state_from_json(const nlohmann::json& j, const Container& c, TrainState& s);

void save_checkpoint(const std::filesystem::path& path, const AtoModel<float>& model, const TrainConfig* train = nullptr,
                     const TrainState* state = nullptr);
void save_checkpoint(const std::filesystem::path& path, const RegModel<float>& model, const TrainConfig* train = nullptr,
                     const TrainState* state = nullptr);

/// Loaded model plus whatever training context the file carried.
template <typename Model>
struct Loaded {
  Model model;
  std::optional<TrainConfig> train;
  std::optional<TrainState> state;
};

Loaded<AtoModel<float>> load_ato_checkpoint(const std::filesystem::path& path);
Loaded<RegModel<float>> load_reg_checkpoint(const std::filesystem::path& path);

// Inference.

/// forward_all_views, then regularize when `reg` is given. Throws when a
/// model's alpha or angular resolution does not fit the input.
LightField<float> super_resolve(const LightField<float>& lr, const AtoModel<float>& ato, const RegModel<float>* reg,
                                int alpha);

/// Scene-level form: luma through the networks, chroma bicubic-upsampled.
Scene super_resolve(const Scene& lr, const AtoModel<float>& ato, const RegModel<float>* reg, int alpha);

// Evaluation.

struct SceneReport {
  std::string name;
  double psnr_mean = 0.0;  // over views with finite PSNR
  double ssim_mean = 0.0;
  int infinite_views = 0;
  ViewPsnrGrid per_view;
  std::vector<PrPoint> pr_points;
  double runtime_s = 0.0;  // compute only
};

struct EvalReport {
  int alpha = 2;
  std::string method;
  double psnr_mean = 0.0;  // over scenes with finite PSNR
  double ssim_mean = 0.0;
  double runtime_s = 0.0;  // total compute time of the method
  std::vector<SceneReport> scenes;  // sorted by name
};

SceneReport score_scene(const std::string& name, const LightField<float>& pred, const LightField<float>& gt,
                        const std::vector<double>& thresholds = default_pr_thresholds());

/// Sorts scenes by name and fills the aggregate fields.
EvalReport aggregate(std::vector<SceneReport> scenes, int alpha, const std::string& method);

struct EvalPair {
  std::string name;
  LightField<float> lr;
  LightField<float> gt;
};

using SrMethod = std::function<LightField<float>(const LightField<float>&)>;

/// Runs `method` on every LR scene, timing it, and scores it against the ground truth.
EvalReport evaluate(const std::vector<EvalPair>& pairs, const SrMethod& method, int alpha, const std::string& name);

/// `include_runtime` false drops the wall-clock fields (used for determinism checks).
nlohmann::json report_to_json(const EvalReport& r, bool include_runtime = true);
/// CSV: scene,threshold,recall,precision.
std::string pr_csv(const EvalReport& r);

}  // namespace lfsr

#endif  // LFSR_PIPELINE_HPP
