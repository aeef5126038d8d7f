#ifndef LFSR_TRAIN_HPP
#define LFSR_TRAIN_HPP

#include "lfsr/ato.hpp"
#include "lfsr/io.hpp"
#include "lfsr/losses.hpp"
#include "lfsr/reg.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lfsr {

struct TrainConfig {
  int stage = 1;
  double lr_init = 1e-4;
  double lr_decay = 0.5;
  int decay_every = 250;  // epochs
  int batch_size = 1;
  Index patch_hr = 64;
  int alpha = 2;
  Index angular_rows = 7;
  Index angular_cols = 7;
  std::uint64_t seed = 1;
  int epochs = 500;
  double lambda_epi = 1.0;
  int checkpoint_every = 50;
  int keep_checkpoints = 3;

  void validate() const;
  double learning_rate(int epoch) const;
};

/// Adam with bias correction (beta1 0.9, beta2 0.999).
class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(ParamStore<float>& params, double lr);

  std::int64_t steps() const { return t_; }
  /// First/second moment per parameter name; empty until the first step.
  std::vector<TensorRecord> export_state() const;
  void import_state(const Container& c, std::int64_t steps);

 private:
  std::int64_t t_ = 0;
  std::vector<std::string> names_;
  std::vector<Tensor4<float>> m_;
  std::vector<Tensor4<float>> v_;
};

/// Resumable loop state stored alongside the parameters in a checkpoint.
struct TrainState {
  int epoch = 0;
  std::mt19937_64 rng{1};
  Adam adam;
  std::vector<double> loss_trace;
  /// Stage 2 only: per-iteration l_r and l_e.
  std::vector<double> lr_trace;
  std::vector<double> le_trace;
};

struct TrainingItem {
  LightField<float> lr;
  LightField<float> hr;
  AngularIndex ref;
};

/// Random HR patch across all views, its bicubic LR version, and a uniform
/// reference position.
TrainingItem sample_training_item(const LightField<float>& scene, const TrainConfig& cfg, std::mt19937_64& rng);

/// Per-epoch hook: (epoch just finished, state). Used for checkpointing.
using EpochHook = std::function<void(int, const TrainState&)>;

/// Stage 1: trains the All-to-One network on l_v. `state` may carry a resumed
/// loop; otherwise it is seeded from cfg.seed.
void train_stage1(const std::vector<LightField<float>>& scenes, const TrainConfig& cfg, AtoModel<float>& model,
                  TrainState& state, const EpochHook& hook = {});

/// Intermediate inputs of stage 2: forward_all_views on the bicubic-downsampled scenes.
std::vector<LightField<float>> stage2_inputs(const std::vector<LightField<float>>& scenes, const AtoModel<float>& ato);

/// Stage 2: trains the regularizer on l_r + lambda * l_e with the All-to-One
/// network frozen. `intermediates` come from stage2_inputs.
void train_stage2(const std::vector<LightField<float>>& scenes, const std::vector<LightField<float>>& intermediates,
                  const TrainConfig& cfg, RegModel<float>& model, TrainState& state, const EpochHook& hook = {});

/// Writes `<dir>/<prefix>_epoch_NNNNN.ckpt` every cfg.checkpoint_every epochs,
/// keeping the newest cfg.keep_checkpoints.
class CheckpointRotation {
 public:
  CheckpointRotation(std::filesystem::path dir, std::string prefix, int keep);
  std::filesystem::path next_path(int epoch) const;
  void commit(const std::filesystem::path& written);

 private:
  std::filesystem::path dir_;
  std::string prefix_;
  int keep_;
  std::vector<std::filesystem::path> written_;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const AtoConfig& c);
void from_json(const nlohmann::json& j, AtoConfig& c);
void to_json(nlohmann::json& j, const RegConfig& c);
void from_json(const nlohmann::json& j, RegConfig& c);

}  // namespace lfsr

#endif  // LFSR_TRAIN_HPP
