#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stereokit/losses.hpp"
#include "stereokit/net.hpp"
#include "stereokit/stereogram.hpp"

namespace stereokit {

struct AdamParams {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float lr = 1e-4f;  // base rate; the schedule scales it
};

// Moments are kept in the model's parameter order.
struct AdamState {
  std::vector<Tensor<float>> m, v;
  std::int64_t t = 0;
  AdamParams hyper;
};

AdamState make_adam_state(const Model& model, AdamParams hyper = {});

// One bias-corrected Adam update at learning rate `lr`. Returns false and
// leaves parameters and moments untouched when any gradient is not finite.
bool adam_step(Model& model, const GradMap<float>& grads, AdamState& state, float lr);

// Base rate halved once per third of the run, applied continuously.
float scheduled_lr(float base, std::int64_t step, std::int64_t total_steps);

enum class TrainMode { lidar, photo, lidar_photo };
const char* train_mode_name(TrainMode m);
TrainMode train_mode_from_name(const std::string& name);

// lidar: photometric term off; photo: LIDAR term off; lidar_photo: the
// validated combined weighting.
LossWeights weights_for_mode(TrainMode mode);

struct TrainOptions {
  std::int64_t steps = 1000;
  TrainMode mode = TrainMode::lidar_photo;
  AdamParams adam;
  bool use_sparse_gt = true;
  std::string checkpoint_path;          // written periodically when set
  std::int64_t checkpoint_every = 500;  // steps
  std::string log_path;                 // csv written when set
  std::optional<LossWeights> weights_override;  // replaces the mode preset
};

struct StepLog {
  std::int64_t step = 0;
  float total = 0, e_image = 0, e_lidar = 0, e_lr = 0, e_ds = 0, lr = 0;
};

struct TrainResult {
  std::vector<StepLog> log;
  bool diverged = false;
  std::int64_t steps_run = 0;
};

// Batch-size-1 loop over the samples in order, cycling. Aborts on a
// non-finite loss or gradient, keeping the last periodic checkpoint.
TrainResult train(Model& model, const std::vector<StereoSample>& dataset,
                  const TrainOptions& options);

std::string format_log_line(const StepLog& entry);

// ---- checkpoints ----
// Binary container: magic "SDNN", u32 version, config block, parameter
// records (u32 name length, name bytes, u32 rank, i32 dims, f32 data), an
// optional Adam block, and the training step. All fields little-endian;
// round-trips are bitwise.
struct Checkpoint {
  ModelConfig config;
  std::vector<std::pair<std::string, Tensor<float>>> params;
  bool has_adam = false;
  AdamState adam;
  std::int64_t step = 0;
};

void save_checkpoint(const std::string& path, const Model& model, const AdamState* adam = nullptr,
                     std::int64_t step = 0);
Checkpoint load_checkpoint(const std::string& path);

// Copies checkpoint parameters into a built model; the name sets must match
// exactly, otherwise the error lists missing and unexpected names.
void apply_checkpoint(Model& model, const Checkpoint& ckpt);

// Convenience: rebuilds the model a checkpoint describes.
Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace stereokit
