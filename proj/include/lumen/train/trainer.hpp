#pragma once

#include "lumen/checkpoint.hpp"
#include "lumen/train/config.hpp"
#include "lumen/train/objective.hpp"
#include "lumen/train/pool.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>

namespace lumen::train {

/// A loss went NaN or infinite; what() carries the step and every term.
class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ImagePair = std::pair<Tensor<float>, Tensor<float>>;  // (OC slot, VC slot)

/// Parameters, optimizer moments, pools and random streams of one run.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  /// One discriminator update followed by one generator update on a batch of
  /// OC images and an unrelated batch of VC images, both (B, 3, H, W) in [-1, 1].
  LossReport step(const Tensor<float>& batch_oc, const Tensor<float>& batch_vc, InvocationAudit* audit = nullptr);

  const TrainConfig& config() const { return cfg_; }
  SharedLatentModel<float>& model() { return model_; }
  long steps_done() const { return step_; }
  double last_discriminator_loss() const { return last_d_loss_; }

  /// Called with "discriminators" and "generators" after each phase's update.
  void set_phase_hook(std::function<void(const std::string&)> hook) { phase_hook_ = std::move(hook); }

  RandomStream& data_rng() { return data_rng_; }
  RandomStream& noise_rng() { return noise_rng_; }

  Checkpoint to_checkpoint() const;
  /// Restores a full training state. The checkpoint's config hash must match.
  void restore(const Checkpoint& ck);

 private:
  TrainConfig cfg_;
  SharedLatentModel<float> model_;
  Adam<float> opt_g_, opt_d_;
  ImagePool<ImagePair> pool_forward_, pool_backward_;
  ImagePool<Tensor<float>> pool_oc_;
  RandomStream data_rng_, noise_rng_, pool_rng_;
  long step_ = 0;
  double last_d_loss_ = 0;
  std::function<void(const std::string&)> phase_hook_;
};

/// Training settings stored in a checkpoint.
TrainConfig checkpoint_config(const Checkpoint& ck);
/// Copies the four networks' parameters out of a checkpoint.
void load_parameters(SharedLatentModel<float>& model, const Checkpoint& ck);

struct TrainOptions {
  std::filesystem::path data_root;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;
  std::function<void(long step, const LossReport&)> progress;
};

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path loss_csv;
  long steps = 0;
};

/// Loads <data_root>/trainA and trainB, runs to cfg.iterations, writes
/// <out>/losses.csv and <out>/checkpoints/{step_NNNNNN,final}.ckpt.
TrainResult train(const TrainConfig& cfg, const TrainOptions& opts);

/// Every PNG of a directory as (1, 3, H, W) tensors, sorted by file name.
std::vector<std::pair<std::string, Tensor<float>>> load_image_dir(const std::filesystem::path& dir);

}  // namespace lumen::train
