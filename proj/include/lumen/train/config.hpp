#pragma once

#include "lumen/config_file.hpp"
#include "lumen/losses.hpp"
#include "lumen/synth/dataset.hpp"
#include "lumen/train/adam.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lumen {

/// Keys understood by the dataset generator.
std::vector<ConfigKey> dataset_schema();
/// Keys understood by training (and stored inside checkpoints).
std::vector<ConfigKey> train_schema();
/// Keys used by inference and evaluation.
std::vector<ConfigKey> eval_schema();
/// Every key, in the order above.
std::vector<ConfigKey> full_schema();

synth::DatasetConfig dataset_config(const KeyValueConfig& kv);

struct TrainConfig {
  int image_size = 64;
  int batch_size = 1;
  long iterations = 2000;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  int pool_size = 50;
  LossWeights weights;
  GanMode gan_mode = GanMode::log;
  std::uint64_t seed = 1;
  long checkpoint_every = 500;
  ModelConfig model;

  void validate() const;
  train::AdamOptions adam() const { return {learning_rate, adam_beta1, adam_beta2, 1e-8}; }

  static TrainConfig from(const KeyValueConfig& kv);
  /// Settings as a config restricted to train_schema().
  KeyValueConfig to_config() const;
  /// Hash of every setting that shapes the trajectory of a run; the iteration
  /// budget and checkpoint cadence are left out so a run can be extended.
  std::string hash() const;
};

}  // namespace lumen
