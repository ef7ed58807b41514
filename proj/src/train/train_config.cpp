#include "lumen/train/config.hpp"

#include <charconv>

namespace lumen {

namespace {

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::vector<ConfigKey> dataset_schema() {
  const synth::DatasetConfig d;
  return {
      {"scenes", std::to_string(d.scenes), "number of tube scenes (split into train/val/test)"},
      {"poses", std::to_string(d.poses), "camera poses per scene trajectory"},
      {"val_fraction", fmt(d.val_fraction), "fraction of scenes held out for validation"},
      {"test_fraction", fmt(d.test_fraction), "fraction of scenes held out for testing"},
      {"data_seed", std::to_string(d.seed), "seed of the synthetic dataset"},
      {"axial_steps", std::to_string(d.axial_steps), "mesh rings along the tube"},
      {"radial_steps", std::to_string(d.radial_steps), "mesh vertices per ring"},
      {"fov", fmt(d.fov), "camera field of view in degrees"},
      {"opacity", fmt(d.opacity), "opacity of the green missed-surface overlay"},
      {"tube_length", fmt(d.tube_length), "tube length"},
      {"tube_radius", fmt(d.tube_radius), "tube radius"},
      {"fold_amplitude_min", fmt(d.fold_amplitude_min), "lower bound of fold depth (fraction of radius)"},
      {"fold_amplitude_max", fmt(d.fold_amplitude_max), "upper bound of fold depth"},
      {"fold_period_min", fmt(d.fold_period_min), "lower bound of fold spacing"},
      {"fold_period_max", fmt(d.fold_period_max), "upper bound of fold spacing"},
      {"fold_jitter_min", fmt(d.fold_jitter_min), "lower bound of angular fold irregularity"},
      {"fold_jitter_max", fmt(d.fold_jitter_max), "upper bound of angular fold irregularity"},
      {"lateral_jitter", fmt(d.lateral_jitter), "camera offset from the centerline (fraction of radius)"},
      {"direction_jitter", fmt(d.direction_jitter), "camera heading jitter in degrees"},
      {"visibility", "centroid", "visibility test: centroid or pixel"},
  };
}

std::vector<ConfigKey> train_schema() {
  const TrainConfig t;
  return {
      {"image_size", std::to_string(t.image_size), "square image side in pixels (multiple of 4)"},
      {"batch_size", std::to_string(t.batch_size), "images per domain per step"},
      {"iterations", std::to_string(t.iterations), "training steps"},
      {"learning_rate", fmt(t.learning_rate), "Adam learning rate"},
      {"adam_beta1", fmt(t.adam_beta1), "Adam first-moment decay"},
      {"adam_beta2", fmt(t.adam_beta2), "Adam second-moment decay"},
      {"pool_size", std::to_string(t.pool_size), "fake-image history per discriminator (0 disables)"},
      {"lambda_c", fmt(t.weights.lambda_c), "weight of the cycle terms"},
      {"lambda_sls", fmt(t.weights.lambda_sls), "weight of the shared-latent terms"},
      {"lambda_iden", fmt(t.weights.lambda_iden), "weight of the VC identity term"},
      {"alpha", fmt(t.weights.alpha), "minimum distance between two noise draws"},
      {"gan_mode", "log", "adversarial form: log or least_squares"},
      {"seed", std::to_string(t.seed), "seed of initialisation, sampling and noise"},
      {"checkpoint_every", std::to_string(t.checkpoint_every), "steps between checkpoints (0: final only)"},
      {"base_channels", std::to_string(t.model.base_channels), "generator stem width; the latent has 4x this"},
      {"residual_blocks", std::to_string(t.model.residual_blocks), "residual blocks per encoder and per decoder"},
      {"noise_dim", std::to_string(t.model.noise_dim), "noise vector length"},
      {"disc_channels", std::to_string(t.model.disc_channels), "discriminator first-layer width"},
      {"disc_layers", std::to_string(t.model.disc_layers), "stride-2 stages per discriminator"},
  };
}

std::vector<ConfigKey> eval_schema() {
  return {{"tau", "0.2", "green-dominance threshold for missed-surface pixels"}};
}

std::vector<ConfigKey> full_schema() {
  auto all = dataset_schema();
  for (auto& k : train_schema()) all.push_back(k);
  for (auto& k : eval_schema()) all.push_back(k);
  return all;
}

synth::DatasetConfig dataset_config(const KeyValueConfig& kv) {
  synth::DatasetConfig d;
  d.scenes = static_cast<int>(kv.get_int("scenes"));
  d.poses = static_cast<int>(kv.get_int("poses"));
  d.val_fraction = kv.get_double("val_fraction");
  d.test_fraction = kv.get_double("test_fraction");
  d.image_size = static_cast<int>(kv.get_int("image_size"));
  d.seed = kv.get_u64("data_seed");
  d.axial_steps = static_cast<int>(kv.get_int("axial_steps"));
  d.radial_steps = static_cast<int>(kv.get_int("radial_steps"));
  d.fov = kv.get_double("fov");
  d.opacity = kv.get_double("opacity");
  d.tube_length = kv.get_double("tube_length");
  d.tube_radius = kv.get_double("tube_radius");
  d.fold_amplitude_min = kv.get_double("fold_amplitude_min");
  d.fold_amplitude_max = kv.get_double("fold_amplitude_max");
  d.fold_period_min = kv.get_double("fold_period_min");
  d.fold_period_max = kv.get_double("fold_period_max");
  d.fold_jitter_min = kv.get_double("fold_jitter_min");
  d.fold_jitter_max = kv.get_double("fold_jitter_max");
  d.lateral_jitter = kv.get_double("lateral_jitter");
  d.direction_jitter = kv.get_double("direction_jitter");
  const std::string& vis = kv.get("visibility");
  if (vis == "centroid")
    d.visibility = synth::VisibilityMode::centroid;
  else if (vis == "pixel")
    d.visibility = synth::VisibilityMode::pixel;
  else
    throw ConfigError("visibility must be 'centroid' or 'pixel', got '" + vis + "'");
  d.validate();
  return d;
}

void TrainConfig::validate() const {
  if (image_size < 8 || image_size % 4 != 0) throw ConfigError("image_size must be a multiple of 4 and >= 8");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (iterations <= 0) throw ConfigError("iterations must be > 0");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (pool_size < 0) throw ConfigError("pool_size must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (model.base_channels < 1 || model.residual_blocks < 0 || model.noise_dim < 1 || model.disc_channels < 1 ||
      model.disc_layers < 1)
    throw ConfigError("model widths and depths must be positive");
  weights.validate();
}

TrainConfig TrainConfig::from(const KeyValueConfig& kv) {
  TrainConfig t;
  t.image_size = static_cast<int>(kv.get_int("image_size"));
  t.batch_size = static_cast<int>(kv.get_int("batch_size"));
  t.iterations = kv.get_int("iterations");
  t.learning_rate = kv.get_double("learning_rate");
  t.adam_beta1 = kv.get_double("adam_beta1");
  t.adam_beta2 = kv.get_double("adam_beta2");
  t.pool_size = static_cast<int>(kv.get_int("pool_size"));
  t.weights.lambda_c = kv.get_double("lambda_c");
  t.weights.lambda_sls = kv.get_double("lambda_sls");
  t.weights.lambda_iden = kv.get_double("lambda_iden");
  t.weights.alpha = kv.get_double("alpha");
  const std::string& mode = kv.get("gan_mode");
  if (mode == "log")
    t.gan_mode = GanMode::log;
  else if (mode == "least_squares")
    t.gan_mode = GanMode::least_squares;
  else
    throw ConfigError("gan_mode must be 'log' or 'least_squares', got '" + mode + "'");
  t.seed = kv.get_u64("seed");
  t.checkpoint_every = kv.get_int("checkpoint_every");
  t.model.base_channels = kv.get_int("base_channels");
  t.model.residual_blocks = kv.get_int("residual_blocks");
  t.model.noise_dim = kv.get_int("noise_dim");
  t.model.disc_channels = kv.get_int("disc_channels");
  t.model.disc_layers = kv.get_int("disc_layers");
  t.validate();
  return t;
}

KeyValueConfig TrainConfig::to_config() const {
  KeyValueConfig kv(train_schema());
  kv.set("image_size", std::to_string(image_size));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("iterations", std::to_string(iterations));
  kv.set("learning_rate", fmt(learning_rate));
  kv.set("adam_beta1", fmt(adam_beta1));
  kv.set("adam_beta2", fmt(adam_beta2));
  kv.set("pool_size", std::to_string(pool_size));
  kv.set("lambda_c", fmt(weights.lambda_c));
  kv.set("lambda_sls", fmt(weights.lambda_sls));
  kv.set("lambda_iden", fmt(weights.lambda_iden));
  kv.set("alpha", fmt(weights.alpha));
  kv.set("gan_mode", gan_mode == GanMode::log ? "log" : "least_squares");
  kv.set("seed", std::to_string(seed));
  kv.set("checkpoint_every", std::to_string(checkpoint_every));
  kv.set("base_channels", std::to_string(model.base_channels));
  kv.set("residual_blocks", std::to_string(model.residual_blocks));
  kv.set("noise_dim", std::to_string(model.noise_dim));
  kv.set("disc_channels", std::to_string(model.disc_channels));
  kv.set("disc_layers", std::to_string(model.disc_layers));
  return kv;
}

std::string TrainConfig::hash() const { return to_config().hash({"iterations", "checkpoint_every"}); }

}  // namespace lumen
