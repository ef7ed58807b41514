#pragma once

// Two generators (encoder + decoder each) sharing one latent space, plus the
// OC-domain and directional patch discriminators.
//
//   G_oc = De_oc . En_oc : VC image (+ noise) -> OC image
//   G_vc = De_vc . En_vc : OC image          -> VC image
//
// Encoder subscripts name the parent generator, not the input domain.

#include "lumen/nn.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lumen {

struct ModelConfig {
  Index base_channels = 64;  // width of the 7x7 stem; the latent has 4x this
  Index residual_blocks = 5;  // per encoder and per decoder
  Index noise_dim = 8;
  Index disc_channels = 64;
  Index disc_layers = 3;  // stride-2 stages of the patch discriminator

  Index latent_channels() const { return 4 * base_channels; }
  bool operator==(const ModelConfig&) const = default;
};

template <typename Scalar>
using Image = Var<Scalar>;  // (N, 3, H, W), values in [-1, 1]
template <typename Scalar>
using LatentCode = Var<Scalar>;  // (N, 4 * base_channels, H/4, W/4)
template <typename Scalar>
using NoiseVector = Var<Scalar>;  // (N, noise_dim, 1, 1)
template <typename Scalar>
using PatchScores = Var<Scalar>;  // (N, 1, h, w), values in (0, 1)

template <typename Scalar>
class Encoder {
 public:
  Encoder() = default;
  Encoder(const ModelConfig& cfg, const std::string& name, RandomStream& rng) : latent_channels_(cfg.latent_channels()) {
    const Index c = cfg.base_channels;
    stem_ = nn::Conv<Scalar>(params_, name + ".stem", 3, c, 7, 1, 0, rng);
    down1_ = nn::Conv<Scalar>(params_, name + ".down1", c, 2 * c, 3, 2, 1, rng);
    down2_ = nn::Conv<Scalar>(params_, name + ".down2", 2 * c, 4 * c, 3, 2, 1, rng);
    for (Index i = 0; i < cfg.residual_blocks; ++i)
      blocks_.emplace_back(params_, name + ".res" + std::to_string(i), 4 * c, rng);
  }

  LatentCode<Scalar> operator()(const Image<Scalar>& image) const {
    const Shape s = image.shape();
    if (s.c != 3) throw ConfigError("encode: expected 3 channels, got " + s.str());
    if (s.h % 4 != 0 || s.w % 4 != 0 || s.h < 8 || s.w < 8)
      throw ConfigError("encode: image dims must be multiples of 4 (at least 8), got " + s.str());
    auto h = relu(instance_norm(stem_(reflection_pad(image, Index(3)))));
    h = relu(instance_norm(down1_(h)));
    h = relu(instance_norm(down2_(h)));
    for (const auto& b : blocks_) h = b(h);
    return h;
  }

  Index latent_channels() const { return latent_channels_; }
  ParameterSet<Scalar>& parameters() { return params_; }
  const ParameterSet<Scalar>& parameters() const { return params_; }

 private:
  ParameterSet<Scalar> params_;
  Index latent_channels_ = 0;
  nn::Conv<Scalar> stem_, down1_, down2_;
  std::vector<nn::ResidualBlock<Scalar>> blocks_;
};

/// Maps a latent code back to an image. With noise_dim > 0 the decoder takes a
/// noise vector, broadcast over the latent grid, concatenated and projected
/// back to the latent width (1x1 conv + ReLU) before the residual blocks.
template <typename Scalar>
class Decoder {
 public:
  Decoder() = default;
  Decoder(const ModelConfig& cfg, const std::string& name, Index noise_dim, RandomStream& rng)
      : latent_channels_(cfg.latent_channels()), noise_dim_(noise_dim) {
    const Index c = cfg.base_channels;
    if (noise_dim_ > 0) project_ = nn::Conv<Scalar>(params_, name + ".noise_proj", 4 * c + noise_dim_, 4 * c, 1, 1, 0, rng);
    for (Index i = 0; i < cfg.residual_blocks; ++i)
      blocks_.emplace_back(params_, name + ".res" + std::to_string(i), 4 * c, rng);
    up1_ = nn::UpConv<Scalar>(params_, name + ".up1", 4 * c, 2 * c, rng);
    up2_ = nn::UpConv<Scalar>(params_, name + ".up2", 2 * c, c, rng);
    head_ = nn::Conv<Scalar>(params_, name + ".head", c, 3, 7, 1, 0, rng);
  }

  Image<Scalar> operator()(const LatentCode<Scalar>& latent, const NoiseVector<Scalar>& z = {}) const {
    const Shape s = latent.shape();
    if (s.c != latent_channels_)
      throw ConfigError("decode: latent has " + std::to_string(s.c) + " channels, expected " +
                        std::to_string(latent_channels_));
    Var<Scalar> h = latent;
    if (noise_dim_ > 0) {
      if (!z.defined()) throw ConfigError("decode: this decoder needs a noise vector");
      const Shape zs = z.shape();
      if (zs != Shape{s.n, noise_dim_, 1, 1})
        throw ConfigError("decode: noise shape " + zs.str() + " does not match latent " + s.str());
      h = relu(project_(concat_channels(h, broadcast_spatial(z, s.h, s.w))));
    } else if (z.defined()) {
      throw ConfigError("decode: this decoder takes no noise input");
    }
    for (const auto& b : blocks_) h = b(h);
    h = relu(instance_norm(up1_(h)));
    h = relu(instance_norm(up2_(h)));
    return tanh(head_(reflection_pad(h, Index(3))));
  }

  Index noise_dim() const { return noise_dim_; }
  ParameterSet<Scalar>& parameters() { return params_; }
  const ParameterSet<Scalar>& parameters() const { return params_; }

 private:
  ParameterSet<Scalar> params_;
  Index latent_channels_ = 0;
  Index noise_dim_ = 0;
  nn::Conv<Scalar> project_;
  std::vector<nn::ResidualBlock<Scalar>> blocks_;
  nn::UpConv<Scalar> up1_, up2_;
  nn::Conv<Scalar> head_;
};

template <typename Scalar>
struct Generator {
  Encoder<Scalar> encoder;
  Decoder<Scalar> decoder;

  Index parameter_count() const { return encoder.parameters().count() + decoder.parameters().count(); }
};

enum class DiscriminatorKind { domain, directional };

/// Patch discriminator: k4 convs, `disc_layers` stride-2 stages, one stride-1
/// stage, then a 1-channel k4 head with a sigmoid. Three stages give a 70x70
/// receptive field and a 6x6 map on 64x64 inputs.
template <typename Scalar>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const ModelConfig& cfg, DiscriminatorKind kind, const std::string& name, RandomStream& rng)
      : kind_(kind) {
    Index in = kind == DiscriminatorKind::domain ? 3 : 6;
    Index width = cfg.disc_channels;
    for (Index i = 0; i < cfg.disc_layers; ++i) {
      layers_.emplace_back(params_, name + ".conv" + std::to_string(i), in, width, 4, 2, 1, rng);
      in = width;
      width = std::min<Index>(width * 2, cfg.disc_channels * 8);
    }
    layers_.emplace_back(params_, name + ".conv" + std::to_string(cfg.disc_layers), in, width, 4, 1, 1, rng);
    head_ = nn::Conv<Scalar>(params_, name + ".head", width, 1, 4, 1, 1, rng);
  }

  PatchScores<Scalar> operator()(const Var<Scalar>& x) const {
    const Index want = input_channels();
    if (x.shape().c != want)
      throw ConfigError("discriminate: expected " + std::to_string(want) + " channels, got " + x.shape().str());
    Var<Scalar> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i](h);
      if (i > 0) h = instance_norm(h);
      h = leaky_relu(h, Scalar(0.2));
    }
    return sigmoid(head_(h));
  }

  DiscriminatorKind kind() const { return kind_; }
  Index input_channels() const { return kind_ == DiscriminatorKind::domain ? 3 : 6; }
  ParameterSet<Scalar>& parameters() { return params_; }
  const ParameterSet<Scalar>& parameters() const { return params_; }

 private:
  DiscriminatorKind kind_ = DiscriminatorKind::domain;
  ParameterSet<Scalar> params_;
  std::vector<nn::Conv<Scalar>> layers_;
  nn::Conv<Scalar> head_;
};

/// The four networks of the shared-latent translation model.
template <typename Scalar>
class SharedLatentModel {
 public:
  SharedLatentModel(const ModelConfig& cfg, std::uint64_t seed) : config_(cfg) {
    RandomStream rng(seed);
    g_oc.encoder = Encoder<Scalar>(cfg, "en_oc", rng);
    g_oc.decoder = Decoder<Scalar>(cfg, "de_oc", cfg.noise_dim, rng);
    g_vc.encoder = Encoder<Scalar>(cfg, "en_vc", rng);
    g_vc.decoder = Decoder<Scalar>(cfg, "de_vc", 0, rng);
    d_dir = Discriminator<Scalar>(cfg, DiscriminatorKind::directional, "d_dir", rng);
    d_oc = Discriminator<Scalar>(cfg, DiscriminatorKind::domain, "d_oc", rng);
  }

  const ModelConfig& config() const { return config_; }

  /// All parameter sets in a fixed order: en_oc, de_oc, en_vc, de_vc, d_dir, d_oc.
  std::vector<ParameterSet<Scalar>*> parameter_sets() {
    return {&g_oc.encoder.parameters(), &g_oc.decoder.parameters(), &g_vc.encoder.parameters(),
            &g_vc.decoder.parameters(), &d_dir.parameters(),        &d_oc.parameters()};
  }
  std::vector<ParameterSet<Scalar>*> generator_sets() {
    return {&g_oc.encoder.parameters(), &g_oc.decoder.parameters(), &g_vc.encoder.parameters(),
            &g_vc.decoder.parameters()};
  }
  std::vector<ParameterSet<Scalar>*> discriminator_sets() { return {&d_dir.parameters(), &d_oc.parameters()}; }

  Generator<Scalar> g_oc;
  Generator<Scalar> g_vc;
  Discriminator<Scalar> d_dir;
  Discriminator<Scalar> d_oc;

 private:
  ModelConfig config_;
};

template <typename Scalar>
LatentCode<Scalar> encode(const Encoder<Scalar>& encoder, const Image<Scalar>& image) {
  return encoder(image);
}

template <typename Scalar>
Image<Scalar> decode_vc(const Decoder<Scalar>& decoder, const LatentCode<Scalar>& latent) {
  return decoder(latent);
}

template <typename Scalar>
Image<Scalar> decode_oc(const Decoder<Scalar>& decoder, const LatentCode<Scalar>& latent, const NoiseVector<Scalar>& z) {
  if (!z.defined()) throw ConfigError("decode_oc: missing noise vector");
  return decoder(latent, z);
}

template <typename Scalar>
Image<Scalar> translate_to_oc(const Generator<Scalar>& g_oc, const Image<Scalar>& image_vc, const NoiseVector<Scalar>& z) {
  return decode_oc(g_oc.decoder, encode(g_oc.encoder, image_vc), z);
}

template <typename Scalar>
Image<Scalar> translate_to_vc(const Generator<Scalar>& g_vc, const Image<Scalar>& image_oc) {
  return decode_vc(g_vc.decoder, encode(g_vc.encoder, image_oc));
}

template <typename Scalar>
PatchScores<Scalar> discriminate(const Discriminator<Scalar>& d, const Image<Scalar>& image) {
  if (d.kind() != DiscriminatorKind::domain) throw ConfigError("discriminate: needs a domain discriminator");
  return d(image);
}

/// Scores an (OC, VC) pair; the OC-domain image always comes first.
template <typename Scalar>
PatchScores<Scalar> discriminate_dir(const Discriminator<Scalar>& d, const Image<Scalar>& image_oc,
                                     const Image<Scalar>& image_vc) {
  if (d.kind() != DiscriminatorKind::directional)
    throw ConfigError("discriminate_dir: needs a directional discriminator");
  const Shape a = image_oc.shape();
  const Shape b = image_vc.shape();
  if (a != b) throw ConfigError("discriminate_dir: pair shape mismatch " + a.str() + " vs " + b.str());
  return d(concat_channels(image_oc, image_vc));
}

template <typename Scalar>
NoiseVector<Scalar> sample_noise(RandomStream& rng, Index batch, Index dim) {
  Tensor<Scalar> t(Shape{batch, dim, 1, 1});
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(rng.normal());
  return NoiseVector<Scalar>(std::move(t), false, "z");
}

}  // namespace lumen
