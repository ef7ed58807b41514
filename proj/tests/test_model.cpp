#include "doctest.h"
#include "support/checks.hpp"

#include "lumen/model.hpp"

using namespace lumen;

namespace {

// Frozen regression constants for the default widths (stem 64, 5 + 5 residual blocks).
constexpr Index kEncoderParams = 6'279'296;
constexpr Index kVcDecoderParams = 6'279'043;
constexpr Index kNoiseProjectionParams = 67'840;
constexpr Index kGvcParams = 12'558'339;
constexpr Index kGocParams = 12'626'179;
constexpr Index kDomainDiscParams = 2'764'737;
constexpr Index kDirectionalDiscParams = 2'767'809;

Index conv_params(Index cin, Index cout, Index k) { return cin * cout * k * k + cout; }

Image<float> random_image(RandomStream& rng, Index n, Index size, const std::string& label) {
  Tensor<float> t(Shape{n, 3, size, size});
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(rng.uniform(-1, 1));
  return Image<float>(std::move(t), false, label);
}

ModelConfig small() {
  ModelConfig c;
  c.base_channels = 8;
  c.residual_blocks = 2;
  c.disc_channels = 8;
  return c;
}

}  // namespace

TEST_CASE("parameter counts of the default architecture") {
  const ModelConfig cfg;
  const Index c = cfg.base_channels;
  const Index block = 2 * conv_params(4 * c, 4 * c, 3);
  const Index encoder = conv_params(3, c, 7) + conv_params(c, 2 * c, 3) + conv_params(2 * c, 4 * c, 3) + 5 * block;
  const Index decoder = 5 * block + conv_params(4 * c, 2 * c, 3) + conv_params(2 * c, c, 3) + conv_params(c, 3, 7);
  CHECK(encoder == kEncoderParams);
  CHECK(decoder == kVcDecoderParams);
  CHECK(conv_params(4 * c + 8, 4 * c, 1) == kNoiseProjectionParams);

  RandomStream rng(1);
  Generator<float> g_vc{Encoder<float>(cfg, "en_vc", rng), Decoder<float>(cfg, "de_vc", 0, rng)};
  Generator<float> g_oc{Encoder<float>(cfg, "en_oc", rng), Decoder<float>(cfg, "de_oc", cfg.noise_dim, rng)};
  CHECK(g_vc.encoder.parameters().count() == kEncoderParams);
  CHECK(g_vc.decoder.parameters().count() == kVcDecoderParams);
  CHECK(g_vc.parameter_count() == kGvcParams);
  CHECK(g_oc.parameter_count() == kGocParams);
  CHECK(kGocParams - kGvcParams == kNoiseProjectionParams);

  Discriminator<float> d_oc(cfg, DiscriminatorKind::domain, "d_oc", rng);
  Discriminator<float> d_dir(cfg, DiscriminatorKind::directional, "d_dir", rng);
  CHECK(d_oc.parameters().count() == kDomainDiscParams);
  CHECK(d_dir.parameters().count() == kDirectionalDiscParams);
}

TEST_CASE("encode / decode shapes") {
  SharedLatentModel<float> m(small(), 3);
  RandomStream rng(4);
  for (Index size : {64, 128}) {
    const auto x = random_image(rng, 1, size, "vc");
    const auto l = encode(m.g_oc.encoder, x);
    CHECK(l.shape() == Shape{1, 32, size / 4, size / 4});
    CHECK(encode(m.g_vc.encoder, x).shape() == l.shape());
    CHECK(decode_vc(m.g_vc.decoder, l).shape() == x.shape());
    CHECK(decode_oc(m.g_oc.decoder, l, sample_noise<float>(rng, 1, 8)).shape() == x.shape());
  }
  CHECK_THROWS_AS(encode(m.g_oc.encoder, random_image(rng, 1, 66, "vc")), ConfigError);
  const Var<float> wrong_latent(Tensor<float>(Shape{1, 16, 16, 16}));
  CHECK_THROWS_AS(decode_vc(m.g_vc.decoder, wrong_latent), ConfigError);
  const auto l = encode(m.g_oc.encoder, random_image(rng, 1, 64, "vc"));
  CHECK_THROWS_AS(decode_oc(m.g_oc.decoder, l, sample_noise<float>(rng, 1, 3)), ConfigError);
}

TEST_CASE("round trip preserves shape and generator outputs stay in [-1, 1]") {
  SharedLatentModel<float> m(small(), 5);
  RandomStream rng(6);
  const auto x = random_image(rng, 2, 32, "vc");
  const auto oc = translate_to_oc(m.g_oc, x, sample_noise<float>(rng, 2, 8));
  const auto back = translate_to_vc(m.g_vc, oc);
  CHECK(back.shape() == x.shape());
  CHECK(oc.value().array().abs().maxCoeff() <= 1.0f);
  CHECK(back.value().array().abs().maxCoeff() <= 1.0f);
}

TEST_CASE("determinism: pure functions of parameters, latent and noise") {
  SharedLatentModel<float> a(small(), 9), b(small(), 9);
  RandomStream rng(10);
  const auto x = random_image(rng, 1, 32, "oc");
  CHECK(translate_to_vc(a.g_vc, x).value().array().isApprox(translate_to_vc(a.g_vc, x).value().array(), 0.0f));
  CHECK((translate_to_vc(a.g_vc, x).value().array() == translate_to_vc(b.g_vc, x).value().array()).all());
  const auto l = encode(a.g_oc.encoder, x);
  RandomStream n1(3), n2(3);
  const auto z1 = sample_noise<float>(n1, 1, 8);
  const auto z2 = sample_noise<float>(n2, 1, 8);
  CHECK((z1.value().array() == z2.value().array()).all());
  CHECK((decode_oc(a.g_oc.decoder, l, z1).value().array() == decode_oc(a.g_oc.decoder, l, z2).value().array()).all());
  const auto z3 = sample_noise<float>(n1, 1, 8);
  CHECK((decode_oc(a.g_oc.decoder, l, z1).value().array() != decode_oc(a.g_oc.decoder, l, z3).value().array()).any());
}

TEST_CASE("discriminators: 6x6 patch map of scores in (0, 1)") {
  ModelConfig cfg;
  cfg.base_channels = 4;
  cfg.disc_channels = 8;
  SharedLatentModel<float> m(cfg, 12);
  RandomStream rng(13);
  const auto oc = random_image(rng, 1, 64, "oc");
  const auto vc = random_image(rng, 1, 64, "vc");
  const auto s = discriminate(m.d_oc, oc);
  CHECK(s.shape() == Shape{1, 1, 6, 6});
  CHECK(s.value().array().minCoeff() > 0.0f);
  CHECK(s.value().array().maxCoeff() < 1.0f);
  const auto sd = discriminate_dir(m.d_dir, oc, vc);
  CHECK(sd.shape() == Shape{1, 1, 6, 6});
  CHECK(sd.value().array().minCoeff() > 0.0f);
  CHECK(sd.value().array().maxCoeff() < 1.0f);
  CHECK((sd.value().array() != discriminate_dir(m.d_dir, vc, oc).value().array()).any());
  CHECK_THROWS_AS(discriminate_dir(m.d_dir, oc, random_image(rng, 1, 32, "vc")), ConfigError);
  CHECK_THROWS_AS(discriminate(m.d_dir, oc), ConfigError);
  CHECK_THROWS_AS(discriminate_dir(m.d_oc, oc, vc), ConfigError);
}

TEST_CASE("noise draws follow the stream") {
  RandomStream a(77), b(77);
  const auto za = sample_noise<double>(a, 4, 8);
  const auto zb = sample_noise<double>(b, 4, 8);
  CHECK((za.value().array() == zb.value().array()).all());
  CHECK(a == b);
  const double mean = za.value().array().mean();
  CHECK(std::abs(mean) < 1.0);
}

TEST_CASE("random stream state round trip") {
  RandomStream a(123);
  for (int i = 0; i < 10; ++i) a.normal();
  RandomStream b;
  b.set_state(a.state());
  CHECK(a == b);
  CHECK(a.next_u64() == b.next_u64());
  CHECK_THROWS(b.set_state("garbage"));
  double sum = 0, sq = 0;
  RandomStream c(5);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = c.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}
