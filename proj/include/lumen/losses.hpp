#pragma once

// Loss terms of the translation objective. Every L1 norm is the mean absolute
// difference over all elements, so the weights do not depend on resolution.

#include "lumen/model.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace lumen {

struct LossWeights {
  double lambda_c = 10.0;
  double lambda_sls = 1.0;
  double lambda_iden = 1.0;
  double alpha = 0.1;  // minimum mean-L1 distance between two noise draws

  void validate() const {
    if (lambda_c < 0 || lambda_sls < 0 || lambda_iden < 0 || alpha < 0)
      throw ConfigError("loss weights must be non-negative");
  }
};

enum class GanMode { log, least_squares };

inline constexpr double kLogEps = 1e-7;

/// Generator-phase loss values of one training step.
struct LossReport {
  double cyc = 0, excyc = 0, sls_vc = 0, sls_oc = 0, iden = 0, dir = 0, gan_oc = 0, noise = 0, total = 0;

  static constexpr std::array<std::string_view, 9> names{"cyc", "excyc",  "sls_vc", "sls_oc", "iden",
                                                         "dir", "gan_oc", "noise",  "total"};

  std::array<double, 9> values() const { return {cyc, excyc, sls_vc, sls_oc, iden, dir, gan_oc, noise, total}; }

  double translation(const LossWeights& w) const {
    return w.lambda_c * (excyc + cyc) + w.lambda_sls * (sls_vc + sls_oc) + w.lambda_iden * iden;
  }
  double adversarial() const { return dir + gan_oc; }
  double recomputed_total(const LossWeights& w) const { return translation(w) + adversarial() + noise; }

  static std::string csv_header();
  std::string csv_row(long step) const;
};

enum class Domain { oc, vc };

/// Domain of an image from its provenance label: raw batches are "oc"/"vc",
/// generator outputs are "G_oc(...)"/"G_vc(...)". Unlabelled images give nullopt.
inline std::optional<Domain> domain_of_label(std::string_view label) {
  if (label == "oc" || label.starts_with("G_oc(")) return Domain::oc;
  if (label == "vc" || label.starts_with("G_vc(")) return Domain::vc;
  return std::nullopt;
}

template <typename Scalar>
void require_domain(const Var<Scalar>& image, Domain want, const char* what) {
  const auto d = domain_of_label(image.label());
  if (d && *d != want)
    throw ConfigError(std::string(what) + ": image '" + image.label() + "' is in the wrong domain");
}

/// mean |y - y_rec|.
template <typename Scalar>
Var<Scalar> cycle_loss(const Image<Scalar>& y, const Image<Scalar>& y_reconstructed) {
  return mean_abs_diff(y, y_reconstructed);
}

/// mean |G_b(y) - G_b(G_a(G_b(y)))|, compared in G_b's output domain.
template <typename Scalar, typename GenA, typename GenB>
Var<Scalar> extended_cycle_loss(GenA&& g_a, GenB&& g_b, const Image<Scalar>& y) {
  const Image<Scalar> common = g_b(y);
  return mean_abs_diff(common, g_b(g_a(common)));
}

/// mean |En_b(y) - En_a(G_b(y))|.
template <typename Scalar, typename EnB, typename GenB, typename EnA>
Var<Scalar> shared_latent_loss(EnB&& en_b, GenB&& g_b, EnA&& en_a, const Image<Scalar>& y) {
  return mean_abs_diff(en_b(y), en_a(g_b(y)));
}

/// mean |G_vc(y_vc) - y_vc|. Only ever applied to VC-domain inputs.
template <typename Scalar, typename GenVc>
Var<Scalar> identity_loss(GenVc&& g_vc, const Image<Scalar>& y_vc) {
  require_domain(y_vc, Domain::vc, "identity_loss");
  return mean_abs_diff(g_vc(y_vc), y_vc);
}

template <typename Scalar>
struct TranslationTerms {
  Var<Scalar> excyc;   // excyc(G_oc, G_vc, I_oc)
  Var<Scalar> cyc;     // cyc(G_vc, G_oc, I_vc)
  Var<Scalar> sls_vc;  // SLS(En_oc, G_oc, En_vc, I_vc)
  Var<Scalar> sls_oc;  // SLS(En_vc, G_vc, En_oc, I_oc)
  Var<Scalar> iden;    // iden(I_vc)
};

/// lambda_c (excyc + cyc) + lambda_sls (sls_vc + sls_oc) + lambda_iden iden.
template <typename Scalar>
Var<Scalar> translation_loss(const LossWeights& w, const TranslationTerms<Scalar>& t) {
  w.validate();
  const auto c = static_cast<Scalar>(w.lambda_c);
  const auto s = static_cast<Scalar>(w.lambda_sls);
  return weighted_sum<Scalar>({t.excyc, t.cyc, t.sls_vc, t.sls_oc, t.iden},
                              {c, c, s, s, static_cast<Scalar>(w.lambda_iden)});
}

/// Discriminator objective on already-computed scores.
template <typename Scalar>
Var<Scalar> gan_discriminator_from_scores(const PatchScores<Scalar>& real, const PatchScores<Scalar>& fake,
                                          GanMode mode = GanMode::log) {
  if (mode == GanMode::least_squares)
    return weighted_sum<Scalar>({mean_sq_to(real, Scalar(1)), mean_sq_to(fake, Scalar(0))}, {Scalar(1), Scalar(1)});
  const auto eps = static_cast<Scalar>(kLogEps);
  return weighted_sum<Scalar>({mean_neg_log(real, eps), mean_neg_log1m(fake, eps)}, {Scalar(1), Scalar(1)});
}

/// Non-saturating generator objective on already-computed scores of fakes.
template <typename Scalar>
Var<Scalar> gan_generator_from_scores(const PatchScores<Scalar>& fake, GanMode mode = GanMode::log) {
  if (mode == GanMode::least_squares) return mean_sq_to(fake, Scalar(1));
  return mean_neg_log(fake, static_cast<Scalar>(kLogEps));
}

/// -mean log D(real) - mean log(1 - D(fake)); fakes are detached.
template <typename Scalar, typename Disc>
Var<Scalar> gan_loss_discriminator(Disc&& d, const Image<Scalar>& real, const Image<Scalar>& fake,
                                   GanMode mode = GanMode::log) {
  if (real.shape() != fake.shape())
    throw ConfigError("gan_loss_discriminator: shape mismatch " + real.shape().str() + " vs " + fake.shape().str());
  return gan_discriminator_from_scores(d(real), d(fake.detach()), mode);
}

/// -mean log D(fake).
template <typename Scalar, typename Disc>
Var<Scalar> gan_loss_generator(Disc&& d, const Image<Scalar>& fake, GanMode mode = GanMode::log) {
  return gan_generator_from_scores(d(fake), mode);
}

/// An (OC-domain, VC-domain) pair as seen by the directional discriminator.
template <typename Scalar>
struct OcVcPair {
  Image<Scalar> oc;
  Image<Scalar> vc;
};

template <typename Scalar, typename DirDisc>
PatchScores<Scalar> score_pair(DirDisc&& d_dir, const OcVcPair<Scalar>& pair) {
  require_domain(pair.oc, Domain::oc, "dir_loss (first slot)");
  require_domain(pair.vc, Domain::vc, "dir_loss (second slot)");
  if (pair.oc.shape() != pair.vc.shape())
    throw ConfigError("dir_loss: pair shape mismatch " + pair.oc.shape().str() + " vs " + pair.vc.shape().str());
  return d_dir(pair.oc, pair.vc);
}

/// Discriminator side of the directional loss. `forward` pairs are
/// (y, G_vc(y)) for y ~ OC; `backward` pairs are (G_oc(x, z), x) for x ~ VC.
/// Both are detached.
template <typename Scalar, typename DirDisc>
Var<Scalar> dir_loss_discriminator(DirDisc&& d_dir, const OcVcPair<Scalar>& forward, const OcVcPair<Scalar>& backward,
                                   GanMode mode = GanMode::log) {
  const OcVcPair<Scalar> f{forward.oc.detach(), forward.vc.detach()};
  const OcVcPair<Scalar> b{backward.oc.detach(), backward.vc.detach()};
  return gan_discriminator_from_scores(score_pair(d_dir, f), score_pair(d_dir, b), mode);
}

/// Generator side: labels swapped, so the generators push D_dir to confuse the
/// two translation directions.
template <typename Scalar, typename DirDisc>
Var<Scalar> dir_loss_generator(DirDisc&& d_dir, const OcVcPair<Scalar>& forward, const OcVcPair<Scalar>& backward,
                               GanMode mode = GanMode::log) {
  return gan_discriminator_from_scores(score_pair(d_dir, backward), score_pair(d_dir, forward), mode);
}

template <typename Scalar>
Var<Scalar> adversarial_loss(const Var<Scalar>& dir, const Var<Scalar>& gan_oc) {
  return weighted_sum<Scalar>({dir, gan_oc}, {Scalar(1), Scalar(1)});
}

/// Mean-L1 distance between two decodings of one latent under different noise.
template <typename Scalar, typename DecOc>
Var<Scalar> noise_distance(DecOc&& de_oc, const LatentCode<Scalar>& l, const NoiseVector<Scalar>& z1,
                           const NoiseVector<Scalar>& z2) {
  return mean_abs_diff(de_oc(l, z1), de_oc(l, z2));
}

/// max(0, alpha - ||De(l, z1) - De(l, z2)||): zero once two draws differ by at
/// least alpha, alpha when they coincide.
template <typename Scalar>
Var<Scalar> noise_loss_from_distance(const Var<Scalar>& distance, double alpha) {
  return hinge_below(distance, static_cast<Scalar>(alpha));
}

template <typename Scalar, typename DecOc>
Var<Scalar> noise_loss(DecOc&& de_oc, const LatentCode<Scalar>& l, const NoiseVector<Scalar>& z1,
                       const NoiseVector<Scalar>& z2, double alpha) {
  return noise_loss_from_distance(noise_distance(de_oc, l, z1, z2), alpha);
}

/// trans + adv + noise.
template <typename Scalar>
Var<Scalar> total_loss(const Var<Scalar>& trans, const Var<Scalar>& adv, const Var<Scalar>& noise) {
  return weighted_sum<Scalar>({trans, adv, noise}, {Scalar(1), Scalar(1), Scalar(1)});
}

}  // namespace lumen
