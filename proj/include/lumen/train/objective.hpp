#pragma once

// Wiring of the full objective onto one OC batch and one VC batch:
//   trans = lambda_c [excyc(G_oc, G_vc, I_oc) + cyc(G_vc, G_oc, I_vc)]
//         + lambda_sls [SLS(En_oc, G_oc, En_vc, I_vc) + SLS(En_vc, G_vc, En_oc, I_oc)]
//         + lambda_iden iden(I_vc)
//   adv   = dir(G_oc, G_vc, D_dir, I_oc, I_vc) + GAN(D_oc; real I_oc, fake G_oc(G_vc(I_oc)))
//   noise = max(0, alpha - |De_oc(l, z1) - De_oc(l, z2)|)

#include "lumen/losses.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace lumen::train {

/// One recorded network invocation: which loss term asked, which network ran,
/// and the provenance label of its input.
struct Invocation {
  std::string term;
  std::string network;
  std::string input;
  std::string second_input;  // D_dir only: the VC slot
};

struct InvocationAudit {
  std::vector<Invocation> calls;

  std::vector<Invocation> for_term(const std::string& term) const {
    std::vector<Invocation> out;
    for (const auto& c : calls)
      if (c.term == term) out.push_back(c);
    return out;
  }
};

/// Memoizing, labelling front end to the four networks. Each generator runs
/// once per distinct input node; G_oc draws a fresh noise vector for every
/// forward pass it actually computes.
template <typename Scalar>
class Invocations {
 public:
  using NoiseSource = std::function<NoiseVector<Scalar>(Index batch)>;

  Invocations(SharedLatentModel<Scalar>& model, NoiseSource noise, InvocationAudit* audit = nullptr)
      : model_(model), noise_(std::move(noise)), audit_(audit) {}

  void set_term(std::string term) { term_ = std::move(term); }

  LatentCode<Scalar> en_oc(const Image<Scalar>& x) { return encode_cached(en_oc_, model_.g_oc.encoder, "En_oc", x); }
  LatentCode<Scalar> en_vc(const Image<Scalar>& x) { return encode_cached(en_vc_, model_.g_vc.encoder, "En_vc", x); }

  Image<Scalar> g_vc(const Image<Scalar>& x) {
    record("G_vc", x.label());
    if (auto it = g_vc_.find(x.node()); it != g_vc_.end()) return it->second;
    Image<Scalar> out = decode_vc(model_.g_vc.decoder, en_vc(x));
    out.set_label("G_vc(" + x.label() + ")");
    g_vc_.emplace(x.node(), out);
    return out;
  }

  Image<Scalar> g_oc(const Image<Scalar>& x) {
    record("G_oc", x.label());
    if (auto it = g_oc_.find(x.node()); it != g_oc_.end()) return it->second;
    const LatentCode<Scalar> l = en_oc(x);
    NoiseVector<Scalar> z = noise_(x.shape().n);
    Image<Scalar> out = decode_oc(model_.g_oc.decoder, l, z);
    out.set_label("G_oc(" + x.label() + ")");
    g_oc_.emplace(x.node(), out);
    g_oc_noise_.emplace(out.node(), z);
    return out;
  }

  Image<Scalar> de_oc(const LatentCode<Scalar>& l, const NoiseVector<Scalar>& z) {
    record("De_oc", l.label());
    return decode_oc(model_.g_oc.decoder, l, z);
  }

  /// The noise vector that produced a cached G_oc output.
  NoiseVector<Scalar> noise_of(const Image<Scalar>& g_oc_output) const { return g_oc_noise_.at(g_oc_output.node()); }
  NoiseVector<Scalar> draw_noise(Index batch) { return noise_(batch); }

  PatchScores<Scalar> d_oc(const Image<Scalar>& x) {
    record("D_oc", x.label());
    return discriminate(model_.d_oc, x);
  }

  PatchScores<Scalar> d_dir(const Image<Scalar>& oc, const Image<Scalar>& vc) {
    record("D_dir", oc.label(), vc.label());
    return discriminate_dir(model_.d_dir, oc, vc);
  }

  SharedLatentModel<Scalar>& model() { return model_; }

 private:
  using Cache = std::map<const Node<Scalar>*, Var<Scalar>>;

  LatentCode<Scalar> encode_cached(Cache& cache, const Encoder<Scalar>& enc, const char* name, const Image<Scalar>& x) {
    record(name, x.label());
    if (auto it = cache.find(x.node()); it != cache.end()) return it->second;
    LatentCode<Scalar> l = encode(enc, x);
    l.set_label(std::string(name) + "(" + x.label() + ")");
    cache.emplace(x.node(), l);
    return l;
  }

  void record(const char* network, const std::string& input, const std::string& second = {}) {
    if (audit_) audit_->calls.push_back({term_, network, input, second});
  }

  SharedLatentModel<Scalar>& model_;
  NoiseSource noise_;
  InvocationAudit* audit_;
  std::string term_;
  Cache en_oc_, en_vc_, g_vc_, g_oc_;
  std::map<const Node<Scalar>*, NoiseVector<Scalar>> g_oc_noise_;
};

/// Generator-phase terms that do not involve a discriminator, plus the
/// translated images the adversarial terms and discriminators consume.
template <typename Scalar>
struct GeneratorPass {
  Image<Scalar> real_oc, real_vc;
  Image<Scalar> fake_vc;  // G_vc(I_oc)
  Image<Scalar> fake_oc;  // G_oc(I_vc, z)
  Image<Scalar> rec_oc;   // G_oc(G_vc(I_oc), z)
  TranslationTerms<Scalar> trans_terms;
  Var<Scalar> trans;
  Var<Scalar> noise_distance;
  Var<Scalar> noise;
};

template <typename Scalar>
GeneratorPass<Scalar> generator_pass(Invocations<Scalar>& inv, const Image<Scalar>& real_oc,
                                     const Image<Scalar>& real_vc, const LossWeights& w) {
  GeneratorPass<Scalar> p;
  p.real_oc = real_oc;
  p.real_vc = real_vc;
  auto g_oc = [&](const Image<Scalar>& x) { return inv.g_oc(x); };
  auto g_vc = [&](const Image<Scalar>& x) { return inv.g_vc(x); };
  auto en_oc = [&](const Image<Scalar>& x) { return inv.en_oc(x); };
  auto en_vc = [&](const Image<Scalar>& x) { return inv.en_vc(x); };

  inv.set_term("excyc");
  p.trans_terms.excyc = extended_cycle_loss(g_oc, g_vc, real_oc);
  inv.set_term("cyc");
  const Image<Scalar> vc_round_trip = g_vc(g_oc(real_vc));
  p.trans_terms.cyc = cycle_loss(real_vc, vc_round_trip);
  inv.set_term("sls_vc");
  p.trans_terms.sls_vc = shared_latent_loss(en_oc, g_oc, en_vc, real_vc);
  inv.set_term("sls_oc");
  p.trans_terms.sls_oc = shared_latent_loss(en_vc, g_vc, en_oc, real_oc);
  inv.set_term("iden");
  p.trans_terms.iden = identity_loss(g_vc, real_vc);
  p.trans = translation_loss(w, p.trans_terms);

  inv.set_term("images");
  p.fake_vc = g_vc(real_oc);
  p.fake_oc = g_oc(real_vc);
  p.rec_oc = g_oc(p.fake_vc);

  // The second noise draw pairs with the one G_oc(I_vc) already used.
  inv.set_term("noise");
  const LatentCode<Scalar> l = en_oc(real_vc);
  const NoiseVector<Scalar> z2 = inv.draw_noise(real_vc.shape().n);
  p.noise_distance = mean_abs_diff(p.fake_oc, inv.de_oc(l, z2));
  p.noise = noise_loss_from_distance(p.noise_distance, w.alpha);
  return p;
}

template <typename Scalar>
struct AdversarialTerms {
  Var<Scalar> dir;
  Var<Scalar> gan_oc;
  Var<Scalar> adv;
};

/// Generator side of the adversarial terms against the current discriminators.
template <typename Scalar>
AdversarialTerms<Scalar> adversarial_terms(Invocations<Scalar>& inv, const GeneratorPass<Scalar>& p, GanMode mode) {
  auto d_dir = [&](const Image<Scalar>& oc, const Image<Scalar>& vc) { return inv.d_dir(oc, vc); };
  auto d_oc = [&](const Image<Scalar>& x) { return inv.d_oc(x); };
  AdversarialTerms<Scalar> a;
  inv.set_term("dir");
  a.dir = dir_loss_generator(d_dir, OcVcPair<Scalar>{p.real_oc, p.fake_vc}, OcVcPair<Scalar>{p.fake_oc, p.real_vc}, mode);
  inv.set_term("gan_oc");
  a.gan_oc = gan_loss_generator(d_oc, p.rec_oc, mode);
  a.adv = adversarial_loss(a.dir, a.gan_oc);
  return a;
}

template <typename Scalar>
LossReport make_report(const GeneratorPass<Scalar>& p, const AdversarialTerms<Scalar>& a, const Var<Scalar>& total) {
  LossReport r;
  r.cyc = p.trans_terms.cyc.item();
  r.excyc = p.trans_terms.excyc.item();
  r.sls_vc = p.trans_terms.sls_vc.item();
  r.sls_oc = p.trans_terms.sls_oc.item();
  r.iden = p.trans_terms.iden.item();
  r.dir = a.dir.item();
  r.gan_oc = a.gan_oc.item();
  r.noise = p.noise.item();
  r.total = total.item();
  return r;
}

}  // namespace lumen::train
