#pragma once

// Shared oracles for the unit tests and the acceptance binary.

#include "lumen/eval/metrics.hpp"
#include "lumen/synth/raycast.hpp"
#include "lumen/synth/visibility.hpp"
#include "lumen/train/objective.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace lumen::checks {

// ---------------------------------------------------------------- loss oracles

struct OracleCase {
  std::string name;
  double got = 0;
  double want = 0;
};

inline Var<double> constant_image(double v, const std::string& label = {}) {
  return Var<double>(Tensor<double>(Shape{1, 3, 2, 2}, v), false, label);
}

inline Var<double> constant_scores(double v) { return Var<double>(Tensor<double>(Shape{1, 1, 2, 2}, v)); }

inline Var<double> scalar(double v) { return Var<double>(Tensor<double>::scalar(v)); }

/// Hand-computed values on 2x2 constant fixtures and stub networks.
inline std::vector<OracleCase> loss_oracle_cases() {
  std::vector<OracleCase> out;
  const double ln2 = std::numbers::ln2;

  out.push_back({"cycle: y == y_rec", cycle_loss(constant_image(0.5), constant_image(0.5)).item(), 0.0});
  out.push_back({"cycle: 0.5 vs 0.3", cycle_loss(constant_image(0.5), constant_image(0.3)).item(), 0.2});
  {
    auto y = constant_image(0.1);
    auto r = constant_image(0.1);
    r.mutable_value()(0, 1, 1, 0) += 1.2;
    out.push_back({"cycle: one element off by 1.2 of 12", cycle_loss(y, r).item(), 0.1});
  }
  {
    // G_b(y) = 0.2 on raw input, G_b(G_a(.)) = 0.5.
    auto g_a = [](const Var<double>&) { return constant_image(-0.7, "a"); };
    auto g_b = [](const Var<double>& x) { return constant_image(x.label() == "a" ? 0.5 : 0.2, "b"); };
    out.push_back({"excyc: stub constants 0.2 / 0.5", extended_cycle_loss(g_a, g_b, constant_image(0.9)).item(), 0.3});
    auto fixed = [](const Var<double>& x) { return x; };
    out.push_back({"excyc: fixed point", extended_cycle_loss(fixed, fixed, constant_image(0.4)).item(), 0.0});
  }
  {
    auto en_b = [](const Var<double>&) { return constant_image(1.0); };
    auto en_a = [](const Var<double>&) { return constant_image(0.25); };
    auto g_b = [](const Var<double>& x) { return x; };
    out.push_back({"sls: stub encoders 1.0 / 0.25", shared_latent_loss(en_b, g_b, en_a, constant_image(0.0)).item(),
                   0.75});
    out.push_back({"sls: shared encoder", shared_latent_loss(en_b, g_b, en_b, constant_image(0.0)).item(), 0.0});
  }
  {
    auto zero = [](const Var<double>&) { return constant_image(0.0, "G_vc(vc)"); };
    out.push_back({"iden: stub 0 on 0.4", identity_loss(zero, constant_image(0.4, "vc")).item(), 0.4});
    auto same = [](const Var<double>& x) { return x; };
    out.push_back({"iden: identity generator", identity_loss(same, constant_image(0.4, "vc")).item(), 0.0});
  }
  {
    TranslationTerms<double> t{scalar(0.1), scalar(0.2), scalar(0.3), scalar(0.4), scalar(0.5)};
    out.push_back({"translation: (0.1..0.5) default weights", translation_loss(LossWeights{}, t).item(), 4.2});
    TranslationTerms<double> z{scalar(0), scalar(0), scalar(0), scalar(0), scalar(0)};
    out.push_back({"translation: all zero", translation_loss(LossWeights{}, z).item(), 0.0});
    LossWeights half;
    half.lambda_c = 5.0;
    out.push_back({"translation: halved lambda_c", translation_loss(half, t).item(), 5.0 * 0.3 + 0.7 + 0.5});
  }
  {
    auto d_half = [](const Var<double>&) { return constant_scores(0.5); };
    out.push_back({"gan D: D = 0.5", gan_loss_discriminator(d_half, constant_image(0.1), constant_image(0.2)).item(),
                   2 * ln2});
    out.push_back({"gan G: D = 0.5", gan_loss_generator(d_half, constant_image(0.2)).item(), ln2});
    auto d_perfect = [](const Var<double>& x) { return constant_scores(x.label() == "real" ? 1.0 : 0.0); };
    out.push_back({"gan D: perfect discriminator",
                   gan_loss_discriminator(d_perfect, constant_image(0.1, "real"), constant_image(0.2, "fake")).item(),
                   0.0});
    auto d_one = [](const Var<double>&) { return constant_scores(1.0); };
    out.push_back({"gan G: D(fake) = 1", gan_loss_generator(d_one, constant_image(0.2)).item(), 0.0});
  }
  {
    auto d_half = [](const Var<double>&, const Var<double>&) { return constant_scores(0.5); };
    const OcVcPair<double> fwd{constant_image(0.1, "oc"), constant_image(0.2, "G_vc(oc)")};
    const OcVcPair<double> bwd{constant_image(0.3, "G_oc(vc)"), constant_image(0.4, "vc")};
    out.push_back({"dir D: D_dir = 0.5", dir_loss_discriminator(d_half, fwd, bwd).item(), 2 * ln2});
    auto d_perfect = [](const Var<double>& oc, const Var<double>&) {
      return constant_scores(oc.label() == "oc" ? 1.0 : 0.0);
    };
    out.push_back({"dir D: perfect direction", dir_loss_discriminator(d_perfect, fwd, bwd).item(), 0.0});
  }
  out.push_back({"adversarial: 0.7 + 0.3", adversarial_loss(scalar(0.7), scalar(0.3)).item(), 1.0});
  out.push_back({"adversarial: zero", adversarial_loss(scalar(0), scalar(0)).item(), 0.0});
  {
    auto de = [](const Var<double>& l, const Var<double>& z) { return constant_image(l.value()(0, 0, 0, 0) + z.item()); };
    const auto l = constant_image(0.0);
    out.push_back({"noise: z1 == z2", noise_loss(de, l, scalar(0.3), scalar(0.3), 0.1).item(), 0.1});
    out.push_back({"noise: distance 0.5", noise_loss(de, l, scalar(0.0), scalar(0.5), 0.1).item(), 0.0});
    out.push_back({"noise: distance 0.06", noise_loss(de, l, scalar(0.0), scalar(0.06), 0.1).item(), 0.04});
  }
  out.push_back({"total: (4.2, 1.0, 0.04)", total_loss(scalar(4.2), scalar(1.0), scalar(0.04)).item(), 5.24});
  out.push_back({"total: zero", total_loss(scalar(0), scalar(0), scalar(0)).item(), 0.0});
  return out;
}

// ------------------------------------------------------------ gradient checks

inline ModelConfig mini_model_config() {
  ModelConfig c;
  c.base_channels = 2;
  c.residual_blocks = 1;
  c.noise_dim = 2;
  c.disc_channels = 2;
  c.disc_layers = 1;
  return c;
}

inline const std::vector<std::string>& gradient_terms() {
  static const std::vector<std::string> terms{"cyc", "excyc", "sls_vc", "sls_oc", "iden",
                                              "dir", "gan_oc", "noise", "total"};
  return terms;
}

/// Parameter sets a term depends on, named as in SharedLatentModel::parameter_sets().
inline std::vector<int> term_parameter_sets(const std::string& term) {
  // 0 en_oc, 1 de_oc, 2 en_vc, 3 de_vc, 4 d_dir, 5 d_oc
  if (term == "cyc" || term == "excyc") return {0, 1, 2, 3};
  if (term == "sls_vc") return {0, 1, 2};
  if (term == "sls_oc") return {0, 2, 3};
  if (term == "iden") return {2, 3};
  if (term == "dir") return {0, 1, 2, 3, 4};
  if (term == "gan_oc") return {0, 1, 2, 3, 5};
  if (term == "noise") return {0, 1};
  return {0, 1, 2, 3, 4, 5};
}

struct GradientFixture {
  SharedLatentModel<double> model;
  Tensor<double> oc, vc;
  std::uint64_t noise_seed;

  explicit GradientFixture(std::uint64_t seed, Index size = 8)
      : model(mini_model_config(), seed), oc(Shape{1, 3, size, size}), vc(Shape{1, 3, size, size}),
        noise_seed(derive_seed(seed, 99)) {
    RandomStream rng(derive_seed(seed, 98));
    for (Index i = 0; i < oc.size(); ++i) oc.data()[i] = rng.uniform(-0.9, 0.9);
    for (Index i = 0; i < vc.size(); ++i) vc.data()[i] = rng.uniform(-0.9, 0.9);
  }

  /// One term of the generator-phase objective, with a fixed noise sequence.
  Var<double> evaluate(const std::string& term) {
    RandomStream noise(noise_seed);
    train::Invocations<double> inv(model, [&](Index n) { return sample_noise<double>(noise, n, 2); });
    const Var<double> real_oc(oc, false, "oc");
    const Var<double> real_vc(vc, false, "vc");
    const auto pass = train::generator_pass(inv, real_oc, real_vc, LossWeights{});
    if (term == "cyc") return pass.trans_terms.cyc;
    if (term == "excyc") return pass.trans_terms.excyc;
    if (term == "sls_vc") return pass.trans_terms.sls_vc;
    if (term == "sls_oc") return pass.trans_terms.sls_oc;
    if (term == "iden") return pass.trans_terms.iden;
    if (term == "noise") return pass.noise;
    const auto adv = train::adversarial_terms(inv, pass, GanMode::log);
    if (term == "dir") return adv.dir;
    if (term == "gan_oc") return adv.gan_oc;
    return total_loss(pass.trans, adv.adv, pass.noise);
  }
};

struct GradientCheck {
  std::string term;
  int sampled = 0;
  int nonzero = 0;  // sampled parameters with |numeric gradient| > 1e-8
  double max_rel_error = 0;
  std::string worst;
};

/// |a - n| / max(|a|, |n|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares the backward pass with central differences (step h) on `samples`
/// parameters drawn uniformly from the sets the term depends on. Instance norm
/// over 2x2 maps and the L1 kinks make the objective sharply curved, hence the
/// small default step.
inline GradientCheck check_term_gradient(const std::string& term, std::uint64_t seed, int samples = 60,
                                         double h = 1e-7, double floor = 1e-4) {
  GradientFixture fx(seed);
  auto sets = fx.model.parameter_sets();
  for (auto* s : sets) s->zero_grad();
  backward(fx.evaluate(term));

  std::vector<Parameter<double>*> params;
  std::vector<Index> offsets{0};
  for (int si : term_parameter_sets(term))
    for (auto& p : sets[static_cast<std::size_t>(si)]->items()) {
      params.push_back(&p);
      offsets.push_back(offsets.back() + p.var.value().size());
    }
  GradientCheck out;
  out.term = term;
  RandomStream pick(derive_seed(seed, 7));
  for (int s = 0; s < samples; ++s) {
    const auto flat = static_cast<Index>(pick.below(static_cast<std::uint64_t>(offsets.back())));
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat) - 1;
    const auto k = static_cast<std::size_t>(it - offsets.begin());
    Parameter<double>& p = *params[k];
    const Index i = flat - *it;
    const double analytic = p.var.has_grad() ? p.var.grad().data()[i] : 0.0;
    double& w = p.var.mutable_value().data()[i];
    const double saved = w;
    w = saved + h;
    const double up = fx.evaluate(term).item();
    w = saved - h;
    const double down = fx.evaluate(term).item();
    w = saved;
    const double numeric = (up - down) / (2 * h);
    const double err = relative_error(analytic, numeric, floor);
    ++out.sampled;
    if (std::abs(numeric) > 1e-8) ++out.nonzero;
    if (err >= out.max_rel_error) {
      out.max_rel_error = err;
      out.worst = p.name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic) + " numeric " +
                  std::to_string(numeric);
    }
  }
  return out;
}

// --------------------------------------------------------- visibility oracle

/// A fold tube small enough for exhaustive checking (at most 480 faces).
struct OracleScene {
  synth::TubeScene scene;
  synth::TriangleMesh mesh;
  synth::CameraTrajectory trajectory;
};

inline OracleScene oracle_scene(std::uint64_t seed) {
  RandomStream rng(seed);
  OracleScene s;
  s.scene.length = 6.0;
  s.scene.fold_amplitude = rng.uniform(0.3, 0.7);
  s.scene.fold_period = rng.uniform(1.2, 2.2);
  s.scene.fold_phase_jitter = rng.uniform(0.0, 0.9);
  s.scene.seed = seed;
  const int axial = 10 + static_cast<int>(rng.below(6));  // 10..15
  const int radial = 8 + static_cast<int>(rng.below(9));  // 8..16
  s.mesh = synth::build_mesh(s.scene, axial, radial);
  synth::TrajectoryOptions t;
  t.poses = 2 + static_cast<int>(rng.below(4));
  t.start = 0.4;
  t.end_margin = 2.5;
  t.lateral_jitter = 0.2;
  t.direction_jitter = 10.0;
  t.backward = rng.below(4) == 0;
  t.seed = derive_seed(seed, 5);
  s.trajectory = synth::make_trajectory(s.scene, t);
  return s;
}

/// Exhaustive line of sight: face f is visible when, for some pose whose image
/// contains f's centroid, the segment from the camera to that centroid meets
/// no face before f (ties resolved toward the lower face id).
inline std::vector<std::uint8_t> visibility_oracle(const synth::TriangleMesh& mesh,
                                                   const synth::CameraTrajectory& trajectory) {
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(mesh.face_count()), 0);
  for (Index f = 0; f < mesh.face_count(); ++f)
    for (const auto& pose : trajectory.poses) {
      const synth::Vec3 c = mesh.centroid(f);
      if (!pose.in_frustum(c)) continue;
      const synth::Ray ray{pose.position, (c - pose.position).normalized()};
      Index best = -1;
      double best_t = std::numeric_limits<double>::infinity();
      for (Index g = 0; g < mesh.face_count(); ++g) {
        const auto t = synth::intersect_triangle(ray, mesh.corner(g, 0), mesh.corner(g, 1), mesh.corner(g, 2));
        if (t && (*t < best_t || (*t == best_t && g < best))) {
          best_t = *t;
          best = g;
        }
      }
      if (best == f) {
        flags[static_cast<std::size_t>(f)] = 1;
        break;
      }
    }
  return flags;
}

// ------------------------------------------------------------ metric oracles

inline MissedMask random_mask(RandomStream& rng, Index h, Index w, double density) {
  MissedMask m(h, w);
  for (auto& b : m.bits) b = rng.uniform() < density ? 1 : 0;
  return m;
}

struct NaiveCounts {
  double accuracy;
  double dice;
};

inline NaiveCounts naive_counts(const MissedMask& pred, const MissedMask& gt) {
  long agree = 0, both = 0, p = 0, g = 0;
  for (Index y = 0; y < pred.height; ++y)
    for (Index x = 0; x < pred.width; ++x) {
      const bool a = pred.at(y, x) != 0, b = gt.at(y, x) != 0;
      agree += a == b;
      both += a && b;
      p += a;
      g += b;
    }
  const double d = p + g == 0 ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
  return {static_cast<double>(agree) / static_cast<double>(pred.height * pred.width), d};
}

// ------------------------------------------------------- invocation wiring

struct WiringCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

inline std::string describe(const train::Invocation& c) {
  return c.term + ":" + c.network + "(" + c.input + (c.second_input.empty() ? "" : ", " + c.second_input) + ")";
}

/// Audits one training step's network calls against the objective's wiring.
inline std::vector<WiringCheck> audit_wiring(const train::InvocationAudit& audit) {
  std::vector<WiringCheck> out;
  auto calls_of = [&](const std::string& term, const std::string& network) {
    std::vector<train::Invocation> v;
    for (const auto& c : audit.for_term(term))
      if (network.empty() || c.network == network) v.push_back(c);
    return v;
  };
  auto has = [&](const std::string& term, const std::string& network, const std::string& input) {
    for (const auto& c : calls_of(term, network))
      if (c.input == input) return true;
    return false;
  };
  auto all_inputs_in = [&](const std::vector<train::Invocation>& calls, const std::set<std::string>& allowed,
                           std::string& bad) {
    for (const auto& c : calls)
      if (!allowed.count(c.input)) {
        bad = describe(c);
        return false;
      }
    return true;
  };
  auto first_generator = [&](const std::string& term) {
    for (const auto& c : audit.for_term(term))
      if (c.network == "G_oc" || c.network == "G_vc") return c.network + "(" + c.input + ")";
    return std::string("none");
  };

  {
    std::string bad;
    const bool inputs = all_inputs_in(calls_of("excyc", ""), {"oc", "G_vc(oc)", "G_oc(G_vc(oc))"}, bad);
    out.push_back({"excyc consumes the OC batch through G_vc first",
                   first_generator("excyc") == "G_vc(oc)" && inputs && has("excyc", "G_vc", "G_oc(G_vc(oc))"),
                   "first " + first_generator("excyc") + (bad.empty() ? "" : ", stray " + bad)});
  }
  {
    std::string bad;
    const bool inputs = all_inputs_in(calls_of("cyc", ""), {"vc", "G_oc(vc)"}, bad);
    out.push_back({"cyc consumes the VC batch through G_oc first",
                   first_generator("cyc") == "G_oc(vc)" && inputs && has("cyc", "G_vc", "G_oc(vc)"),
                   "first " + first_generator("cyc") + (bad.empty() ? "" : ", stray " + bad)});
  }
  {
    std::string bad;
    const auto calls = calls_of("iden", "");
    bool only_vc = !calls.empty() && all_inputs_in(calls, {"vc"}, bad);
    for (const auto& c : calls) only_vc = only_vc && (c.network == "G_vc" || c.network == "En_vc");
    out.push_back({"identity loss applied to VC inputs only", only_vc && has("iden", "G_vc", "vc"),
                   std::to_string(calls.size()) + " calls" + (bad.empty() ? "" : ", stray " + bad)});
  }
  out.push_back({"sls_vc = |En_oc(vc) - En_vc(G_oc(vc))|",
                 has("sls_vc", "En_oc", "vc") && has("sls_vc", "G_oc", "vc") && has("sls_vc", "En_vc", "G_oc(vc)"),
                 ""});
  out.push_back({"sls_oc = |En_vc(oc) - En_oc(G_vc(oc))|",
                 has("sls_oc", "En_vc", "oc") && has("sls_oc", "G_vc", "oc") && has("sls_oc", "En_oc", "G_vc(oc)"),
                 ""});
  {
    std::string bad;
    std::vector<train::Invocation> d_oc;
    for (const auto& c : audit.calls)
      if (c.network == "D_oc") d_oc.push_back(c);
    const bool inputs = all_inputs_in(d_oc, {"oc", "G_oc(G_vc(oc))"}, bad);
    const bool gen_side = !calls_of("gan_oc", "D_oc").empty() &&
                          all_inputs_in(calls_of("gan_oc", "D_oc"), {"G_oc(G_vc(oc))"}, bad);
    out.push_back({"D_oc fakes are cycle reconstructions G_oc(G_vc(oc))",
                   inputs && gen_side && has("disc_oc", "D_oc", "oc") && has("disc_oc", "D_oc", "G_oc(G_vc(oc))"),
                   std::to_string(d_oc.size()) + " D_oc calls" + (bad.empty() ? "" : ", stray " + bad)});
  }
  {
    std::set<std::pair<std::string, std::string>> pairs;
    bool ordered = true;
    std::string bad;
    int count = 0;
    for (const auto& c : audit.calls) {
      if (c.network != "D_dir") continue;
      ++count;
      pairs.insert({c.input, c.second_input});
      if (domain_of_label(c.input) != Domain::oc || domain_of_label(c.second_input) != Domain::vc) {
        ordered = false;
        bad = describe(c);
      }
    }
    const std::set<std::pair<std::string, std::string>> want{{"oc", "G_vc(oc)"}, {"G_oc(vc)", "vc"}};
    out.push_back({"D_dir pairs ordered (OC, VC)", ordered && pairs == want && count == 4,
                   std::to_string(count) + " D_dir calls" + (bad.empty() ? "" : ", misordered " + bad)});
  }
  out.push_back({"noise term decodes the VC latent En_oc(vc)", has("noise", "De_oc", "En_oc(vc)"), ""});
  return out;
}

}  // namespace lumen::checks
