#include "lumen/train/trainer.hpp"

#include "lumen/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lumen::train {

namespace fs = std::filesystem;

namespace {

Image<float> labelled(const Tensor<float>& t, const std::string& label) { return Image<float>(t, false, label); }

std::string dump(long step, const LossReport& r, double d_loss) {
  std::ostringstream os;
  os << "non-finite loss at step " << step << ":";
  for (std::size_t i = 0; i < r.names.size(); ++i) os << ' ' << r.names[i] << '=' << r.values()[i];
  os << " d_loss=" << d_loss;
  return os.str();
}

bool finite(const LossReport& r) {
  for (double v : r.values())
    if (!std::isfinite(v)) return false;
  return true;
}

std::string idx(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

Tensor<float> stack(const std::vector<const Tensor<float>*>& items) {
  const Shape one = items.front()->shape();
  Tensor<float> out(Shape{static_cast<Index>(items.size()), one.c, one.h, one.w});
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i]->shape() != one) throw ConfigError("training images differ in size");
    out.array().segment(static_cast<Index>(i) * one.size(), one.size()) = items[i]->array();
  }
  return out;
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      model_(cfg.model, derive_seed(cfg.seed, 0)),
      opt_g_(model_.generator_sets(), cfg.adam()),
      opt_d_(model_.discriminator_sets(), cfg.adam()),
      pool_forward_(static_cast<std::size_t>(cfg.pool_size)),
      pool_backward_(static_cast<std::size_t>(cfg.pool_size)),
      pool_oc_(static_cast<std::size_t>(cfg.pool_size)),
      data_rng_(derive_seed(cfg.seed, 1)),
      noise_rng_(derive_seed(cfg.seed, 2)),
      pool_rng_(derive_seed(cfg.seed, 3)) {}

LossReport Trainer::step(const Tensor<float>& batch_oc, const Tensor<float>& batch_vc, InvocationAudit* audit) {
  if (batch_oc.shape() != batch_vc.shape())
    throw ConfigError("OC and VC batches differ: " + batch_oc.shape().str() + " vs " + batch_vc.shape().str());
  const long step_index = step_ + 1;
  const Index noise_dim = cfg_.model.noise_dim;
  Invocations<float> inv(
      model_, [&](Index batch) { return sample_noise<float>(noise_rng_, batch, noise_dim); }, audit);

  const Image<float> real_oc = labelled(batch_oc, "oc");
  const Image<float> real_vc = labelled(batch_vc, "vc");
  const GeneratorPass<float> pass = generator_pass(inv, real_oc, real_vc, cfg_.weights);

  // Discriminators on pooled, detached fakes.
  {
    const ImagePair fwd = pool_forward_.query({batch_oc, pass.fake_vc.value()}, pool_rng_);
    const ImagePair bwd = pool_backward_.query({pass.fake_oc.value(), batch_vc}, pool_rng_);
    const Tensor<float> rec = pool_oc_.query(pass.rec_oc.value(), pool_rng_);
    auto d_dir = [&](const Image<float>& oc, const Image<float>& vc) { return inv.d_dir(oc, vc); };
    auto d_oc = [&](const Image<float>& x) { return inv.d_oc(x); };
    inv.set_term("disc_dir");
    const Var<float> l_dir = dir_loss_discriminator(
        d_dir, OcVcPair<float>{labelled(fwd.first, real_oc.label()), labelled(fwd.second, pass.fake_vc.label())},
        OcVcPair<float>{labelled(bwd.first, pass.fake_oc.label()), labelled(bwd.second, real_vc.label())},
        cfg_.gan_mode);
    inv.set_term("disc_oc");
    const Var<float> l_oc = gan_loss_discriminator(d_oc, real_oc, labelled(rec, pass.rec_oc.label()), cfg_.gan_mode);
    const Var<float> d_loss = weighted_sum<float>({l_dir, l_oc}, {1.0f, 1.0f});
    last_d_loss_ = d_loss.item();
    if (!std::isfinite(last_d_loss_)) throw NonFiniteLoss(dump(step_index, LossReport{}, last_d_loss_));
    opt_d_.zero_grad();
    backward(d_loss);
    opt_d_.step();
  }
  if (phase_hook_) phase_hook_("discriminators");

  // Generators and encoders against the updated discriminators.
  for (auto* s : model_.discriminator_sets()) s->set_requires_grad(false);
  LossReport report;
  try {
    const AdversarialTerms<float> adv = adversarial_terms(inv, pass, cfg_.gan_mode);
    const Var<float> total = total_loss(pass.trans, adv.adv, pass.noise);
    report = make_report(pass, adv, total);
    if (!finite(report)) throw NonFiniteLoss(dump(step_index, report, last_d_loss_));
    opt_g_.zero_grad();
    backward(total);
    opt_g_.step();
  } catch (...) {
    for (auto* s : model_.discriminator_sets()) s->set_requires_grad(true);
    throw;
  }
  for (auto* s : model_.discriminator_sets()) s->set_requires_grad(true);
  if (phase_hook_) phase_hook_("generators");
  step_ = step_index;
  return report;
}

Checkpoint Trainer::to_checkpoint() const {
  Checkpoint ck;
  ck.put_text("config", cfg_.to_config().canonical());
  ck.put_text("config_hash", cfg_.hash());
  ck.put_text("step", std::to_string(step_));
  ck.put_text("rng.data", data_rng_.state());
  ck.put_text("rng.noise", noise_rng_.state());
  ck.put_text("rng.pool", pool_rng_.state());
  auto& self = const_cast<Trainer&>(*this);
  for (auto* set : self.model_.parameter_sets())
    for (const auto& p : set->items()) ck.put_tensor("param/" + p.name, p.var.value());
  auto put_adam = [&](const char* tag, Adam<float>& opt) {
    ck.put_text(std::string(tag) + ".steps", std::to_string(opt.steps()));
    for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
      ck.put_tensor(std::string(tag) + "/m/" + idx(i), opt.first_moments()[i]);
      ck.put_tensor(std::string(tag) + "/v/" + idx(i), opt.second_moments()[i]);
    }
  };
  put_adam("adam_g", self.opt_g_);
  put_adam("adam_d", self.opt_d_);
  auto put_pair_pool = [&](const char* tag, const ImagePool<ImagePair>& pool) {
    ck.put_text(std::string(tag) + ".size", std::to_string(pool.size()));
    for (std::size_t i = 0; i < pool.size(); ++i) {
      ck.put_tensor(std::string(tag) + "/" + idx(i) + "/oc", pool.items()[i].first);
      ck.put_tensor(std::string(tag) + "/" + idx(i) + "/vc", pool.items()[i].second);
    }
  };
  put_pair_pool("pool_forward", pool_forward_);
  put_pair_pool("pool_backward", pool_backward_);
  ck.put_text("pool_oc.size", std::to_string(pool_oc_.size()));
  for (std::size_t i = 0; i < pool_oc_.size(); ++i) ck.put_tensor("pool_oc/" + idx(i), pool_oc_.items()[i]);
  return ck;
}

void load_parameters(SharedLatentModel<float>& model, const Checkpoint& ck) {
  for (auto* set : model.parameter_sets())
    for (auto& p : set->items()) {
      const Tensor<float>& t = ck.tensor("param/" + p.name);
      if (t.shape() != p.var.shape())
        throw CheckpointError("parameter " + p.name + " has shape " + t.shape().str() + ", expected " +
                              p.var.shape().str());
      p.var.mutable_value() = t;
    }
}

TrainConfig checkpoint_config(const Checkpoint& ck) {
  KeyValueConfig kv(train_schema());
  kv.parse(ck.text("config"), "checkpoint");
  return TrainConfig::from(kv);
}

void Trainer::restore(const Checkpoint& ck) {
  if (ck.text("config_hash") != cfg_.hash())
    throw CheckpointError("checkpoint config hash " + ck.text("config_hash") + " does not match this run (" +
                          cfg_.hash() + ")");
  load_parameters(model_, ck);
  step_ = std::stol(ck.text("step"));
  data_rng_.set_state(ck.text("rng.data"));
  noise_rng_.set_state(ck.text("rng.noise"));
  pool_rng_.set_state(ck.text("rng.pool"));
  auto get_adam = [&](const char* tag, Adam<float>& opt) {
    opt.set_steps(std::stol(ck.text(std::string(tag) + ".steps")));
    for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
      opt.first_moments()[i] = ck.tensor(std::string(tag) + "/m/" + idx(i));
      opt.second_moments()[i] = ck.tensor(std::string(tag) + "/v/" + idx(i));
    }
  };
  get_adam("adam_g", opt_g_);
  get_adam("adam_d", opt_d_);
  auto get_pair_pool = [&](const char* tag, ImagePool<ImagePair>& pool) {
    pool.items().clear();
    const auto count = std::stoul(ck.text(std::string(tag) + ".size"));
    for (std::size_t i = 0; i < count; ++i)
      pool.items().emplace_back(ck.tensor(std::string(tag) + "/" + idx(i) + "/oc"),
                                ck.tensor(std::string(tag) + "/" + idx(i) + "/vc"));
  };
  get_pair_pool("pool_forward", pool_forward_);
  get_pair_pool("pool_backward", pool_backward_);
  pool_oc_.items().clear();
  const auto count = std::stoul(ck.text("pool_oc.size"));
  for (std::size_t i = 0; i < count; ++i) pool_oc_.items().push_back(ck.tensor("pool_oc/" + idx(i)));
}

std::vector<std::pair<std::string, Tensor<float>>> load_image_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("missing image directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, Tensor<float>>> out;
  out.reserve(files.size());
  for (const auto& f : files) out.emplace_back(f.stem().string(), to_tensor<float>(read_png_rgb(f)));
  return out;
}

TrainResult train(const TrainConfig& cfg, const TrainOptions& opts) {
  const auto oc = load_image_dir(opts.data_root / "trainA");
  const auto vc = load_image_dir(opts.data_root / "trainB");
  if (oc.empty() || vc.empty()) throw ConfigError("trainA and trainB must each hold at least one PNG");
  for (const auto* set : {&oc, &vc})
    for (const auto& [name, t] : *set)
      if (t.shape().h != cfg.image_size || t.shape().w != cfg.image_size)
        throw ConfigError("image " + name + " is " + std::to_string(t.shape().w) + "x" +
                          std::to_string(t.shape().h) + ", config expects image_size " +
                          std::to_string(cfg.image_size));

  Trainer trainer(cfg);
  const fs::path ck_dir = opts.out_dir / "checkpoints";
  fs::create_directories(ck_dir);
  TrainResult result;
  result.loss_csv = opts.out_dir / "losses.csv";

  std::vector<std::string> kept_rows;
  if (opts.resume) {
    trainer.restore(Checkpoint::load(*opts.resume));
    std::ifstream in(result.loss_csv);
    std::string line;
    if (in && std::getline(in, line) && line == LossReport::csv_header())
      while (std::getline(in, line) && static_cast<long>(kept_rows.size()) < trainer.steps_done())
        kept_rows.push_back(line);
    if (static_cast<long>(kept_rows.size()) != trainer.steps_done())
      throw ConfigError("resume needs the first " + std::to_string(trainer.steps_done()) + " rows of " +
                        result.loss_csv.string());
  }
  std::ofstream csv(result.loss_csv, std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + result.loss_csv.string());
  csv << LossReport::csv_header() << '\n';
  for (const auto& row : kept_rows) csv << row << '\n';

  std::vector<const Tensor<float>*> pick_oc(cfg.batch_size), pick_vc(cfg.batch_size);
  while (trainer.steps_done() < cfg.iterations) {
    for (int b = 0; b < cfg.batch_size; ++b) pick_oc[b] = &oc[trainer.data_rng().below(oc.size())].second;
    for (int b = 0; b < cfg.batch_size; ++b) pick_vc[b] = &vc[trainer.data_rng().below(vc.size())].second;
    const LossReport report = trainer.step(stack(pick_oc), stack(pick_vc));
    const long s = trainer.steps_done();
    csv << report.csv_row(s) << '\n';
    if (opts.progress) opts.progress(s, report);
    if (cfg.checkpoint_every > 0 && s % cfg.checkpoint_every == 0) {
      csv.flush();
      char name[32];
      std::snprintf(name, sizeof name, "step_%06ld.ckpt", s);
      trainer.to_checkpoint().save(ck_dir / name);
    }
  }
  csv.flush();
  result.final_checkpoint = ck_dir / "final.ckpt";
  trainer.to_checkpoint().save(result.final_checkpoint);
  result.steps = trainer.steps_done();
  return result;
}

}  // namespace lumen::train
