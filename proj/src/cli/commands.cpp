#include "lumen/cli/commands.hpp"

#include "lumen/checkpoint.hpp"
#include "lumen/eval/metrics.hpp"
#include "lumen/image.hpp"
#include "lumen/train/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

namespace lumen::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
};

KeyValueConfig resolve_config(const Common& c) {
  KeyValueConfig kv(full_schema());
  if (!c.config_path.empty()) kv.load_file(c.config_path);
  for (const auto& o : c.overrides) kv.apply_override(o);
  return kv;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Provenance record; contains nothing that varies between identical runs.
void write_run_json(const fs::path& out_dir, const std::string& command, const KeyValueConfig& kv, json extra) {
  json cfg = json::object();
  for (const auto& k : kv.schema()) cfg[k.name] = kv.get(k.name);
  json run;
  run["command"] = command;
  run["config_hash"] = kv.hash();
  run["seed"] = kv.get("seed");
  run["data_seed"] = kv.get("data_seed");
  run["versions"] = {{"lumen", kVersion},
                     {"checkpoint_format", kCheckpointMagic},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
  run["config"] = cfg;
  if (!extra.is_null()) run["inputs"] = extra;
  write_text(out_dir / "run.json", run.dump(2) + "\n");
}

std::vector<fs::path> pngs_in(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("missing directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

/// Static contact sheet: one row per frame, one image per column.
void write_contact_sheet(const fs::path& path, const std::string& title, const std::vector<std::string>& columns,
                         const std::vector<std::pair<std::string, std::vector<std::string>>>& rows) {
  std::string html = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>" + html_escape(title) +
                     "</title>\n<style>img{width:128px;image-rendering:pixelated}td{padding:2px;font:12px "
                     "monospace}</style></head><body>\n<h1>" +
                     html_escape(title) + "</h1>\n<table>\n<tr><th>frame</th>";
  for (const auto& c : columns) html += "<th>" + html_escape(c) + "</th>";
  html += "</tr>\n";
  for (const auto& [id, cells] : rows) {
    html += "<tr><td>" + html_escape(id) + "</td>";
    for (const auto& src : cells) html += "<td><img src=\"" + html_escape(src) + "\"></td>";
    html += "</tr>\n";
  }
  html += "</table>\n</body></html>\n";
  write_text(path, html);
}

struct LoadedModel {
  TrainConfig cfg;
  std::unique_ptr<SharedLatentModel<float>> model;
};

LoadedModel load_model(const fs::path& checkpoint) {
  const Checkpoint ck = Checkpoint::load(checkpoint);
  LoadedModel m;
  m.cfg = train::checkpoint_config(ck);
  m.model = std::make_unique<SharedLatentModel<float>>(m.cfg.model, 0);
  train::load_parameters(*m.model, ck);
  return m;
}

int cmd_gen_data(const Common& c, std::ostream& out) {
  const KeyValueConfig kv = resolve_config(c);
  const synth::DatasetConfig cfg = dataset_config(kv);
  const fs::path root = c.out_dir;
  fs::create_directories(root);
  const auto rows = synth::generate_dataset(cfg, root);
  write_run_json(root, "gen-data", kv, nullptr);
  std::map<std::string, int> per_domain;
  for (const auto& r : rows) ++per_domain[r.domain];
  out << "wrote " << rows.size() << " frames (" << per_domain["oc"] << " oc, " << per_domain["vc"] << " vc) to "
      << root.string() << "\n";
  return kOk;
}

int cmd_train(const Common& c, const std::string& data, const std::string& resume, bool quiet, std::ostream& out) {
  const KeyValueConfig kv = resolve_config(c);
  const TrainConfig cfg = TrainConfig::from(kv);
  if (!fs::is_directory(fs::path(data) / "trainA") || !fs::is_directory(fs::path(data) / "trainB"))
    throw ConfigError("dataset " + data + " lacks trainA/ and trainB/");
  fs::create_directories(c.out_dir);
  train::TrainOptions opts;
  opts.data_root = data;
  opts.out_dir = c.out_dir;
  if (!resume.empty()) opts.resume = resume;
  const auto start = std::chrono::steady_clock::now();
  if (!quiet)
    opts.progress = [&](long step, const LossReport& r) {
      if (step % 50 == 0 || step == cfg.iterations) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out << "step " << step << "/" << cfg.iterations << " total " << r.total << " sls " << r.sls_vc + r.sls_oc
            << " (" << secs << " s)\n"
            << std::flush;
      }
    };
  write_run_json(c.out_dir, "train", kv, json{{"data", data}, {"resume", resume}});
  const auto result = train::train(cfg, opts);
  out << "final checkpoint " << result.final_checkpoint.string() << "\n";
  return kOk;
}

int cmd_infer(const Common& c, const std::string& checkpoint, const std::string& input, const std::string& gt,
              std::ostream& out, std::ostream& err) {
  const KeyValueConfig kv = resolve_config(c);
  const double tau = kv.get_double("tau");
  const LoadedModel m = load_model(checkpoint);
  const fs::path root = c.out_dir;
  for (const char* sub : {"vc", "masks", "overlays"}) fs::create_directories(root / sub);
  write_run_json(root, "infer", kv, json{{"checkpoint", checkpoint}, {"input", input}, {"gt", gt}});

  NoGradGuard no_grad;
  std::vector<MissedMask> masks;
  std::vector<std::pair<std::string, std::vector<std::string>>> sheet;
  eval::MetricsReport metrics;
  json frames = json::array();
  int skipped = 0;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& file : pngs_in(input)) {
    const std::string id = file.stem().string();
    RgbImage frame;
    try {
      frame = read_png_rgb(file);
      if (frame.height % 4 != 0 || frame.width % 4 != 0 || frame.height < 8 || frame.width < 8)
        throw ConfigError("size " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                          " is not a multiple of 4");
    } catch (const std::exception& e) {
      err << "warning: skipping " << file.string() << ": " << e.what() << "\n";
      ++skipped;
      continue;
    }
    const Image<float> x(to_tensor<float>(frame), false, "oc");
    const Image<float> vc = translate_to_vc(m.model->g_vc, x);
    const RgbImage vc_image = from_tensor(vc.value());
    const MissedMask mask = eval::binarize_missed(vc.value(), 0, tau);
    write_png(root / "vc" / (id + ".png"), vc_image);
    write_png(root / "masks" / (id + ".png"), mask);
    write_png(root / "overlays" / (id + ".png"), eval::overlay(frame, mask));
    json row{{"frame_id", id}, {"missed_pixels", mask.count()}};
    if (!gt.empty()) {
      const fs::path gt_file = fs::path(gt) / (id + ".png");
      if (!fs::exists(gt_file)) throw ConfigError("no ground-truth mask for frame " + id);
      const MissedMask truth = read_png_mask(gt_file);
      metrics.add(id, mask, truth);
      row["accuracy"] = eval::pixel_accuracy(mask, truth);
      row["dice"] = eval::dice(mask, truth);
    }
    frames.push_back(row);
    masks.push_back(mask);
    sheet.push_back({id, {"vc/" + id + ".png", "masks/" + id + ".png", "overlays/" + id + ".png"}});
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json summary;
  summary["frames"] = masks.size();
  summary["skipped"] = skipped;
  summary["tau"] = tau;
  summary["temporal_stability"] = masks.size() >= 2 ? json(eval::temporal_stability(masks)) : json(nullptr);
  summary["frames_per_second"] = secs > 0 ? masks.size() / secs : 0.0;
  if (!gt.empty()) {
    metrics.finalize();
    summary["accuracy"] = metrics.accuracy;
    summary["dice"] = metrics.dice;
    summary["pooled_accuracy"] = metrics.pooled_accuracy;
    summary["pooled_dice"] = metrics.pooled_dice;
  }
  summary["per_frame"] = frames;
  write_text(root / "summary.json", summary.dump(2) + "\n");
  write_contact_sheet(root / "index.html", "lumen infer", {"VC translation", "missed mask", "overlay"}, sheet);
  out << "inferred " << masks.size() << " frames";
  if (skipped) out << " (" << skipped << " skipped)";
  if (!gt.empty()) out << ", accuracy " << metrics.accuracy << ", dice " << metrics.dice;
  out << "\n";
  return kOk;
}

int cmd_sample(const Common& c, const std::string& checkpoint, const std::string& input, int k,
               std::uint64_t noise_seed, const std::string& domain, std::ostream& out) {
  if (k < 1) throw ConfigError("-k must be at least 1");
  if (domain != "vc" && domain != "oc") throw ConfigError("--domain must be vc or oc");
  const KeyValueConfig kv = resolve_config(c);
  const LoadedModel m = load_model(checkpoint);
  const fs::path root = c.out_dir;
  fs::create_directories(root);
  write_run_json(root, "sample", kv,
                 json{{"checkpoint", checkpoint}, {"input", input}, {"k", k}, {"noise_seed", noise_seed},
                      {"domain", domain}});

  NoGradGuard no_grad;
  const Image<float> x(to_tensor<float>(read_png_rgb(input)), false, domain);
  // VC frames enter through En_oc (the VC-to-OC encoder), OC frames through En_vc.
  const LatentCode<float> latent = domain == "vc" ? encode(m.model->g_oc.encoder, x) : encode(m.model->g_vc.encoder, x);
  RandomStream rng(noise_seed);
  std::vector<Tensor<float>> samples;
  for (int i = 0; i < k; ++i) {
    const NoiseVector<float> z = sample_noise<float>(rng, 1, m.cfg.model.noise_dim);
    samples.push_back(decode_oc(m.model->g_oc.decoder, latent, z).value());
    char name[32];
    std::snprintf(name, sizeof name, "sample_%02d.png", i);
    write_png(root / name, from_tensor(samples.back()));
  }
  double total = 0;
  int pairs = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j, ++pairs) total += (samples[i].array() - samples[j].array()).abs().mean();
  json summary{{"k", k},
               {"noise_seed", noise_seed},
               {"mean_pairwise_l1", pairs ? json(total / pairs) : json(nullptr)}};
  write_text(root / "summary.json", summary.dump(2) + "\n");
  out << "wrote " << k << " samples";
  if (pairs) out << ", mean pairwise L1 " << total / pairs;
  out << "\n";
  return kOk;
}

int cmd_eval(const Common& c, const std::string& pred, const std::string& gt, std::ostream& out) {
  const KeyValueConfig kv = resolve_config(c);
  std::map<std::string, fs::path> pred_files, gt_files;
  for (const auto& f : pngs_in(pred)) pred_files[f.stem().string()] = f;
  for (const auto& f : pngs_in(gt)) gt_files[f.stem().string()] = f;
  std::vector<std::string> missing;
  for (const auto& [id, _] : pred_files)
    if (!gt_files.count(id)) missing.push_back(id + " (no ground truth)");
  for (const auto& [id, _] : gt_files)
    if (!pred_files.count(id)) missing.push_back(id + " (no prediction)");
  if (pred_files.empty() || gt_files.empty() || !missing.empty()) {
    std::string msg = "frame ids of " + pred + " and " + gt + " do not match";
    if (pred_files.empty() || gt_files.empty()) msg += "; a directory holds no PNG masks";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += "\n  missing: " + missing[i];
    if (missing.size() > 20) msg += "\n  ... and " + std::to_string(missing.size() - 20) + " more";
    throw ConfigError(msg);
  }
  const fs::path root = c.out_dir;
  fs::create_directories(root / "compare");
  write_run_json(root, "eval", kv, json{{"pred", pred}, {"gt", gt}});
  eval::MetricsReport report;
  std::vector<std::pair<std::string, std::vector<std::string>>> sheet;
  for (const auto& [id, pf] : pred_files) {
    const MissedMask p = read_png_mask(pf);
    const MissedMask g = read_png_mask(gt_files.at(id));
    report.add(id, p, g);
    // green: hit, red: false alarm, blue: miss
    RgbImage cmp(p.height, p.width);
    for (Index y = 0; y < p.height; ++y)
      for (Index x = 0; x < p.width; ++x) {
        const bool a = p.at(y, x), b = g.at(y, x);
        cmp.at(0, y, x) = a && !b ? 1.f : 0.f;
        cmp.at(1, y, x) = a && b ? 1.f : 0.f;
        cmp.at(2, y, x) = !a && b ? 1.f : 0.f;
      }
    write_png(root / "compare" / (id + ".png"), cmp);
    sheet.push_back({id, {"compare/" + id + ".png"}});
  }
  report.finalize();
  write_text(root / "metrics.json", report.to_json());
  write_text(root / "metrics.csv", report.to_csv());
  write_contact_sheet(root / "index.html", "lumen eval", {"hit / false alarm / miss"}, sheet);
  out << "frames " << report.frame_count << ", accuracy " << report.accuracy << ", dice " << report.dice << "\n";
  return kOk;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--override", c.overrides, "key=value settings applied after the config file")
      ->expected(1, -1)
      ->allow_extra_args();
  cmd->add_option("--out", c.out_dir, "output directory (all artifacts are written below it)")
      ->capture_default_str();
  cmd->footer(config_help());
}

}  // namespace

std::string config_help() { return "Config keys (default, description):\n" + KeyValueConfig(full_schema()).help_text(); }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("lumen: missed-surface visualisation by shared-latent OC/VC translation", "lumen");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.footer(config_help());

  Common common;
  std::string data, resume, checkpoint, input, gt, pred, domain = "vc";
  int k = 5;
  std::uint64_t noise_seed = 0;
  bool quiet = false;

  auto* gen = app.add_subcommand("gen-data", "render a synthetic OC/VC dataset into --out");
  add_common(gen, common);

  auto* tr = app.add_subcommand("train", "train on <data>/trainA (OC) and <data>/trainB (VC)");
  add_common(tr, common);
  tr->add_option("--data", data, "dataset root")->required();
  tr->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);
  tr->add_flag("--quiet", quiet, "no progress lines");

  auto* inf = app.add_subcommand("infer", "translate OC frames to VC and extract missed-surface masks");
  add_common(inf, common);
  inf->add_option("--checkpoint", checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  inf->add_option("--input", input, "directory of OC frames (PNG)")->required();
  inf->add_option("--gt", gt, "optional directory of ground-truth masks named like the frames");

  auto* smp = app.add_subcommand("sample", "decode one frame's latent with k noise draws");
  add_common(smp, common);
  smp->add_option("--checkpoint", checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  smp->add_option("--input", input, "input frame (PNG)")->required()->check(CLI::ExistingFile);
  smp->add_option("-k", k, "number of samples")->capture_default_str();
  smp->add_option("--noise-seed", noise_seed, "seed of the noise draws")->capture_default_str();
  smp->add_option("--domain", domain, "domain of the input frame: vc or oc")->capture_default_str();

  auto* ev = app.add_subcommand("eval", "score predicted masks against ground truth");
  add_common(ev, common);
  ev->add_option("--pred", pred, "directory of predicted masks")->required();
  ev->add_option("--gt", gt, "directory of ground-truth masks")->required();

  std::vector<std::string> argv_store{"lumen"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*gen) return cmd_gen_data(common, out);
    if (*tr) return cmd_train(common, data, resume, quiet, out);
    if (*inf) return cmd_infer(common, checkpoint, input, gt, out, err);
    if (*smp) return cmd_sample(common, checkpoint, input, k, noise_seed, domain, out);
    if (*ev) return cmd_eval(common, pred, gt, out);
  } catch (const UnknownKeyError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace lumen::cli
