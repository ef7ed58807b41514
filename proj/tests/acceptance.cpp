// Acceptance suite: one PASS/FAIL line per criterion.

#include "support/checks.hpp"

#include "lumen/cli/commands.hpp"
#include "lumen/train/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace lumen;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  std::ostringstream out;
  const int code = cli::run_cli(args, out, std::cerr);
  if (code != 0) std::cerr << "lumen " << args.front() << " exited " << code << "\n";
  return code;
}

// 1 -------------------------------------------------------------------------

Outcome loss_oracles() {
  const auto t0 = Clock::now();
  int bad = 0;
  std::string first_bad;
  const auto cases = checks::loss_oracle_cases();
  for (const auto& c : cases)
    if (!(std::abs(c.got - c.want) < 1e-6)) {
      if (bad++ == 0) first_bad = c.name;
    }
  auto de = [](const Var<double>& l, const Var<double>&) { return l; };
  const double hinge = noise_loss(de, checks::constant_image(0.3), checks::scalar(1.0), checks::scalar(1.0), 0.1).item();
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = bad == 0 && hinge == 0.1 && secs < 10;
  o.detail = std::to_string(cases.size()) + " oracle cases, " + std::to_string(bad) + " off" +
             (bad ? " (first: " + first_bad + ")" : "") + "; equal-draw hinge " + fmt("%.17g", hinge) + "; " +
             fmt("%.2f s", secs);
  return o;
}

// 2 -------------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  Outcome o{true, ""};
  double worst = 0;
  std::string worst_term;
  int min_sampled = 1 << 30;
  for (const auto& term : checks::gradient_terms()) {
    const auto r = checks::check_term_gradient(term, 2024, 60);
    min_sampled = std::min(min_sampled, r.sampled);
    if (r.sampled < 50 || r.nonzero < 25 || !(r.max_rel_error < 1e-3)) {
      o.pass = false;
      o.detail += term + " failed (" + r.worst + "); ";
    }
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_term = term;
    }
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < 300;
  o.detail += std::to_string(checks::gradient_terms().size()) + " terms, >= " + std::to_string(min_sampled) +
              " params each, max rel error " + fmt("%.2e", worst) + " (" + worst_term + "); " + fmt("%.1f s", secs);
  return o;
}

// 3 -------------------------------------------------------------------------

Outcome visibility() {
  const auto t0 = Clock::now();
  int agree = 0;
  Index max_faces = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto sc = checks::oracle_scene(seed);
    max_faces = std::max(max_faces, sc.mesh.face_count());
    const auto flags = synth::mark_visibility(synth::MeshIntersector(sc.mesh), sc.trajectory);
    agree += flags == checks::visibility_oracle(sc.mesh, sc.trajectory);
  }
  const double secs = seconds_since(t0);
  return {agree == 20 && max_faces <= 500 && secs < 120,
          std::to_string(agree) + "/20 meshes agree exactly, largest " + std::to_string(max_faces) + " faces; " +
              fmt("%.1f s", secs)};
}

// 4 -------------------------------------------------------------------------

Outcome metrics() {
  const auto t0 = Clock::now();
  RandomStream rng(1000);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = checks::random_mask(rng, 16, 16, rng.uniform(0, 1));
    const auto b = checks::random_mask(rng, 16, 16, rng.uniform(0, 1));
    const auto naive = checks::naive_counts(a, b);
    agree += eval::pixel_accuracy(a, b) == naive.accuracy && eval::dice(a, b) == naive.dice;
  }
  const double secs = seconds_since(t0);
  return {agree == 1000 && secs < 30, std::to_string(agree) + "/1000 pairs exact; " + fmt("%.2f s", secs)};
}

// 5 and 6 --------------------------------------------------------------------

const std::vector<std::string> kDataOverrides{"scenes=6", "poses=50", "image_size=64"};
// Width 16 keeps a run near ten minutes on one core. The log-form GAN loss
// collapses G_vc to a constant image at this scale, so the smoke run uses the
// least-squares flag.
const std::vector<std::string> kTrainOverrides{"image_size=64",        "iterations=2000",
                                               "batch_size=1",         "seed=1",
                                               "base_channels=16",     "disc_channels=16",
                                               "checkpoint_every=1000", "gan_mode=least_squares"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

struct LossTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  double at(std::size_t row, const std::string& col) const {
    const auto it = std::find(columns.begin(), columns.end(), col);
    if (it == columns.end()) throw std::runtime_error("losses.csv lacks column " + col);
    return rows[row][static_cast<std::size_t>(it - columns.begin())];
  }
};

LossTable read_losses(const fs::path& p) {
  std::ifstream in(p);
  LossTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty " + p.string());
  std::stringstream header(line);
  for (std::string c; std::getline(header, c, ',');) t.columns.push_back(c);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<double> row;
    for (std::string c; std::getline(ss, c, ',');) row.push_back(std::stod(c));
    t.rows.push_back(row);
  }
  return t;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SmokeRuns {
  fs::path data, first, second, resumed;
  bool ok = false;
  double first_seconds = 0;
  std::string error;
};

SmokeRuns smoke_runs(const fs::path& work, bool determinism) {
  SmokeRuns s;
  s.data = work / "data";
  s.first = work / "run1";
  s.second = work / "run2";
  s.resumed = work / "run_resumed";
  for (const auto& d : {s.data, s.first, s.second, s.resumed}) fs::remove_all(d);

  const auto t0 = Clock::now();
  if (cli(with({"gen-data", "--out", s.data.string(), "--override"}, kDataOverrides)) != 0) {
    s.error = "gen-data failed";
    return s;
  }
  auto train = [&](const fs::path& out, std::vector<std::string> extra) {
    std::vector<std::string> args{"train", "--quiet", "--data", s.data.string(), "--out", out.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back("--override");
    args.insert(args.end(), kTrainOverrides.begin(), kTrainOverrides.end());
    return cli(args) == 0;
  };
  if (!train(s.first, {})) {
    s.error = "first training run failed";
    return s;
  }
  s.first_seconds = seconds_since(t0);
  if (determinism) {
    if (!train(s.second, {})) {
      s.error = "second training run failed";
      return s;
    }
    // The resumed run starts from the header and the first 1000 rows only.
    fs::create_directories(s.resumed);
    std::ifstream in(s.first / "losses.csv");
    std::ofstream out(s.resumed / "losses.csv");
    std::string line;
    for (int i = 0; i <= 1000 && std::getline(in, line); ++i) out << line << "\n";
    out.close();
    if (!train(s.resumed, {"--resume", (s.first / "checkpoints" / "step_001000.ckpt").string()})) {
      s.error = "resumed run failed";
      return s;
    }
  }
  s.ok = true;
  return s;
}

Outcome smoke_training(const SmokeRuns& s, const fs::path& work) {
  if (!s.ok) return {false, s.error};
  const auto t0 = Clock::now();
  const LossTable t = read_losses(s.first / "losses.csv");
  if (t.rows.size() != 2000) return {false, "expected 2000 loss rows, found " + std::to_string(t.rows.size())};

  std::vector<double> head, tail;
  for (std::size_t i = 0; i < 100; ++i) {
    head.push_back(t.at(i, "total"));
    tail.push_back(t.at(t.rows.size() - 100 + i, "total"));
  }
  const double m_first = median(head), m_last = median(tail);
  const double sls0 = t.at(0, "sls_vc") + t.at(0, "sls_oc");
  const double sls1 = t.at(t.rows.size() - 1, "sls_vc") + t.at(t.rows.size() - 1, "sls_oc");
  const bool a = m_last < m_first;
  const bool b = sls1 < 0.5 * sls0;

  const fs::path ck = s.first / "checkpoints" / "final.ckpt";
  std::vector<fs::path> vc_frames;
  for (const auto& e : fs::directory_iterator(s.data / "testB"))
    if (e.path().extension() == ".png") vc_frames.push_back(e.path());
  std::sort(vc_frames.begin(), vc_frames.end());
  double diversity = 0;
  int sampled = 0;
  for (std::size_t i = 0; i < vc_frames.size() && sampled < 10; i += std::max<std::size_t>(1, vc_frames.size() / 10)) {
    const fs::path out = work / "samples" / vc_frames[i].stem();
    fs::remove_all(out);
    if (cli({"sample", "--checkpoint", ck.string(), "--input", vc_frames[i].string(), "-k", "5", "--noise-seed",
             std::to_string(i), "--out", out.string()}) != 0)
      return {false, "sample failed"};
    diversity += nlohmann::json::parse(slurp(out / "summary.json"))["mean_pairwise_l1"].get<double>();
    ++sampled;
  }
  diversity /= std::max(1, sampled);
  const bool c = sampled > 0 && diversity >= 0.05;

  const fs::path infer = work / "infer";
  fs::remove_all(infer);
  if (cli({"infer", "--checkpoint", ck.string(), "--input", (s.data / "testA").string(), "--gt",
           (s.data / "testA" / "masks").string(), "--out", infer.string()}) != 0)
    return {false, "infer failed"};
  const auto summary = nlohmann::json::parse(slurp(infer / "summary.json"));
  const double dsc = summary["dice"].get<double>();
  const double acc = summary["accuracy"].get<double>();
  const bool d = dsc >= 0.5 && acc >= 0.75;
  const double minutes = (s.first_seconds + seconds_since(t0)) / 60.0;

  Outcome o;
  o.pass = a && b && c && d;
  o.detail = std::string("(a) ") + (a ? "ok" : "FAIL") + " loss median " + fmt("%.4g", m_first) + " -> " +
             fmt("%.4g", m_last) + "; (b) " + (b ? "ok" : "FAIL") + " sls " + fmt("%.4g", sls0) + " -> " +
             fmt("%.4g", sls1) + "; (c) " + (c ? "ok" : "FAIL") + " noise L1 " + fmt("%.4f", diversity) + " over " +
             std::to_string(sampled) + " frames; (d) " + (d ? "ok" : "FAIL") + " dice " + fmt("%.3f", dsc) +
             " (pooled " + fmt("%.3f", summary["pooled_dice"].get<double>()) + ") accuracy " + fmt("%.3f", acc) +
             " on " + std::to_string(summary["frames"].get<int>()) + " frames; " + fmt("%.1f min", minutes);
  return o;
}

Outcome determinism(const SmokeRuns& s) {
  if (!s.ok) return {false, s.error};
  const std::string csv1 = slurp(s.first / "losses.csv");
  const bool same_csv = !csv1.empty() && csv1 == slurp(s.second / "losses.csv");
  const bool same_ck = slurp(s.first / "checkpoints" / "final.ckpt") == slurp(s.second / "checkpoints" / "final.ckpt");
  const bool resumed_csv = csv1 == slurp(s.resumed / "losses.csv");
  const bool resumed_ck =
      slurp(s.first / "checkpoints" / "final.ckpt") == slurp(s.resumed / "checkpoints" / "final.ckpt");
  auto yn = [](bool v) { return v ? "identical" : "DIFFERENT"; };
  return {same_csv && resumed_csv && same_ck && resumed_ck,
          std::string("rerun csv ") + yn(same_csv) + ", checkpoint " + yn(same_ck) + "; resume@1000 csv " +
              yn(resumed_csv) + ", checkpoint " + yn(resumed_ck)};
}

// 7 -------------------------------------------------------------------------

Outcome wiring() {
  TrainConfig cfg;
  cfg.image_size = 64;
  cfg.model.base_channels = 16;
  cfg.model.disc_channels = 16;
  train::Trainer trainer(cfg);
  RandomStream rng(77);
  auto batch = [&] {
    Tensor<float> t(Shape{1, 3, 64, 64});
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(rng.uniform(-1, 1));
    return t;
  };
  train::InvocationAudit audit;
  trainer.step(batch(), batch(), &audit);
  int ok = 0;
  std::string failed;
  const auto checks = checks::audit_wiring(audit);
  for (const auto& c : checks) {
    if (c.ok)
      ++ok;
    else
      failed += " [" + c.name + ": " + c.detail + "]";
  }
  return {ok == static_cast<int>(checks.size()) && !checks.empty(),
          std::to_string(ok) + "/" + std::to_string(checks.size()) + " wiring checks over " +
              std::to_string(audit.calls.size()) + " recorded invocations" + failed};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lumen acceptance suite"};
  std::string work = (fs::temp_directory_path() / "lumen_acceptance").string();
  bool skip_smoke = false;
  app.add_option("--work", work, "Scratch directory for the smoke runs");
  app.add_flag("--skip-smoke", skip_smoke, "Report criteria 5 and 6 as skipped (counts as failure)");
  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, Outcome>> results;
  auto report = [&](const std::string& name, const Outcome& o) {
    std::cout << name << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
    results.emplace_back(name, o);
  };
  auto guarded = [](auto&& f) -> Outcome {
    try {
      return f();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  report("criterion 1 loss oracles", guarded(loss_oracles));
  report("criterion 2 gradients", guarded(gradients));
  report("criterion 3 visibility", guarded(visibility));
  report("criterion 4 metrics", guarded(metrics));
  if (skip_smoke) {
    report("criterion 5 smoke training", {false, "skipped"});
    report("criterion 6 determinism", {false, "skipped"});
  } else {
    SmokeRuns runs;
    try {
      runs = smoke_runs(work, true);
    } catch (const std::exception& e) {
      runs.error = std::string("exception: ") + e.what();
    }
    report("criterion 5 smoke training", guarded([&] { return smoke_training(runs, work); }));
    report("criterion 6 determinism", guarded([&] { return determinism(runs); }));
  }
  report("criterion 7 wiring", guarded(wiring));

  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.second.pass; });
  std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
  return passed == static_cast<long>(results.size()) ? 0 : 1;
}
