#include "lumen/synth/dataset.hpp"

#include "lumen/random.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lumen::synth {

namespace fs = std::filesystem;

void DatasetConfig::validate() const {
  if (scenes < 1 || poses < 1) throw ConfigError("dataset: scenes and poses must be at least 1 (zero frames requested)");
  if (image_size < 8 || image_size % 4 != 0) throw ConfigError("dataset: image_size must be a multiple of 4, at least 8");
  if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1)
    throw ConfigError("dataset: split fractions must be non-negative and sum below 1");
  if (!(opacity >= 0 && opacity <= 1)) throw ConfigError("dataset: opacity must lie in [0, 1]");
  if (fold_amplitude_min < 0 || fold_amplitude_max > 0.8 || fold_amplitude_min > fold_amplitude_max)
    throw ConfigError("dataset: fold amplitude range must lie in [0, 0.8]");
  if (fold_period_min <= 0 || fold_period_min > fold_period_max) throw ConfigError("dataset: bad fold period range");
  if (fold_jitter_min > fold_jitter_max) throw ConfigError("dataset: bad fold jitter range");
  if (axial_steps < 8 || radial_steps < 8) throw ConfigError("dataset: mesh needs at least 8 axial and radial steps");
  if (!(fov > 0 && fov < 180)) throw ConfigError("dataset: fov must lie in (0, 180)");
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::vector<SceneAssignment> assign_scenes(const DatasetConfig& cfg) {
  const int n_val = static_cast<int>(std::lround(cfg.val_fraction * cfg.scenes));
  const int n_test = static_cast<int>(std::lround(cfg.test_fraction * cfg.scenes));
  const int n_train = cfg.scenes - n_val - n_test;
  if (n_train < 1) throw ConfigError("dataset: no scenes left for the training split");
  std::vector<SceneAssignment> out;
  for (int s = 0; s < cfg.scenes; ++s) {
    SceneAssignment a;
    a.index = s;
    a.split = s < n_train ? Split::train : (s < n_train + n_val ? Split::val : Split::test);
    a.vc_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(2 * s));
    a.oc_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(2 * s + 1));
    out.push_back(a);
  }
  return out;
}

TubeScene sample_scene(const DatasetConfig& cfg, std::uint64_t scene_seed) {
  RandomStream rng(derive_seed(scene_seed, 0x7363));
  TubeScene scene;
  scene.length = cfg.tube_length;
  scene.base_radius = cfg.tube_radius;
  scene.fold_amplitude = rng.uniform(cfg.fold_amplitude_min, cfg.fold_amplitude_max);
  scene.fold_period = rng.uniform(cfg.fold_period_min, cfg.fold_period_max);
  scene.fold_phase_jitter = rng.uniform(cfg.fold_jitter_min, cfg.fold_jitter_max);
  scene.seed = scene_seed;
  return scene;
}

TrajectoryOptions trajectory_options(const DatasetConfig& cfg, std::uint64_t scene_seed) {
  TrajectoryOptions t;
  t.poses = cfg.poses;
  t.start = 0.5;
  t.end_margin = std::min(4.0, 0.4 * cfg.tube_length);
  t.fov_deg = cfg.fov;
  t.lateral_jitter = cfg.lateral_jitter;
  t.direction_jitter = cfg.direction_jitter;
  t.seed = scene_seed;
  return t;
}

namespace {

std::string frame_name(const std::string& dir, int scene, int pose) {
  std::ostringstream os;
  os << dir << "_" << std::setw(3) << std::setfill('0') << scene << "_" << std::setw(3) << std::setfill('0') << pose;
  return os.str();
}

struct SceneRender {
  TubeScene scene;
  TriangleMesh mesh;
  CameraTrajectory trajectory;
};

SceneRender prepare(const DatasetConfig& cfg, std::uint64_t seed) {
  SceneRender r;
  r.scene = sample_scene(cfg, seed);
  r.mesh = build_mesh(r.scene, cfg.axial_steps, cfg.radial_steps);
  r.trajectory = make_trajectory(r.scene, trajectory_options(cfg, seed));
  VisibilityOptions vis;
  vis.mode = cfg.visibility;
  vis.image_size = cfg.image_size;
  mark_visibility(r.mesh, r.trajectory, vis);
  return r;
}

}  // namespace

std::vector<ManifestRow> generate_dataset(const DatasetConfig& cfg, const fs::path& root) {
  cfg.validate();
  const auto scenes = assign_scenes(cfg);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) throw ConfigError("dataset: cannot create output directory " + root.string());
  for (const char* split : {"train", "val", "test"})
    for (const char* dom : {"A", "B"}) {
      fs::create_directories(root / (std::string(split) + dom) / "masks", ec);
      if (ec) throw ConfigError("dataset: cannot create " + (root / (std::string(split) + dom)).string());
    }

  RenderOptions ropts;
  ropts.image_size = cfg.image_size;
  ropts.opacity = cfg.opacity;

  std::vector<ManifestRow> rows;
  for (const SceneAssignment& a : scenes) {
    const std::string split = split_name(a.split);
    for (const bool is_vc : {true, false}) {
      const std::uint64_t seed = is_vc ? a.vc_seed : a.oc_seed;
      const std::string dir = split + (is_vc ? "B" : "A");
      const SceneRender sr = prepare(cfg, seed);
      const MeshIntersector bvh(sr.mesh);
      for (int p = 0; p < cfg.poses; ++p) {
        const CameraPose& pose = sr.trajectory.poses[static_cast<std::size_t>(p)];
        const std::string id = frame_name(dir, a.index, p);
        const std::string image_rel = dir + "/" + id + ".png";
        const std::string mask_rel = dir + "/masks/" + id + ".png";
        // Every frame carries the exact mask of its own geometry; only the
        // evaluation splits consume the OC-side masks.
        VcFrame vc = render_vc_frame(bvh, sr.scene, pose, sr.mesh.visible, ropts);
        if (is_vc) {
          write_png(root / image_rel, vc.image);
        } else {
          const OcFrame oc = render_oc_frame(bvh, sr.scene, pose, derive_seed(seed, 1000 + static_cast<std::uint64_t>(p)), ropts);
          write_png(root / image_rel, oc.image);
        }
        write_png(root / mask_rel, vc.mask);
        rows.push_back({id, is_vc ? "vc" : "oc", seed, p, image_rel, mask_rel});
      }
    }
  }

  std::ofstream out(root / "manifest.csv");
  if (!out) throw ConfigError("dataset: cannot write manifest in " + root.string());
  out << kManifestHeader << "\n";
  for (const auto& r : rows)
    out << r.frame_id << "," << r.domain << "," << r.scene_seed << "," << r.pose_index << "," << r.image_path << ","
        << r.mask_path << "\n";
  return rows;
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kManifestHeader) throw ConfigError("unexpected manifest header in " + path.string());
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestRow r;
    std::string seed, pose;
    std::getline(ls, r.frame_id, ',');
    std::getline(ls, r.domain, ',');
    std::getline(ls, seed, ',');
    std::getline(ls, pose, ',');
    std::getline(ls, r.image_path, ',');
    std::getline(ls, r.mask_path, ',');
    r.scene_seed = std::stoull(seed);
    r.pose_index = std::stoi(pose);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace lumen::synth
