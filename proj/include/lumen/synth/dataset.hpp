#pragma once

#include "lumen/synth/render.hpp"
#include "lumen/synth/visibility.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lumen::synth {

struct DatasetConfig {
  int scenes = 4;
  int poses = 50;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  int image_size = 64;
  std::uint64_t seed = 7;
  int axial_steps = 192;
  int radial_steps = 64;
  double fov = 90.0;
  double opacity = 0.6;
  double tube_length = 14.0;
  double tube_radius = 1.0;
  double fold_amplitude_min = 0.35;
  double fold_amplitude_max = 0.65;
  double fold_period_min = 1.6;
  double fold_period_max = 2.6;
  double fold_jitter_min = 0.2;
  double fold_jitter_max = 0.9;
  double lateral_jitter = 0.15;
  double direction_jitter = 8.0;
  VisibilityMode visibility = VisibilityMode::centroid;

  void validate() const;
};

enum class Split { train, val, test };

struct SceneAssignment {
  int index = 0;
  Split split = Split::train;
  std::uint64_t vc_seed = 0;  // domain B geometry
  std::uint64_t oc_seed = 0;  // domain A geometry
};

/// Scene order is train, then val, then test; val and test take
/// round(fraction * scenes) scenes each.
std::vector<SceneAssignment> assign_scenes(const DatasetConfig& cfg);

/// Scene geometry drawn from a scene seed within the configured ranges.
TubeScene sample_scene(const DatasetConfig& cfg, std::uint64_t scene_seed);
TrajectoryOptions trajectory_options(const DatasetConfig& cfg, std::uint64_t scene_seed);

struct ManifestRow {
  std::string frame_id;
  std::string domain;  // "oc" (A) or "vc" (B)
  std::uint64_t scene_seed = 0;
  int pose_index = 0;
  std::string image_path;  // relative to the dataset root
  std::string mask_path;
};

inline constexpr const char* kManifestHeader = "frame_id,domain,scene_seed,pose_index,image_path,mask_path";

/// Renders every split into <root>/{trainA,trainB,valA,valB,testA,testB}
/// (A = OC, B = VC), masks under <dir>/masks, and writes <root>/manifest.csv.
/// OC and VC frames of one scene index come from different geometries, so the
/// training split is unpaired.
std::vector<ManifestRow> generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& root);

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

std::string split_name(Split s);

}  // namespace lumen::synth
