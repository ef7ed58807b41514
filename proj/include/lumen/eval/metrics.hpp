#pragma once

#include "lumen/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lumen::eval {

inline constexpr double kDefaultTau = 0.2;

/// Pixel is missed when, on the [0, 1] channel scale, green exceeds the
/// larger of red and blue by more than tau.
MissedMask binarize_missed(const RgbImage& image, double tau = kDefaultTau);

/// Same rule on a (N, 3, H, W) tensor in [-1, 1].
template <typename Scalar>
MissedMask binarize_missed(const Tensor<Scalar>& image, Index n = 0, double tau = kDefaultTau) {
  const Shape s = image.shape();
  if (s.c != 3) throw ConfigError("binarize_missed: expected 3 channels, got " + s.str());
  MissedMask out(s.h, s.w);
  for (Index y = 0; y < s.h; ++y)
    for (Index x = 0; x < s.w; ++x) {
      const double r = (image(n, 0, y, x) + 1.0) * 0.5;
      const double g = (image(n, 1, y, x) + 1.0) * 0.5;
      const double b = (image(n, 2, y, x) + 1.0) * 0.5;
      out.at(y, x) = g - std::max(r, b) > tau ? 1 : 0;
    }
  return out;
}

struct Confusion {
  Index tp = 0, tn = 0, fp = 0, fn = 0;
};

Confusion confusion(const MissedMask& pred, const MissedMask& gt);

/// (TP + TN) / pixel count.
double pixel_accuracy(const MissedMask& pred, const MissedMask& gt);

/// 2 |pred & gt| / (|pred| + |gt|); two empty masks score 1.
double dice(const MissedMask& pred, const MissedMask& gt);

/// Mean Dice between consecutive masks of one trajectory.
double temporal_stability(const std::vector<MissedMask>& masks);

/// Alpha-blends green (alpha 0.5) into the masked pixels; others are untouched.
RgbImage overlay(const RgbImage& oc_input, const MissedMask& mask, double alpha = 0.5);

struct FrameMetrics {
  std::string frame_id;
  double accuracy = 0;
  double dice = 0;
  Index pred_pixels = 0;
  Index gt_pixels = 0;
};

struct MetricsReport {
  double accuracy = 0;         // mean of per-frame accuracies
  double dice = 0;             // mean of per-frame Dice
  double pooled_accuracy = 0;  // over all pixels of all frames
  double pooled_dice = 0;
  Index frame_count = 0;
  std::vector<FrameMetrics> frames;

  void add(const std::string& id, const MissedMask& pred, const MissedMask& gt);
  void finalize();

  std::string to_json() const;
  std::string to_csv() const;

 private:
  Confusion pooled_;
};

}  // namespace lumen::eval
