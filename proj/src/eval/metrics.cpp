#include "lumen/eval/metrics.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace lumen::eval {

namespace {
void require_same_dims(const MissedMask& a, const MissedMask& b, const char* what) {
  if (a.height != b.height || a.width != b.width)
    throw ConfigError(std::string(what) + ": mask dims differ (" + std::to_string(a.height) + "x" +
                      std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
}

double dice_from(const Confusion& c) {
  const Index denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}
}  // namespace

MissedMask binarize_missed(const RgbImage& image, double tau) {
  MissedMask out(image.height, image.width);
  for (Index y = 0; y < image.height; ++y)
    for (Index x = 0; x < image.width; ++x) {
      const double g = image.at(1, y, x);
      const double other = std::max(image.at(0, y, x), image.at(2, y, x));
      out.at(y, x) = g - other > tau ? 1 : 0;
    }
  return out;
}

Confusion confusion(const MissedMask& pred, const MissedMask& gt) {
  require_same_dims(pred, gt, "confusion");
  Confusion c;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0, g = gt.bits[i] != 0;
    if (p && g) ++c.tp;
    else if (!p && !g) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

double pixel_accuracy(const MissedMask& pred, const MissedMask& gt) {
  require_same_dims(pred, gt, "pixel_accuracy");
  const Confusion c = confusion(pred, gt);
  const Index d = pred.height * pred.width;
  if (d == 0) throw ConfigError("pixel_accuracy: empty masks");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(d);
}

double dice(const MissedMask& pred, const MissedMask& gt) {
  require_same_dims(pred, gt, "dice");
  return dice_from(confusion(pred, gt));
}

double temporal_stability(const std::vector<MissedMask>& masks) {
  if (masks.size() < 2) throw ConfigError("temporal_stability: need at least two frames");
  double total = 0;
  for (std::size_t i = 1; i < masks.size(); ++i) total += dice(masks[i - 1], masks[i]);
  return total / static_cast<double>(masks.size() - 1);
}

RgbImage overlay(const RgbImage& oc_input, const MissedMask& mask, double alpha) {
  if (oc_input.height != mask.height || oc_input.width != mask.width) throw ConfigError("overlay: image and mask dims differ");
  RgbImage out = oc_input;
  const float a = static_cast<float>(alpha);
  for (Index y = 0; y < mask.height; ++y)
    for (Index x = 0; x < mask.width; ++x) {
      if (!mask.at(y, x)) continue;
      out.at(0, y, x) = (1 - a) * out.at(0, y, x);
      out.at(1, y, x) = (1 - a) * out.at(1, y, x) + a;
      out.at(2, y, x) = (1 - a) * out.at(2, y, x);
    }
  return out;
}

void MetricsReport::add(const std::string& id, const MissedMask& pred, const MissedMask& gt) {
  const Confusion c = confusion(pred, gt);
  FrameMetrics f;
  f.frame_id = id;
  f.accuracy = pixel_accuracy(pred, gt);
  f.dice = dice_from(c);
  f.pred_pixels = c.tp + c.fp;
  f.gt_pixels = c.tp + c.fn;
  frames.push_back(f);
  pooled_.tp += c.tp;
  pooled_.tn += c.tn;
  pooled_.fp += c.fp;
  pooled_.fn += c.fn;
}

void MetricsReport::finalize() {
  frame_count = static_cast<Index>(frames.size());
  accuracy = dice = 0;
  for (const auto& f : frames) {
    accuracy += f.accuracy;
    dice += f.dice;
  }
  if (frame_count > 0) {
    accuracy /= static_cast<double>(frame_count);
    dice /= static_cast<double>(frame_count);
  }
  const Index total = pooled_.tp + pooled_.tn + pooled_.fp + pooled_.fn;
  pooled_accuracy = total ? static_cast<double>(pooled_.tp + pooled_.tn) / static_cast<double>(total) : 0.0;
  pooled_dice = dice_from(pooled_);
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["dice"] = dice;
  j["pooled_accuracy"] = pooled_accuracy;
  j["pooled_dice"] = pooled_dice;
  j["frame_count"] = frame_count;
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "frame_id,accuracy,dice,pred_pixels,gt_pixels\n";
  char buf[64];
  for (const auto& f : frames) {
    os << f.frame_id;
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f", f.accuracy, f.dice);
    os << buf << "," << f.pred_pixels << "," << f.gt_pixels << "\n";
  }
  return os.str();
}

}  // namespace lumen::eval
