#pragma once

#include <span>
#include <vector>

#include "l2a/tensor.hpp"

namespace l2a::compositing {

/// Mirrors the compositing switches of the run configuration. All on is the
/// full pipeline; each off switch is one ablation.
struct CompositeFlags {
  bool inpaint = true;       // off: background objects are left in place
  bool segmentation = true;  // off: paste the per-frame bounding box of the mask
  bool objects = true;       // off: paste the actor only, leaving props behind
};

struct CompositeResult {
  VideoTensor video;
  std::vector<double> label;
  double gamma = 0.0;
  double lambda = 0.0;
};

inline constexpr double kDefaultAlpha = 4.0;

/// Removes masked pixels from bg and fills them. With inpaint on, each masked
/// pixel takes the temporal median of its unmasked values (mean of the middle
/// two for an even count); pixels masked in every frame take the value of the
/// nearest unmasked pixel in the same frame (Euclidean, row-major tie-break).
/// With inpaint off, bg is returned unchanged.
VideoTensor remove_and_fill(const VideoTensor& bg, const MaskTensor& bg_mask, bool inpaint);

/// fg where mask = 1, bg_clean elsewhere.
VideoTensor composite(const VideoTensor& fg, const MaskTensor& fg_mask, const VideoTensor& bg_clean);

/// Fraction of mask pixels set, sum(M) / (T H W).
double foreground_ratio(const MaskTensor& mask);

/// 1 - (1 - gamma)^alpha.
double mixing_weight(double gamma, double alpha = kDefaultAlpha);

/// lambda * y_f + (1 - lambda) * y_b.
std::vector<double> mix_labels(std::span<const double> y_f, std::span<const double> y_b, double lambda);

/// Per-frame tight bounding box of the mask, filled with ones.
MaskTensor bounding_box_mask(const MaskTensor& mask);

struct CompositeInput {
  const VideoTensor& video;
  const MaskTensor& mask;        // all objects
  const MaskTensor& actor_mask;  // actor only
  std::span<const double> label;
};

/// Full pair pipeline: clean the background, paste the foreground, mix labels.
CompositeResult composite_pair(const CompositeInput& fg, const CompositeInput& bg, const CompositeFlags& flags,
                               double alpha = kDefaultAlpha);

}  // namespace l2a::compositing
