#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "l2a/tensor.hpp"

namespace l2a::features {

struct FeatureSpec {
  int frames = 8;             // uniformly subsampled frames
  int grid = 4;               // g x g pooling cells per frame
  bool allow_padding = true;  // permit T < frames (indices repeat)
};

/// Length of extract() output for videos with the given channel count.
std::size_t feature_dim(const FeatureSpec& spec, int channels);

/// Frame indices floor(i * T / frames), i = 0..frames-1.
std::vector<int> sample_frame_indices(int total_frames, int frames);

/// Pooled appearance block (frames x g x g x C cell means) followed by the
/// first-order temporal differences of those grids, L2-normalized. An
/// all-zero raw vector is returned unnormalized.
std::vector<double> extract(const VideoTensor& video, const FeatureSpec& spec = {});

/// [f_fg | y_fg | f_bg | y_bg].
std::vector<double> selector_input(std::span<const double> f_fg, std::span<const double> y_fg,
                                   std::span<const double> f_bg, std::span<const double> y_bg);

/// Per-dimension affine map to zero mean and variance 1/d (unit expected
/// squared norm), fitted once on a reference set. Constant dimensions are
/// centered and scaled by 1/sqrt(d) only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> inv_std;

  std::vector<double> apply(std::span<const double> x) const;
  bool empty() const { return mean.empty(); }
};

Standardizer fit_standardizer(const std::vector<std::vector<double>>& samples);

}  // namespace l2a::features
