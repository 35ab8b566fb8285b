#include "l2a/features.hpp"

#include <cmath>

#include "l2a/common.hpp"

namespace l2a::features {

std::size_t feature_dim(const FeatureSpec& spec, int channels) {
  const auto cells = static_cast<std::size_t>(spec.grid) * spec.grid * channels;
  return cells * spec.frames + cells * (spec.frames - 1);
}

std::vector<int> sample_frame_indices(int total_frames, int frames) {
  std::vector<int> idx(frames);
  for (int i = 0; i < frames; ++i) {
    idx[i] = static_cast<int>((static_cast<long long>(i) * total_frames) / frames);
  }
  return idx;
}

std::vector<double> extract(const VideoTensor& video, const FeatureSpec& spec) {
  if (video.size() == 0) throw ShapeError("cannot extract features from an empty video");
  if (spec.frames < 1 || spec.grid < 1) throw ConfigError("feature spec needs frames >= 1 and grid >= 1");
  if (video.frames() < spec.frames && !spec.allow_padding) {
    throw ShapeError("video has fewer frames than the feature spec samples");
  }
  if (video.height() < spec.grid || video.width() < spec.grid) {
    throw ShapeError("video is smaller than the pooling grid");
  }
  const int g = spec.grid;
  const int ch = video.channels();
  const std::size_t cells = static_cast<std::size_t>(g) * g * ch;
  const auto frames = sample_frame_indices(video.frames(), spec.frames);

  std::vector<double> out(feature_dim(spec, ch), 0.0);
  for (int i = 0; i < spec.frames; ++i) {
    const int t = frames[i];
    double* grid = out.data() + i * cells;
    for (int gy = 0; gy < g; ++gy) {
      const int y0 = gy * video.height() / g;
      const int y1 = (gy + 1) * video.height() / g;
      for (int gx = 0; gx < g; ++gx) {
        const int x0 = gx * video.width() / g;
        const int x1 = (gx + 1) * video.width() / g;
        const double area = static_cast<double>((y1 - y0) * (x1 - x0));
        for (int c = 0; c < ch; ++c) {
          double sum = 0.0;
          for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) sum += video.at(t, y, x, c);
          }
          grid[(gy * g + gx) * ch + c] = sum / area;
        }
      }
    }
  }
  double* diffs = out.data() + spec.frames * cells;
  for (int i = 0; i + 1 < spec.frames; ++i) {
    for (std::size_t k = 0; k < cells; ++k) {
      diffs[i * cells + k] = out[(i + 1) * cells + k] - out[i * cells + k];
    }
  }

  double norm = 0.0;
  for (double v : out) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& v : out) v /= norm;
  }
  return out;
}

std::vector<double> selector_input(std::span<const double> f_fg, std::span<const double> y_fg,
                                   std::span<const double> f_bg, std::span<const double> y_bg) {
  if (f_fg.size() != f_bg.size()) throw ShapeError("foreground and background features differ in dimension");
  if (y_fg.size() != y_bg.size()) throw ShapeError("foreground and background labels differ in dimension");
  std::vector<double> out;
  out.reserve(2 * f_fg.size() + 2 * y_fg.size());
  out.insert(out.end(), f_fg.begin(), f_fg.end());
  out.insert(out.end(), y_fg.begin(), y_fg.end());
  out.insert(out.end(), f_bg.begin(), f_bg.end());
  out.insert(out.end(), y_bg.begin(), y_bg.end());
  return out;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw ShapeError("standardizer dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) * inv_std[i];
  return out;
}

Standardizer fit_standardizer(const std::vector<std::vector<double>>& samples) {
  if (samples.empty()) throw ShapeError("cannot fit a standardizer on no samples");
  const std::size_t d = samples.front().size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.inv_std.assign(d, 1.0);
  for (const auto& x : samples) {
    if (x.size() != d) throw ShapeError("samples differ in dimension");
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += x[i];
  }
  const double n = static_cast<double>(samples.size());
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& x : samples) {
    for (std::size_t i = 0; i < d; ++i) var[i] += (x[i] - s.mean[i]) * (x[i] - s.mean[i]);
  }
  const double unit = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < d; ++i) {
    const double sd = std::sqrt(var[i] / n);
    s.inv_std[i] = sd > 1e-12 ? unit / sd : unit;
  }
  return s;
}

}  // namespace l2a::features
