#include "l2a/compositing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "l2a/common.hpp"

namespace l2a::compositing {

namespace {

// Value of the nearest unmasked pixel of frame t, or nullopt when the whole
// frame is masked.
std::optional<std::pair<int, int>> nearest_unmasked(const MaskTensor& mask, int t, int y, int x) {
  long best = std::numeric_limits<long>::max();
  std::optional<std::pair<int, int>> hit;
  for (int yy = 0; yy < mask.height(); ++yy) {
    for (int xx = 0; xx < mask.width(); ++xx) {
      if (mask.at(t, yy, xx)) continue;
      const long d = static_cast<long>(yy - y) * (yy - y) + static_cast<long>(xx - x) * (xx - x);
      if (d < best) {  // strict: first in row-major order wins ties
        best = d;
        hit = std::make_pair(yy, xx);
      }
    }
  }
  return hit;
}

}  // namespace

VideoTensor remove_and_fill(const VideoTensor& bg, const MaskTensor& bg_mask, bool inpaint) {
  if (!same_grid(bg, bg_mask)) throw ShapeError("background mask does not match background video");
  if (!inpaint) return bg;

  VideoTensor out = bg;
  const int T = bg.frames();
  std::vector<double> values;
  values.reserve(T);
  for (int y = 0; y < bg.height(); ++y) {
    for (int x = 0; x < bg.width(); ++x) {
      bool any_masked = false;
      for (int t = 0; t < T; ++t) any_masked = any_masked || bg_mask.at(t, y, x);
      if (!any_masked) continue;

      for (int c = 0; c < bg.channels(); ++c) {
        values.clear();
        for (int t = 0; t < T; ++t) {
          if (!bg_mask.at(t, y, x)) values.push_back(bg.at(t, y, x, c));
        }
        if (values.empty()) {
          for (int t = 0; t < T; ++t) {
            const auto src = nearest_unmasked(bg_mask, t, y, x);
            // Fully masked frame: nothing to borrow from, leave as black.
            out.at(t, y, x, c) = src ? bg.at(t, src->first, src->second, c) : 0.0f;
          }
          continue;
        }
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();
        const double median = (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
        for (int t = 0; t < T; ++t) {
          if (bg_mask.at(t, y, x)) out.at(t, y, x, c) = static_cast<float>(median);
        }
      }
    }
  }
  return out;
}

VideoTensor composite(const VideoTensor& fg, const MaskTensor& fg_mask, const VideoTensor& bg_clean) {
  if (!same_shape(fg, bg_clean)) throw ShapeError("foreground and background videos differ in shape");
  if (!same_grid(fg, fg_mask)) throw ShapeError("foreground mask does not match foreground video");
  VideoTensor out = bg_clean;
  for (int t = 0; t < fg.frames(); ++t) {
    for (int y = 0; y < fg.height(); ++y) {
      for (int x = 0; x < fg.width(); ++x) {
        if (!fg_mask.at(t, y, x)) continue;
        for (int c = 0; c < fg.channels(); ++c) out.at(t, y, x, c) = fg.at(t, y, x, c);
      }
    }
  }
  return out;
}

double foreground_ratio(const MaskTensor& mask) {
  return static_cast<double>(mask.count()) / static_cast<double>(mask.size());
}

double mixing_weight(double gamma, double alpha) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("foreground ratio must lie in [0,1]");
  return 1.0 - std::pow(1.0 - gamma, alpha);
}

std::vector<double> mix_labels(std::span<const double> y_f, std::span<const double> y_b, double lambda) {
  if (y_f.size() != y_b.size()) throw ShapeError("labels differ in dimension");
  if (!is_simplex(y_f) || !is_simplex(y_b)) throw DomainError("labels must lie on the simplex");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("mixing weight must lie in [0,1]");
  std::vector<double> out(y_f.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = lambda * y_f[k] + (1.0 - lambda) * y_b[k];
  return out;
}

MaskTensor bounding_box_mask(const MaskTensor& mask) {
  MaskTensor box(mask.frames(), mask.height(), mask.width());
  for (int t = 0; t < mask.frames(); ++t) {
    int y0 = mask.height(), y1 = -1, x0 = mask.width(), x1 = -1;
    for (int y = 0; y < mask.height(); ++y) {
      for (int x = 0; x < mask.width(); ++x) {
        if (!mask.at(t, y, x)) continue;
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
      }
    }
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) box.at(t, y, x) = 1;
    }
  }
  return box;
}

CompositeResult composite_pair(const CompositeInput& fg, const CompositeInput& bg, const CompositeFlags& flags,
                               double alpha) {
  if (!same_shape(fg.video, bg.video)) throw ShapeError("pair videos differ in shape");
  const VideoTensor clean = remove_and_fill(bg.video, bg.mask, flags.inpaint);
  const MaskTensor& objects = flags.objects ? fg.mask : fg.actor_mask;
  const MaskTensor paste = flags.segmentation ? objects : bounding_box_mask(objects);

  CompositeResult result;
  result.video = composite(fg.video, paste, clean);
  result.gamma = foreground_ratio(paste);
  result.lambda = mixing_weight(result.gamma, alpha);
  result.label = mix_labels(fg.label, bg.label, result.lambda);
  return result;
}

}  // namespace l2a::compositing
