#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "l2a/common.hpp"
#include "l2a/compositing.hpp"
#include "l2a/synthworld.hpp"

using namespace l2a;
using namespace l2a::compositing;

namespace {

VideoTensor random_video(Rng& rng, int t, int h, int w, int c) {
  VideoTensor v(t, h, w, c);
  for (auto& x : v.data()) x = static_cast<float>(rng.uniform());
  return v;
}

MaskTensor random_mask(Rng& rng, int t, int h, int w, double p) {
  MaskTensor m(t, h, w);
  for (auto& b : m.data()) b = rng.bernoulli(p) ? 1 : 0;
  return m;
}

// Per-pixel reference for remove_and_fill with inpainting on.
VideoTensor fill_oracle(const VideoTensor& bg, const MaskTensor& mask) {
  VideoTensor out = bg;
  const int T = bg.frames(), H = bg.height(), W = bg.width(), C = bg.channels();
  for (int t = 0; t < T; ++t) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        if (!mask.at(t, y, x)) continue;
        for (int c = 0; c < C; ++c) {
          std::vector<float> seen;
          for (int s = 0; s < T; ++s) {
            if (!mask.at(s, y, x)) seen.push_back(bg.at(s, y, x, c));
          }
          if (!seen.empty()) {
            std::sort(seen.begin(), seen.end());
            const auto n = seen.size();
            out.at(t, y, x, c) = n % 2 ? seen[n / 2] : static_cast<float>((double(seen[n / 2 - 1]) + seen[n / 2]) / 2);
            continue;
          }
          double best = std::numeric_limits<double>::infinity();
          float value = 0.0f;
          for (int yy = 0; yy < H; ++yy) {
            for (int xx = 0; xx < W; ++xx) {
              if (mask.at(t, yy, xx)) continue;
              const double d = double(yy - y) * (yy - y) + double(xx - x) * (xx - x);
              if (d < best) {
                best = d;
                value = bg.at(t, yy, xx, c);
              }
            }
          }
          out.at(t, y, x, c) = value;
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("Eq1 blend on a 1x2x2x1 example") {
  VideoTensor fg(1, 2, 2, 1), bg(1, 2, 2, 1, 1.0f);
  const float fv[] = {0.2f, 0.4f, 0.6f, 0.8f};
  std::copy(std::begin(fv), std::end(fv), fg.data().begin());
  MaskTensor m(1, 2, 2);
  m.at(0, 0, 0) = 1;
  m.at(0, 1, 1) = 1;
  const auto out = composite(fg, m, bg);
  CHECK(out.at(0, 0, 0, 0) == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(out.at(0, 0, 1, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(out.at(0, 1, 0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(out.at(0, 1, 1, 0) == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("blend endpoints and pixel partition") {
  Rng rng(3);
  const auto fg = random_video(rng, 3, 5, 4, 3);
  const auto bg = random_video(rng, 3, 5, 4, 3);
  CHECK(composite(fg, MaskTensor(3, 5, 4, 1), bg) == fg);
  CHECK(composite(fg, MaskTensor(3, 5, 4, 0), bg) == bg);
  const auto m = random_mask(rng, 3, 5, 4, 0.5);
  const auto out = composite(fg, m, bg);
  for (int t = 0; t < 3; ++t)
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 4; ++x)
        for (int c = 0; c < 3; ++c) CHECK(out.at(t, y, x, c) == (m.at(t, y, x) ? fg : bg).at(t, y, x, c));
  CHECK_THROWS_AS(composite(fg, MaskTensor(3, 5, 5), bg), ShapeError);
}

TEST_CASE("fill takes the temporal median") {
  VideoTensor bg(3, 1, 1, 1);
  bg.at(0, 0, 0, 0) = 0.1f;
  bg.at(1, 0, 0, 0) = 0.9f;
  bg.at(2, 0, 0, 0) = 0.3f;
  MaskTensor m(3, 1, 1);
  m.at(1, 0, 0) = 1;
  const auto out = remove_and_fill(bg, m, true);
  CHECK(out.at(1, 0, 0, 0) == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(out.at(0, 0, 0, 0) == bg.at(0, 0, 0, 0));
  CHECK(out.at(2, 0, 0, 0) == bg.at(2, 0, 0, 0));
}

TEST_CASE("fill identities") {
  Rng rng(4);
  const auto bg = random_video(rng, 3, 4, 4, 2);
  CHECK(remove_and_fill(bg, MaskTensor(3, 4, 4), true) == bg);
  CHECK(remove_and_fill(bg, random_mask(rng, 3, 4, 4, 0.5), false) == bg);
}

TEST_CASE("fill matches the brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto bg = random_video(rng, 3, 4, 4, 2);
    auto m = random_mask(rng, 3, 4, 4, 0.45);
    if (seed % 4 == 0) {
      // a pixel masked in every frame exercises the spatial fallback
      for (int t = 0; t < 3; ++t) m.at(t, 1, 2) = 1;
    }
    const auto got = remove_and_fill(bg, m, true);
    const auto want = fill_oracle(bg, m);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data()[i] == want.data()[i]);
  }
}

TEST_CASE("fallback ties resolve in row-major order") {
  VideoTensor bg(1, 3, 3, 1);
  bg.at(0, 0, 1, 0) = 0.25f;  // up
  bg.at(0, 1, 0, 0) = 0.5f;   // left
  bg.at(0, 1, 2, 0) = 0.75f;  // right
  bg.at(0, 2, 1, 0) = 1.0f;   // down
  MaskTensor m(1, 3, 3);
  m.at(0, 1, 1) = 1;
  CHECK(remove_and_fill(bg, m, true).at(0, 1, 1, 0) == 0.25f);
}

TEST_CASE("foreground ratio") {
  CHECK(foreground_ratio(MaskTensor(2, 3, 3, 0)) == 0.0);
  CHECK(foreground_ratio(MaskTensor(2, 3, 3, 1)) == 1.0);
  MaskTensor m(1, 2, 2, 1);
  m.at(0, 0, 1) = 0;
  CHECK(foreground_ratio(m) == 0.75);
}

TEST_CASE("mixing weight") {
  CHECK(mixing_weight(0.0) == 0.0);
  CHECK(mixing_weight(1.0) == 1.0);
  CHECK(mixing_weight(0.5) == 0.9375);
  CHECK(mixing_weight(0.75) == doctest::Approx(0.99609375).epsilon(1e-12));
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double g = i / 1000.0;
    const double l = mixing_weight(g);
    CHECK(l >= g);
    CHECK(l >= prev);
    prev = l;
  }
  CHECK_THROWS_AS(mixing_weight(1.5), DomainError);
  CHECK_THROWS_AS(mixing_weight(-0.1), DomainError);
}

TEST_CASE("label mixing") {
  const auto y2 = one_hot(2, 8);
  const auto y5 = one_hot(5, 8);
  const auto mixed = mix_labels(y2, y5, 0.9375);
  CHECK(mixed[2] == doctest::Approx(0.9375).epsilon(1e-6));
  CHECK(mixed[5] == doctest::Approx(0.0625).epsilon(1e-6));
  CHECK(mix_labels(y2, y5, 1.0) == y2);
  CHECK(mix_labels(y2, y5, 0.0) == y5);

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(6), b(6);
    double sa = 0, sb = 0;
    for (int k = 0; k < 6; ++k) {
      a[k] = rng.uniform();
      b[k] = rng.uniform();
      sa += a[k];
      sb += b[k];
    }
    for (int k = 0; k < 6; ++k) {
      a[k] /= sa;
      b[k] /= sb;
    }
    CHECK(is_simplex(mix_labels(a, b, 0.3)));
  }
  CHECK_THROWS_AS(mix_labels(y2, one_hot(0, 3), 0.5), ShapeError);
  CHECK_THROWS_AS(mix_labels(std::vector<double>{0.7, 0.7}, std::vector<double>{1, 0}, 0.5), DomainError);
}

TEST_CASE("bounding box mask") {
  MaskTensor m(2, 5, 6);
  m.at(0, 1, 2) = 1;
  m.at(0, 3, 4) = 1;
  m.at(1, 4, 0) = 1;
  const auto box = bounding_box_mask(m);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) {
      CHECK(box.at(0, y, x) == (y >= 1 && y <= 3 && x >= 2 && x <= 4 ? 1 : 0));
      CHECK(box.at(1, y, x) == (y == 4 && x == 0 ? 1 : 0));
    }
  }
  CHECK(bounding_box_mask(box) == box);
  CHECK(bounding_box_mask(MaskTensor(1, 3, 3)) == MaskTensor(1, 3, 3));
}

TEST_CASE("self-composite") {
  synthworld::WorldSpec spec;
  const auto s = synthworld::render_sample(spec, 0, 0);
  const auto y = one_hot(0, spec.classes);
  const CompositeInput in{s.tensors.video, s.tensors.mask, s.tensors.actor_mask, y};
  const auto r = composite_pair(in, in, {});
  const auto clean = remove_and_fill(s.tensors.video, s.tensors.mask, true);
  for (int t = 0; t < spec.frames; ++t)
    for (int yy = 0; yy < spec.height; ++yy)
      for (int x = 0; x < spec.width; ++x)
        for (int c = 0; c < spec.channels; ++c)
          CHECK(r.video.at(t, yy, x, c) == (s.tensors.mask.at(t, yy, x) ? s.tensors.video : clean).at(t, yy, x, c));
  CHECK(r.label == y);
}

TEST_CASE("pipeline equals its parts") {
  synthworld::WorldSpec spec;
  const auto a = synthworld::render_sample(spec, 0, 1);
  const auto b = synthworld::render_sample(spec, 1, 2);
  const auto ya = one_hot(0, spec.classes);
  const auto yb = one_hot(1, spec.classes);
  const CompositeInput fa{a.tensors.video, a.tensors.mask, a.tensors.actor_mask, ya};
  const CompositeInput fb{b.tensors.video, b.tensors.mask, b.tensors.actor_mask, yb};

  for (int bits = 0; bits < 8; ++bits) {
    CompositeFlags flags{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
    CAPTURE(bits);
    const auto r = composite_pair(fa, fb, flags);
    const VideoTensor clean = flags.inpaint ? fill_oracle(b.tensors.video, b.tensors.mask) : b.tensors.video;
    MaskTensor paste = flags.objects ? a.tensors.mask : a.tensors.actor_mask;
    if (!flags.segmentation) paste = bounding_box_mask(paste);
    std::size_t ones = 0;
    for (int t = 0; t < spec.frames; ++t)
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
          ones += paste.at(t, y, x);
          for (int c = 0; c < spec.channels; ++c)
            CHECK(r.video.at(t, y, x, c) == (paste.at(t, y, x) ? a.tensors.video : clean).at(t, y, x, c));
        }
    const double gamma = double(ones) / double(paste.size());
    const double lambda = 1.0 - std::pow(1.0 - gamma, 4.0);
    CHECK(r.gamma == doctest::Approx(gamma).epsilon(1e-12));
    CHECK(r.lambda == doctest::Approx(lambda).epsilon(1e-12));
    CHECK(r.label[0] == doctest::Approx(lambda).epsilon(1e-12));
    CHECK(r.label[1] == doctest::Approx(1.0 - lambda).epsilon(1e-12));
    CHECK(r.lambda >= r.gamma);
  }
}

TEST_CASE("bounding-box paste covers the mask extents") {
  synthworld::WorldSpec spec;
  const auto a = synthworld::render_sample(spec, 2, 5);
  const auto b = synthworld::render_sample(spec, 3, 6);
  const auto y = one_hot(0, spec.classes);
  const CompositeInput fa{a.tensors.video, a.tensors.mask, a.tensors.actor_mask, y};
  const CompositeInput fb{b.tensors.video, b.tensors.mask, b.tensors.actor_mask, y};
  CompositeFlags flags;
  flags.segmentation = false;
  const auto r = composite_pair(fa, fb, flags);
  const auto box = bounding_box_mask(a.tensors.mask);
  CHECK(r.gamma == foreground_ratio(box));
  CHECK(r.gamma >= foreground_ratio(a.tensors.mask));
}
