#include "l2a/synthworld.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <string>

#include "l2a/common.hpp"
#include "l2a/semmatch.hpp"

namespace l2a::synthworld {

namespace {

using Color = std::array<double, 3>;

Color hsv(double h, double s, double v) {
  h = h - std::floor(h);
  const double k[3] = {5.0, 3.0, 1.0};
  Color out{};
  for (int i = 0; i < 3; ++i) {
    const double kk = std::fmod(k[i] + h * 6.0, 6.0);
    out[i] = v - v * s * std::clamp(std::min(kk, 4.0 - kk), 0.0, 1.0);
  }
  return out;
}

double channel(const Color& c, int ch) { return c[ch % 3]; }

double wrap_delta(double d, int period) {
  const double p = static_cast<double>(period);
  d = std::fmod(d, p);
  if (d < -p / 2.0) d += p;
  if (d >= p / 2.0) d -= p;
  return d;
}

enum class Shape { Disk, Square, Diamond };

bool inside(Shape shape, double dx, double dy, double r) {
  switch (shape) {
    case Shape::Disk: return dx * dx + dy * dy <= r * r;
    case Shape::Square: return std::fabs(dx) <= r * 0.85 && std::fabs(dy) <= r * 0.85;
    case Shape::Diamond: return std::fabs(dx) + std::fabs(dy) <= r * 1.2;
  }
  return false;
}

struct FamilyLook {
  Color bg_low;
  Color bg_high;
  double stripe_angle = 0.0;
  double stripe_freq = 1.0;
  double stripe_phase = 0.0;
  double heading = 0.0;  // actors run across the stripes
  Color actor;
  Color prop;
  Shape shape = Shape::Disk;
};

FamilyLook family_look(const WorldSpec& spec, int family) {
  Rng rng(derive_seed(spec.seed, "family", static_cast<std::uint64_t>(family)));
  FamilyLook look;
  const double hue = static_cast<double>(family) / spec.families + rng.uniform(-0.03, 0.03);
  const Color base = hsv(hue, 0.7, 0.55);
  for (int c = 0; c < 3; ++c) {
    look.bg_low[c] = std::clamp(base[c] - spec.texture_contrast / 2.0, 0.0, 1.0);
    look.bg_high[c] = std::clamp(base[c] + spec.texture_contrast / 2.0, 0.0, 1.0);
  }
  look.stripe_angle = std::numbers::pi * (static_cast<double>(family) / spec.families) + rng.uniform(-0.1, 0.1);
  look.stripe_freq = rng.uniform(0.6, 1.1);
  look.stripe_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  look.heading = look.stripe_angle + (rng.bernoulli(0.5) ? 0.0 : std::numbers::pi);
  look.actor = hsv(hue + 0.08, 0.5, 0.95);
  look.prop = hsv(hue - 0.08, 0.3, 0.2);
  look.shape = static_cast<Shape>(family % 3);
  return look;
}

Color class_tint(const WorldSpec& spec, int class_pos) {
  Rng rng(derive_seed(spec.seed, "tint", static_cast<std::uint64_t>(class_pos)));
  Color t{};
  double n = 0.0;
  for (auto& v : t) {
    v = rng.normal();
    n += v * v;
  }
  n = std::sqrt(n);
  for (auto& v : t) v = spec.tint_strength * v / n;
  return t;
}

// Speed of the actor for the k-th class of a family with m members.
double class_speed(const WorldSpec& spec, int class_pos) {
  const auto mates = family_mates(spec, class_pos);
  const int m = static_cast<int>(mates.size()) + 1;
  int k = 0;
  for (int other : mates) k += other < class_pos ? 1 : 0;
  return m == 1 ? spec.actor_speed : spec.actor_speed * static_cast<double>(k) / (m - 1);
}

std::vector<std::vector<double>> make_embeddings(const WorldSpec& spec) {
  const int dim = spec.embedding_dim;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Rng rng(derive_seed(spec.seed, "embeddings", static_cast<std::uint64_t>(attempt)));
    std::vector<std::vector<double>> centroids(spec.families, std::vector<double>(dim));
    for (auto& c : centroids) {
      double n = 0.0;
      for (auto& v : c) {
        v = rng.normal();
        n += v * v;
      }
      for (auto& v : c) v /= std::sqrt(n);
    }
    std::vector<std::vector<double>> emb(spec.classes, std::vector<double>(dim));
    for (int c = 0; c < spec.classes; ++c) {
      const auto& centroid = centroids[family_of(spec, c)];
      for (int k = 0; k < dim; ++k) emb[c][k] = centroid[k] + spec.embedding_noise * rng.normal() / std::sqrt(dim);
    }
    const auto matching = semmatch::nearest_neighbors(emb, semmatch::Metric::Cosine);
    bool ok = true;
    for (int c = 0; c < spec.classes; ++c) {
      ok = ok && family_of(spec, c) == family_of(spec, static_cast<int>(matching.neighbor[c]));
    }
    if (ok) return emb;
  }
  throw ConfigError("could not draw class embeddings whose nearest neighbors share a background family");
}

std::string class_name(const WorldSpec& spec, int class_pos) {
  static const char* shapes[] = {"disk", "square", "diamond"};
  const int f = family_of(spec, class_pos);
  const double speed = class_speed(spec, class_pos);
  return "family" + std::to_string(f) + "-" + shapes[f % 3] + "-speed" + std::to_string(static_cast<int>(speed * 100));
}

std::string sample_path(const char* dir, SampleId id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06u.l2t", id);
  return std::string(dir) + "/" + buf;
}

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace

void WorldSpec::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("world spec: " + what);
  };
  require(classes >= 2, "classes must be >= 2");
  require(samples_per_class >= 2, "samples_per_class must be >= 2");
  require(test_per_class >= 0, "test_per_class must be >= 0");
  require(frames >= 1 && height >= 1 && width >= 1 && channels >= 1, "video shape must be positive");
  require(families >= 1, "families must be >= 1");
  require(actor_radius_min > 0.0 && actor_radius_min <= actor_radius_max, "actor radius range is empty");
  require(2.0 * actor_radius_max <= std::min(height, width),
          "sprite larger than frame (radius " + std::to_string(actor_radius_max) + ")");
  require(object_radius >= 0.0 && 2.0 * object_radius <= std::min(height, width), "object radius out of range");
  require(actor_speed >= 0.0 && pan_speed >= 0.0, "speeds must be non-negative");
  require(pan_probability >= 0.0 && pan_probability <= 1.0, "pan_probability must lie in [0,1]");
  require(tracking_probability >= 0.0 && tracking_probability <= 1.0, "tracking_probability must lie in [0,1]");
  require(pan_min >= 0.0 && pan_min <= 1.0 && static_jitter >= 0.0 && static_jitter <= 1.0,
          "camera motion ranges must lie in [0,1]");
  require(tau_cam >= 0.0, "tau_cam must be non-negative");
  require(position_jitter >= 0.0, "position_jitter must be non-negative");
  require(texture_contrast >= 0.0 && tint_strength >= 0.0 && pixel_noise >= 0.0, "amplitudes must be non-negative");
  require(tint_correlation >= 0.0 && tint_correlation <= 1.0 && test_tint_correlation >= 0.0 &&
              test_tint_correlation <= 1.0,
          "tint correlations must lie in [0,1]");
  require(embedding_dim >= 1 && embedding_noise >= 0.0, "embedding settings out of range");
  for (const auto& [a, b] : incompatible_families) {
    require(a >= 0 && a < families && b >= 0 && b < families, "incompatible family index out of range");
  }
  for (int c = 0; c < classes; ++c) {
    require(!family_mates(*this, c).empty(),
            "infeasible correlation map: class " + std::to_string(c) + " is alone in its background family");
  }
}

WorldSpec world_spec_from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known = {
      "classes",          "samples_per_class", "test_per_class",   "frames",          "height",
      "width",            "channels",          "families",         "actor_radius_min", "actor_radius_max",
      "object_radius",    "actor_speed",       "shade_separation", "pan_probability", "tracking_probability", "pan_min",
      "static_jitter",    "pan_speed",         "tau_cam",          "cross_family_toxic", "incompatible_families",
      "texture_contrast", "tint_strength",     "tint_correlation", "test_tint_correlation", "pixel_noise",     "embedding_dim",
      "embedding_noise",  "position_jitter", "seed"};
  if (!doc.is_object()) throw ConfigError("world spec must be a JSON object");
  for (const auto& item : doc.items()) {
    if (!known.contains(item.key())) throw ConfigError("world spec has unknown key '" + item.key() + "'");
  }
  WorldSpec spec;
  try {
    read_field(doc, "classes", spec.classes);
    read_field(doc, "samples_per_class", spec.samples_per_class);
    read_field(doc, "test_per_class", spec.test_per_class);
    read_field(doc, "frames", spec.frames);
    read_field(doc, "height", spec.height);
    read_field(doc, "width", spec.width);
    read_field(doc, "channels", spec.channels);
    read_field(doc, "families", spec.families);
    read_field(doc, "actor_radius_min", spec.actor_radius_min);
    read_field(doc, "actor_radius_max", spec.actor_radius_max);
    read_field(doc, "object_radius", spec.object_radius);
    read_field(doc, "actor_speed", spec.actor_speed);
    read_field(doc, "shade_separation", spec.shade_separation);
    read_field(doc, "pan_probability", spec.pan_probability);
    read_field(doc, "tracking_probability", spec.tracking_probability);
    read_field(doc, "pan_min", spec.pan_min);
    read_field(doc, "static_jitter", spec.static_jitter);
    read_field(doc, "pan_speed", spec.pan_speed);
    read_field(doc, "tau_cam", spec.tau_cam);
    read_field(doc, "cross_family_toxic", spec.cross_family_toxic);
    read_field(doc, "incompatible_families", spec.incompatible_families);
    read_field(doc, "texture_contrast", spec.texture_contrast);
    read_field(doc, "tint_strength", spec.tint_strength);
    read_field(doc, "tint_correlation", spec.tint_correlation);
    read_field(doc, "test_tint_correlation", spec.test_tint_correlation);
    read_field(doc, "pixel_noise", spec.pixel_noise);
    read_field(doc, "embedding_dim", spec.embedding_dim);
    read_field(doc, "embedding_noise", spec.embedding_noise);
    read_field(doc, "position_jitter", spec.position_jitter);
    read_field(doc, "seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("world spec has a field of the wrong type: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::ordered_json world_spec_to_json(const WorldSpec& spec) {
  nlohmann::ordered_json doc;
  doc["classes"] = spec.classes;
  doc["samples_per_class"] = spec.samples_per_class;
  doc["test_per_class"] = spec.test_per_class;
  doc["frames"] = spec.frames;
  doc["height"] = spec.height;
  doc["width"] = spec.width;
  doc["channels"] = spec.channels;
  doc["families"] = spec.families;
  doc["actor_radius_min"] = spec.actor_radius_min;
  doc["actor_radius_max"] = spec.actor_radius_max;
  doc["object_radius"] = spec.object_radius;
  doc["actor_speed"] = spec.actor_speed;
  doc["shade_separation"] = spec.shade_separation;
  doc["pan_probability"] = spec.pan_probability;
  doc["tracking_probability"] = spec.tracking_probability;
  doc["pan_min"] = spec.pan_min;
  doc["static_jitter"] = spec.static_jitter;
  doc["pan_speed"] = spec.pan_speed;
  doc["tau_cam"] = spec.tau_cam;
  doc["cross_family_toxic"] = spec.cross_family_toxic;
  doc["incompatible_families"] = spec.incompatible_families;
  doc["texture_contrast"] = spec.texture_contrast;
  doc["tint_strength"] = spec.tint_strength;
  doc["tint_correlation"] = spec.tint_correlation;
  doc["test_tint_correlation"] = spec.test_tint_correlation;
  doc["pixel_noise"] = spec.pixel_noise;
  doc["embedding_dim"] = spec.embedding_dim;
  doc["embedding_noise"] = spec.embedding_noise;
  doc["position_jitter"] = spec.position_jitter;
  doc["seed"] = spec.seed;
  return doc;
}

int family_of(const WorldSpec& spec, int class_pos) {
  return static_cast<int>((static_cast<long long>(class_pos) * spec.families) / spec.classes);
}

std::vector<int> family_mates(const WorldSpec& spec, int class_pos) {
  std::vector<int> mates;
  const int f = family_of(spec, class_pos);
  for (int c = 0; c < spec.classes; ++c) {
    if (c != class_pos && family_of(spec, c) == f) mates.push_back(c);
  }
  return mates;
}

RenderedSample render_sample(const WorldSpec& spec, int class_pos, SampleId id, bool held_out) {
  Rng rng(derive_seed(spec.seed, "sample", id));
  const int family = family_of(spec, class_pos);
  const FamilyLook look = family_look(spec, family);
  const auto mates = family_mates(spec, class_pos);

  // Background tint: usually the class's own, otherwise a family mate's.
  int tint_class = class_pos;
  const double tint_correlation = held_out ? spec.test_tint_correlation : spec.tint_correlation;
  if (!rng.bernoulli(tint_correlation)) tint_class = mates[rng.uniform_index(mates.size())];
  const Color tint = class_tint(spec, tint_class);

  const double phase = look.stripe_phase + rng.uniform(-0.3, 0.3);
  const double freq = look.stripe_freq * rng.uniform(0.9, 1.1);
  const double radius = rng.uniform(spec.actor_radius_min, spec.actor_radius_max);
  const double speed = class_speed(spec, class_pos);
  const double heading = look.heading + rng.uniform(-0.4, 0.4);
  const double vx = speed * std::cos(heading);
  const double vy = speed * std::sin(heading);

  // Camera: a tracking shot follows a moving actor, otherwise an occasional
  // horizontal pan or a nearly still camera.
  const bool tracking = speed > 0.0 && rng.bernoulli(spec.tracking_probability);
  double camera = 0.0;
  double pan_x = 0.0;
  double pan_y = 0.0;
  if (tracking) {
    camera = std::min(1.0, speed / spec.actor_speed);
    pan_x = vx;
    pan_y = vy;
  } else {
    const bool panning = rng.bernoulli(spec.pan_probability);
    camera = panning ? rng.uniform(spec.pan_min, 1.0) : rng.uniform(0.0, spec.static_jitter);
    pan_x = (rng.bernoulli(0.5) ? 1.0 : -1.0) * camera * spec.pan_speed;
  }
  const double x0 = 0.5 * spec.width + rng.uniform(-spec.position_jitter, spec.position_jitter);
  const double y0 = 0.5 * spec.height + rng.uniform(-spec.position_jitter, spec.position_jitter);
  const double prop_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double prop_dist = radius + spec.object_radius;

  // Within-family shade offset on the actor color.
  const int k = static_cast<int>(std::count_if(mates.begin(), mates.end(), [&](int m) { return m < class_pos; }));
  const double shade = spec.shade_separation * (static_cast<double>(k) - 0.5 * static_cast<double>(mates.size()));

  RenderedSample out;
  out.camera_motion = camera;
  out.background_family = family;
  auto& video = out.tensors.video;
  video = VideoTensor(spec.frames, spec.height, spec.width, spec.channels);
  out.tensors.mask = MaskTensor(spec.frames, spec.height, spec.width);
  out.tensors.actor_mask = MaskTensor(spec.frames, spec.height, spec.width);

  const double ca = std::cos(look.stripe_angle);
  const double sa = std::sin(look.stripe_angle);
  for (int t = 0; t < spec.frames; ++t) {
    const double ox = pan_x * t;
    const double oy = pan_y * t;
    const double ax = x0 + vx * t - ox;
    const double ay = y0 + vy * t - oy;
    const double px = ax + prop_dist * std::cos(prop_angle);
    const double py = ay + prop_dist * std::sin(prop_angle);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double cx = x + 0.5;
        const double cy = y + 0.5;
        const bool on_prop = spec.object_radius > 0.0 &&
                             inside(Shape::Disk, wrap_delta(cx - px, spec.width), wrap_delta(cy - py, spec.height),
                                    spec.object_radius);
        const bool on_actor =
            !on_prop && inside(look.shape, wrap_delta(cx - ax, spec.width), wrap_delta(cy - ay, spec.height), radius);

        const double wx = cx + ox;
        const double wy = cy + oy;
        const double s = 0.5 + 0.5 * std::sin(freq * (wx * ca + wy * sa) + phase);
        for (int c = 0; c < spec.channels; ++c) {
          double v;
          if (on_prop) {
            v = channel(look.prop, c);
          } else if (on_actor) {
            v = channel(look.actor, c) + shade;
          } else {
            v = channel(look.bg_low, c) + s * (channel(look.bg_high, c) - channel(look.bg_low, c)) + channel(tint, c);
          }
          v += spec.pixel_noise * rng.normal();
          video.at(t, y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
        if (on_prop) {
          out.object_pixels.push_back({t, y, x});
          out.tensors.mask.at(t, y, x) = 1;
        } else if (on_actor) {
          out.actor_pixels.push_back({t, y, x});
          out.tensors.mask.at(t, y, x) = 1;
          out.tensors.actor_mask.at(t, y, x) = 1;
        }
      }
    }
  }
  return out;
}

World generate_world(const WorldSpec& spec) {
  spec.validate();
  World world;
  world.spec = spec;
  auto& manifest = world.dataset.manifest;
  const auto embeddings = make_embeddings(spec);
  for (int c = 0; c < spec.classes; ++c) {
    manifest.classes.push_back({static_cast<ClassId>(c), class_name(spec, c), embeddings[c]});
  }

  // Pool samples first (class-major), then test samples.
  const int per_class = spec.samples_per_class + spec.test_per_class;
  manifest.samples.reserve(static_cast<std::size_t>(spec.classes) * per_class);
  world.dataset.tensors.reserve(static_cast<std::size_t>(spec.classes) * per_class);
  SampleId next = 0;
  for (int block = 0; block < 2; ++block) {
    const int count = block == 0 ? spec.samples_per_class : spec.test_per_class;
    for (int c = 0; c < spec.classes; ++c) {
      for (int i = 0; i < count; ++i) {
        const SampleId id = next++;
        RenderedSample r = render_sample(spec, c, id, block == 1);
        SampleEntry entry;
        entry.id = id;
        entry.class_id = static_cast<ClassId>(c);
        entry.video = sample_path("videos", id);
        entry.mask = sample_path("masks", id);
        entry.actor_mask = sample_path("actor_masks", id);
        entry.split = block == 0 ? SplitTag::TrainLabeled : SplitTag::Test;
        entry.camera_motion = r.camera_motion;
        entry.background_family = r.background_family;
        manifest.samples.push_back(std::move(entry));
        world.dataset.tensors.push_back(std::move(r.tensors));
      }
    }
  }
  validate_manifest(manifest);
  return world;
}

void write_world(const std::filesystem::path& out_dir, const World& world) {
  save_dataset(out_dir, world.dataset);
  std::ofstream out(out_dir / "world.json", std::ios::trunc);
  if (!out) throw IoError("cannot write world spec in '" + out_dir.string() + "'");
  out << world_spec_to_json(world.spec).dump(1) << "\n";
}

World load_world(const std::filesystem::path& dir) {
  World world;
  std::ifstream in(dir / "world.json");
  if (!in) throw IoError("cannot open '" + (dir / "world.json").string() + "'");
  try {
    world.spec = world_spec_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("world.json is not valid JSON: ") + e.what());
  }
  world.dataset = load_dataset(dir);
  return world;
}

PairQualityOracle::PairQualityOracle(const DatasetManifest& manifest, const WorldSpec& spec)
    : manifest_(&manifest),
      tau_cam_(spec.tau_cam),
      cross_family_toxic_(spec.cross_family_toxic),
      incompatible_(spec.incompatible_families) {}

PairQuality PairQualityOracle::operator()(SampleId a, SampleId b) const {
  const auto& sa = manifest_->sample(a);
  const auto& sb = manifest_->sample(b);
  if (!sa.camera_motion || !sb.camera_motion || !sa.background_family || !sb.background_family) {
    throw FormatError("pair quality needs generator metadata on both samples");
  }
  if (std::fabs(*sa.camera_motion - *sb.camera_motion) > tau_cam_) return PairQuality::Toxic;
  const int fa = *sa.background_family;
  const int fb = *sb.background_family;
  if (fa != fb && cross_family_toxic_) return PairQuality::Toxic;
  for (const auto& [x, y] : incompatible_) {
    if ((x == fa && y == fb) || (x == fb && y == fa)) return PairQuality::Toxic;
  }
  return PairQuality::Good;
}

DatasetManifest split_world(const DatasetManifest& manifest, double labeled_fraction, double val_fraction,
                            std::uint64_t seed) {
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) throw DomainError("labeled fraction must lie in (0,1]");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw DomainError("val fraction must lie in [0,1)");
  DatasetManifest out = manifest;
  for (std::size_t ci = 0; ci < out.classes.size(); ++ci) {
    const ClassId cls = out.classes[ci].id;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
      if (out.samples[i].class_id == cls && out.samples[i].split != SplitTag::Test) pool.push_back(i);
    }
    Rng rng(derive_seed(seed, "split", cls));
    rng.shuffle(pool);
    const auto n = pool.size();
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
    const auto n_train = n - std::min(n_val, n);
    const auto n_lab = static_cast<std::size_t>(std::llround(labeled_fraction * static_cast<double>(n_train)));
    if (n_lab == 0) {
      throw DomainError("labeled fraction leaves class " + std::to_string(cls) + " without labeled samples");
    }
    for (std::size_t k = 0; k < n; ++k) {
      auto& s = out.samples[pool[k]];
      if (k < n_val) {
        s.split = SplitTag::Val;
      } else if (k < n_val + n_lab) {
        s.split = SplitTag::TrainLabeled;
      } else {
        s.split = SplitTag::TrainUnlabeled;
      }
    }
  }
  return out;
}

}  // namespace l2a::synthworld
