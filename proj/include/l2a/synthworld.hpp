#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <json.hpp>

#include "l2a/manifest.hpp"

namespace l2a::synthworld {

/// Procedural world description. Classes are assigned to background families
/// in contiguous blocks; classes inside one family share the background look
/// and the actor appearance and differ by how fast the actor moves through the
/// scene. Camera motion translates the whole scene; a tracking shot moves with
/// the actor so that it holds still in frame while the background slides.
struct WorldSpec {
  int classes = 10;
  int samples_per_class = 20;  // training pool (labeled/unlabeled/val)
  int test_per_class = 40;     // held-out test samples
  int frames = 8;
  int height = 16;
  int width = 16;
  int channels = 3;
  int families = 5;

  double actor_radius_min = 4.0;
  double actor_radius_max = 5.0;
  double object_radius = 1.5;  // prop carried next to the actor; 0 disables
  double position_jitter = 2.0;  // actor starts within +-jitter of the frame center
  double actor_speed = 1.0;    // pixels per frame for the fastest class of a family
  double shade_separation = 0.0;

  double tracking_probability = 0.3;  // moving actors filmed with a following camera
  double pan_probability = 0.0;       // other samples: random horizontal pan
  double pan_min = 0.7;        // panning samples draw camera motion from [pan_min, 1]
  double static_jitter = 0.1;  // static samples draw camera motion from [0, static_jitter]
  double pan_speed = 1.0;      // pixels per frame at camera motion 1

  double tau_cam = 0.3;
  bool cross_family_toxic = true;
  std::vector<std::pair<int, int>> incompatible_families;

  double texture_contrast = 0.2;
  double tint_strength = 0.15;
  double tint_correlation = 0.9;       // training pool: P(background tint matches the class)
  double test_tint_correlation = 0.5;  // held-out test samples
  double pixel_noise = 0.02;

  int embedding_dim = 16;
  double embedding_noise = 0.15;

  std::uint64_t seed = 1;

  /// Throws ConfigError for out-of-range fields, oversized sprites or a
  /// class-to-family map that leaves a class without a same-family partner.
  void validate() const;
};

WorldSpec world_spec_from_json(const nlohmann::json& doc);
nlohmann::ordered_json world_spec_to_json(const WorldSpec& spec);

int family_of(const WorldSpec& spec, int class_pos);
/// Classes sharing class_pos's family, excluding class_pos.
std::vector<int> family_mates(const WorldSpec& spec, int class_pos);

struct PixelIndex {
  int t = 0;
  int y = 0;
  int x = 0;
  bool operator==(const PixelIndex&) const = default;
};

/// One rendered sample plus the renderer's own raster lists.
struct RenderedSample {
  SampleTensors tensors;
  std::vector<PixelIndex> actor_pixels;
  std::vector<PixelIndex> object_pixels;
  double camera_motion = 0.0;
  int background_family = 0;
};

/// held_out samples draw their background tint with test_tint_correlation.
RenderedSample render_sample(const WorldSpec& spec, int class_pos, SampleId id, bool held_out = false);

struct World {
  WorldSpec spec;
  Dataset dataset;
};

/// Deterministic in spec.seed. Training-pool samples are tagged
/// train-labeled and test samples test; call split_world to partition the pool.
World generate_world(const WorldSpec& spec);

/// Writes the dataset plus world.json under out_dir.
void write_world(const std::filesystem::path& out_dir, const World& world);
World load_world(const std::filesystem::path& dir);

enum class PairQuality { Good, Toxic };

/// Evaluation-only ground truth for pair quality, built from generator
/// metadata stored in the manifest.
class PairQualityOracle {
 public:
  PairQualityOracle(const DatasetManifest& manifest, const WorldSpec& spec);

  PairQuality operator()(SampleId a, SampleId b) const;
  bool toxic(SampleId a, SampleId b) const { return (*this)(a, b) == PairQuality::Toxic; }

 private:
  const DatasetManifest* manifest_;
  double tau_cam_;
  bool cross_family_toxic_;
  std::vector<std::pair<int, int>> incompatible_;
};

/// Re-tags the non-test samples of every class: round(val_fraction * n) go to
/// val, then round(labeled_fraction * remaining) to train-labeled and the rest
/// to train-unlabeled. Stratified and deterministic in seed.
DatasetManifest split_world(const DatasetManifest& manifest, double labeled_fraction, double val_fraction,
                            std::uint64_t seed);

}  // namespace l2a::synthworld
