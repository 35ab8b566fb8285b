#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "l2a/compositing.hpp"
#include "l2a/features.hpp"
#include "l2a/selector.hpp"
#include "l2a/semmatch.hpp"
#include "l2a/synthworld.hpp"

namespace l2a {

enum class Setting { Full, Semi, FewShot };

std::string_view to_string(Setting setting);
Setting parse_setting(std::string_view text);

struct OptimizerConfig {
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  std::size_t batch_size = 8;
  std::size_t epochs = 60;
  std::vector<std::size_t> hidden{64};  // classifier head
};

struct SelectorConfig {
  bool enabled = true;  // off: random pairs at the same budget
  std::size_t episodes = 500;
  std::size_t batch_pairs = 16;
  double learning_rate = 1e-2;
  std::vector<std::size_t> hidden{128, 64, 32};
  int window = 5;
  double threshold = 0.6;
  std::optional<std::size_t> budget;  // set: top-B instead of the threshold
  selector::RewardMode reward_mode = selector::RewardMode::Improvement;
  selector::DeltaMode delta_mode = selector::DeltaMode::Normalized;
  double probe_lr = 0.5;      // classifier step size inside an episode
  std::size_t probe_steps = 5;
  bool restore = true;        // false: joint training, classifier persists across episodes
};

struct CompositingConfig {
  bool enabled = true;  // off: no composites at all
  compositing::CompositeFlags flags;
  double alpha = compositing::kDefaultAlpha;
};

struct SemiConfig {
  double confidence = 0.8;
};

struct FewShotConfig {
  std::size_t novel_classes = 5;  // the last classes of the world
  std::size_t way = 5;
  std::size_t shot = 1;
  std::size_t query = 5;
  std::size_t augment = 2;  // k composites per class
  std::size_t episodes = 1000;
};

struct RunConfig {
  std::uint64_t seed = 0;
  Setting setting = Setting::Full;
  synthworld::WorldSpec world;
  std::optional<std::filesystem::path> world_dir;  // load instead of generating
  double labeled_fraction = 1.0;
  double val_fraction = 0.2;
  features::FeatureSpec features;
  OptimizerConfig optimizer;
  SelectorConfig selector;
  CompositingConfig compositing;
  semmatch::PairingMode pairing = semmatch::PairingMode::Semantic;
  semmatch::Metric metric = semmatch::Metric::Cosine;
  SemiConfig semi;
  FewShotConfig fewshot;

  /// Throws ConfigError for out-of-range values.
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& config);
std::string hash_hex(std::string_view bytes);

}  // namespace l2a
