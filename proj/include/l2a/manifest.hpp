#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "l2a/tensor.hpp"

namespace l2a {

enum class SplitTag { TrainLabeled, TrainUnlabeled, Val, Test };

std::string_view to_string(SplitTag tag);
SplitTag parse_split_tag(std::string_view text);

using SampleId = std::uint32_t;
using ClassId = std::uint32_t;

struct ClassEntry {
  ClassId id = 0;
  std::string name;
  std::vector<double> embedding;
  bool operator==(const ClassEntry&) const = default;
};

struct SampleEntry {
  SampleId id = 0;
  ClassId class_id = 0;
  std::string video;  // relative to the dataset root
  std::string mask;
  std::string actor_mask;  // optional, empty when absent
  SplitTag split = SplitTag::TrainLabeled;
  // Generator metadata. Only the evaluation oracle reads these.
  std::optional<double> camera_motion;
  std::optional<int> background_family;
  bool operator==(const SampleEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ClassEntry> classes;
  std::vector<SampleEntry> samples;

  std::size_t class_count() const { return classes.size(); }
  /// Position of the class with this id; throws NotFoundError.
  std::size_t class_index(ClassId id) const;
  /// Position of the sample with this id; throws NotFoundError.
  std::size_t sample_index(SampleId id) const;
  const SampleEntry& sample(SampleId id) const { return samples[sample_index(id)]; }
  std::vector<std::size_t> samples_with(SplitTag tag) const;

  bool operator==(const DatasetManifest&) const = default;
};

/// Checks id uniqueness, class references, embedding dimensions.
void validate_manifest(const DatasetManifest& manifest);

nlohmann::ordered_json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& doc);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Per-sample tensors held in memory alongside the manifest (same order).
struct SampleTensors {
  VideoTensor video;
  MaskTensor mask;        // union of all objects
  MaskTensor actor_mask;  // actor only; equals mask when the dataset has no split
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<SampleTensors> tensors;
};

constexpr const char* kManifestFile = "manifest.json";

/// Loads <root>/manifest.json and every tensor it references.
Dataset load_dataset(const std::filesystem::path& root);
/// Writes tensors under root using the manifest's relative paths, then the manifest.
void save_dataset(const std::filesystem::path& root, const Dataset& dataset);

}  // namespace l2a
