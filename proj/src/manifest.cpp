#include "l2a/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "l2a/common.hpp"

namespace l2a {

namespace {

using nlohmann::json;

void require_keys(const json& obj, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional, std::string_view what) {
  if (!obj.is_object()) throw FormatError(std::string(what) + " must be an object");
  for (const char* key : required) {
    if (!obj.contains(key)) throw FormatError(std::string(what) + " is missing '" + key + "'");
  }
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : required) known = known || item.key() == key;
    for (const char* key : optional) known = known || item.key() == key;
    if (!known) throw FormatError(std::string(what) + " has unknown key '" + item.key() + "'");
  }
}

}  // namespace

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::TrainLabeled: return "train-labeled";
    case SplitTag::TrainUnlabeled: return "train-unlabeled";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
  }
  return "unknown";
}

SplitTag parse_split_tag(std::string_view text) {
  if (text == "train-labeled") return SplitTag::TrainLabeled;
  if (text == "train-unlabeled") return SplitTag::TrainUnlabeled;
  if (text == "val") return SplitTag::Val;
  if (text == "test") return SplitTag::Test;
  throw FormatError("unknown split tag '" + std::string(text) + "'");
}

std::size_t DatasetManifest::class_index(ClassId id) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].id == id) return i;
  }
  throw NotFoundError("unknown class id " + std::to_string(id));
}

std::size_t DatasetManifest::sample_index(SampleId id) const {
  // Generated manifests store sample i at position i.
  if (id < samples.size() && samples[id].id == id) return id;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].id == id) return i;
  }
  throw NotFoundError("unknown sample id " + std::to_string(id));
}

std::vector<std::size_t> DatasetManifest::samples_with(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == tag) out.push_back(i);
  }
  return out;
}

void validate_manifest(const DatasetManifest& manifest) {
  if (manifest.classes.empty()) throw FormatError("manifest has no classes");
  std::set<ClassId> class_ids;
  const std::size_t dim = manifest.classes.front().embedding.size();
  for (const auto& cls : manifest.classes) {
    if (!class_ids.insert(cls.id).second) throw FormatError("duplicate class id " + std::to_string(cls.id));
    if (cls.embedding.size() != dim) throw FormatError("class embeddings differ in dimension");
    for (double v : cls.embedding) {
      if (!std::isfinite(v)) throw FormatError("non-finite embedding value");
    }
  }
  std::set<SampleId> sample_ids;
  std::set<ClassId> referenced;
  for (const auto& s : manifest.samples) {
    if (!sample_ids.insert(s.id).second) throw FormatError("duplicate sample id " + std::to_string(s.id));
    if (!class_ids.contains(s.class_id)) {
      throw FormatError("sample " + std::to_string(s.id) + " references unknown class " + std::to_string(s.class_id));
    }
    referenced.insert(s.class_id);
  }
  for (ClassId id : class_ids) {
    if (!referenced.contains(id)) throw FormatError("class " + std::to_string(id) + " has no samples");
  }
}

nlohmann::ordered_json manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::ordered_json doc;
  doc["classes"] = nlohmann::ordered_json::array();
  for (const auto& cls : manifest.classes) {
    nlohmann::ordered_json c;
    c["id"] = cls.id;
    c["name"] = cls.name;
    c["embedding"] = cls.embedding;
    doc["classes"].push_back(std::move(c));
  }
  doc["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : manifest.samples) {
    nlohmann::ordered_json e;
    e["id"] = s.id;
    e["class"] = s.class_id;
    e["video"] = s.video;
    e["mask"] = s.mask;
    if (!s.actor_mask.empty()) e["actor_mask"] = s.actor_mask;
    e["split"] = to_string(s.split);
    if (s.camera_motion) e["camera_motion"] = *s.camera_motion;
    if (s.background_family) e["background_family"] = *s.background_family;
    doc["samples"].push_back(std::move(e));
  }
  return doc;
}

DatasetManifest manifest_from_json(const nlohmann::json& doc) {
  require_keys(doc, {"classes", "samples"}, {}, "manifest");
  DatasetManifest manifest;
  try {
    for (const auto& c : doc.at("classes")) {
      require_keys(c, {"id", "name", "embedding"}, {}, "class entry");
      manifest.classes.push_back({c.at("id").get<ClassId>(), c.at("name").get<std::string>(),
                                  c.at("embedding").get<std::vector<double>>()});
    }
    for (const auto& e : doc.at("samples")) {
      require_keys(e, {"id", "class", "video", "mask", "split"}, {"actor_mask", "camera_motion", "background_family"},
                   "sample entry");
      SampleEntry s;
      s.id = e.at("id").get<SampleId>();
      s.class_id = e.at("class").get<ClassId>();
      s.video = e.at("video").get<std::string>();
      s.mask = e.at("mask").get<std::string>();
      if (e.contains("actor_mask")) s.actor_mask = e.at("actor_mask").get<std::string>();
      s.split = parse_split_tag(e.at("split").get<std::string>());
      if (e.contains("camera_motion")) s.camera_motion = e.at("camera_motion").get<double>();
      if (e.contains("background_family")) s.background_family = e.at("background_family").get<int>();
      manifest.samples.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest schema violation: ") + e.what());
  }
  validate_manifest(manifest);
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return manifest_from_json(doc);
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  validate_manifest(manifest);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << manifest_to_json(manifest).dump(1) << "\n";
}

Dataset load_dataset(const std::filesystem::path& root) {
  Dataset dataset;
  dataset.manifest = load_manifest(root / kManifestFile);
  dataset.tensors.reserve(dataset.manifest.samples.size());
  for (const auto& s : dataset.manifest.samples) {
    SampleTensors t;
    t.video = read_video(root / s.video);
    t.mask = read_mask(root / s.mask);
    t.actor_mask = s.actor_mask.empty() ? t.mask : read_mask(root / s.actor_mask);
    if (!same_grid(t.video, t.mask) || !same_shape(t.mask, t.actor_mask)) {
      throw ShapeError("mask shape does not match video for sample " + std::to_string(s.id));
    }
    dataset.tensors.push_back(std::move(t));
  }
  return dataset;
}

void save_dataset(const std::filesystem::path& root, const Dataset& dataset) {
  if (dataset.tensors.size() != dataset.manifest.samples.size()) {
    throw ShapeError("dataset tensors do not match manifest samples");
  }
  std::filesystem::create_directories(root);
  for (std::size_t i = 0; i < dataset.tensors.size(); ++i) {
    const auto& s = dataset.manifest.samples[i];
    const auto& t = dataset.tensors[i];
    for (const auto& rel : {s.video, s.mask, s.actor_mask}) {
      if (!rel.empty()) std::filesystem::create_directories((root / rel).parent_path());
    }
    write_tensor(root / s.video, t.video);
    write_tensor(root / s.mask, t.mask);
    if (!s.actor_mask.empty()) write_tensor(root / s.actor_mask, t.actor_mask);
  }
  save_manifest(root / kManifestFile, dataset.manifest);
}

}  // namespace l2a
