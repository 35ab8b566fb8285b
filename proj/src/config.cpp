#include "l2a/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

#include "l2a/common.hpp"

namespace l2a {

std::string_view to_string(Setting setting) {
  switch (setting) {
    case Setting::Full: return "full";
    case Setting::Semi: return "semi";
    case Setting::FewShot: return "fewshot";
  }
  return "full";
}

Setting parse_setting(std::string_view text) {
  if (text == "full") return Setting::Full;
  if (text == "semi") return Setting::Semi;
  if (text == "fewshot") return Setting::FewShot;
  throw ConfigError("unknown setting '" + std::string(text) + "'");
}

namespace {

void reject_unknown(const nlohmann::json& doc, std::string_view where, std::initializer_list<const char*> keys) {
  if (!doc.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& item : doc.items()) {
    if (!known.contains(item.key())) {
      throw ConfigError(std::string(where) + " has unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
void read(const nlohmann::json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("run config: " + what);
}

}  // namespace

void RunConfig::validate() const {
  world.validate();
  require(labeled_fraction > 0.0 && labeled_fraction <= 1.0, "labeled_fraction must lie in (0,1]");
  require(val_fraction > 0.0 && val_fraction < 1.0, "val_fraction must lie in (0,1)");
  require(features.frames >= 1 && features.grid >= 1, "feature frames and grid must be >= 1");
  require(features.grid <= std::min(world.height, world.width), "feature grid exceeds the frame size");

  require(optimizer.lr0 >= 0.0 && std::isfinite(optimizer.lr0), "lr0 must be finite and >= 0");
  require(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0, "momentum must lie in [0,1)");
  require(optimizer.weight_decay >= 0.0, "weight_decay must be >= 0");
  require(optimizer.batch_size >= 1, "batch_size must be >= 1");
  for (auto h : optimizer.hidden) require(h >= 1, "classifier hidden sizes must be >= 1");

  require(selector.batch_pairs >= 1, "selector batch_pairs must be >= 1");
  require(std::isfinite(selector.learning_rate) && selector.learning_rate >= 0.0,
          "selector learning_rate must be finite and >= 0");
  for (auto h : selector.hidden) require(h >= 1, "selector hidden sizes must be >= 1");
  require(selector.window >= 1, "selector window must be >= 1");
  require(selector.threshold >= 0.0 && selector.threshold <= 1.0, "selector threshold must lie in [0,1]");
  require(selector.probe_lr >= 0.0 && selector.probe_steps >= 1, "probe settings out of range");

  require(compositing.alpha > 0.0 && std::isfinite(compositing.alpha), "alpha must be positive");
  require(semi.confidence >= 0.0, "confidence must be >= 0");
  require(setting != Setting::Semi || labeled_fraction < 1.0, "semi setting needs labeled_fraction < 1");

  if (setting == Setting::FewShot) {
    require(fewshot.way >= 2, "few-shot way must be >= 2");
    require(fewshot.shot >= 1 && fewshot.query >= 1, "few-shot shot and query must be >= 1");
    require(fewshot.novel_classes >= fewshot.way, "fewer novel classes than the way");
    require(fewshot.novel_classes < static_cast<std::size_t>(world.classes), "no seen classes left");
    require(fewshot.shot + fewshot.query <= static_cast<std::size_t>(world.samples_per_class),
            "novel classes have fewer than shot + query samples");
  }
}

RunConfig config_from_json(const nlohmann::json& doc) {
  reject_unknown(doc, "run config",
                 {"seed", "setting", "world", "world_dir", "labeled_fraction", "val_fraction", "features", "optimizer",
                  "selector", "compositing", "pairing", "metric", "semi", "fewshot"});
  RunConfig cfg;
  try {
    read(doc, "seed", cfg.seed);
    if (doc.contains("setting")) cfg.setting = parse_setting(doc.at("setting").get<std::string>());
    if (doc.contains("world")) cfg.world = synthworld::world_spec_from_json(doc.at("world"));
    if (doc.contains("world_dir")) cfg.world_dir = doc.at("world_dir").get<std::string>();
    read(doc, "labeled_fraction", cfg.labeled_fraction);
    read(doc, "val_fraction", cfg.val_fraction);
    if (doc.contains("features")) {
      const auto& f = doc.at("features");
      reject_unknown(f, "features", {"frames", "grid"});
      read(f, "frames", cfg.features.frames);
      read(f, "grid", cfg.features.grid);
    }
    if (doc.contains("optimizer")) {
      const auto& o = doc.at("optimizer");
      reject_unknown(o, "optimizer", {"lr0", "momentum", "weight_decay", "batch_size", "epochs", "hidden"});
      read(o, "lr0", cfg.optimizer.lr0);
      read(o, "momentum", cfg.optimizer.momentum);
      read(o, "weight_decay", cfg.optimizer.weight_decay);
      read(o, "batch_size", cfg.optimizer.batch_size);
      read(o, "epochs", cfg.optimizer.epochs);
      read(o, "hidden", cfg.optimizer.hidden);
    }
    if (doc.contains("selector")) {
      const auto& s = doc.at("selector");
      reject_unknown(s, "selector",
                     {"enabled", "episodes", "batch_pairs", "learning_rate", "hidden", "window", "threshold", "budget",
                      "reward_mode", "delta_mode", "probe_lr", "probe_steps", "restore"});
      auto& sc = cfg.selector;
      read(s, "enabled", sc.enabled);
      read(s, "episodes", sc.episodes);
      read(s, "batch_pairs", sc.batch_pairs);
      read(s, "learning_rate", sc.learning_rate);
      read(s, "hidden", sc.hidden);
      read(s, "window", sc.window);
      read(s, "threshold", sc.threshold);
      if (s.contains("budget") && !s.at("budget").is_null()) sc.budget = s.at("budget").get<std::size_t>();
      if (s.contains("reward_mode")) sc.reward_mode = selector::parse_reward_mode(s.at("reward_mode").get<std::string>());
      if (s.contains("delta_mode")) sc.delta_mode = selector::parse_delta_mode(s.at("delta_mode").get<std::string>());
      read(s, "probe_lr", sc.probe_lr);
      read(s, "probe_steps", sc.probe_steps);
      read(s, "restore", sc.restore);
    }
    if (doc.contains("compositing")) {
      const auto& c = doc.at("compositing");
      reject_unknown(c, "compositing", {"enabled", "inpaint", "segmentation", "objects", "alpha"});
      read(c, "enabled", cfg.compositing.enabled);
      read(c, "inpaint", cfg.compositing.flags.inpaint);
      read(c, "segmentation", cfg.compositing.flags.segmentation);
      read(c, "objects", cfg.compositing.flags.objects);
      read(c, "alpha", cfg.compositing.alpha);
    }
    if (doc.contains("pairing")) cfg.pairing = semmatch::parse_pairing_mode(doc.at("pairing").get<std::string>());
    if (doc.contains("metric")) cfg.metric = semmatch::parse_metric(doc.at("metric").get<std::string>());
    if (doc.contains("semi")) {
      const auto& s = doc.at("semi");
      reject_unknown(s, "semi", {"confidence"});
      read(s, "confidence", cfg.semi.confidence);
    }
    if (doc.contains("fewshot")) {
      const auto& f = doc.at("fewshot");
      reject_unknown(f, "fewshot", {"novel_classes", "way", "shot", "query", "augment", "episodes"});
      read(f, "novel_classes", cfg.fewshot.novel_classes);
      read(f, "way", cfg.fewshot.way);
      read(f, "shot", cfg.fewshot.shot);
      read(f, "query", cfg.fewshot.query);
      read(f, "augment", cfg.fewshot.augment);
      read(f, "episodes", cfg.fewshot.episodes);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config has a field of the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["seed"] = cfg.seed;
  doc["setting"] = to_string(cfg.setting);
  doc["world"] = synthworld::world_spec_to_json(cfg.world);
  if (cfg.world_dir) doc["world_dir"] = cfg.world_dir->string();
  doc["labeled_fraction"] = cfg.labeled_fraction;
  doc["val_fraction"] = cfg.val_fraction;
  doc["features"] = {{"frames", cfg.features.frames}, {"grid", cfg.features.grid}};
  const auto& o = cfg.optimizer;
  doc["optimizer"] = {{"lr0", o.lr0},           {"momentum", o.momentum}, {"weight_decay", o.weight_decay},
                      {"batch_size", o.batch_size}, {"epochs", o.epochs},     {"hidden", o.hidden}};
  const auto& s = cfg.selector;
  nlohmann::ordered_json sel;
  sel["enabled"] = s.enabled;
  sel["episodes"] = s.episodes;
  sel["batch_pairs"] = s.batch_pairs;
  sel["learning_rate"] = s.learning_rate;
  sel["hidden"] = s.hidden;
  sel["window"] = s.window;
  sel["threshold"] = s.threshold;
  sel["budget"] = s.budget ? nlohmann::ordered_json(*s.budget) : nlohmann::ordered_json(nullptr);
  sel["reward_mode"] = selector::to_string(s.reward_mode);
  sel["delta_mode"] = selector::to_string(s.delta_mode);
  sel["probe_lr"] = s.probe_lr;
  sel["probe_steps"] = s.probe_steps;
  sel["restore"] = s.restore;
  doc["selector"] = sel;
  const auto& c = cfg.compositing;
  doc["compositing"] = {{"enabled", c.enabled},
                        {"inpaint", c.flags.inpaint},
                        {"segmentation", c.flags.segmentation},
                        {"objects", c.flags.objects},
                        {"alpha", c.alpha}};
  doc["pairing"] = semmatch::to_string(cfg.pairing);
  doc["metric"] = semmatch::to_string(cfg.metric);
  doc["semi"] = {{"confidence", cfg.semi.confidence}};
  const auto& f = cfg.fewshot;
  doc["fewshot"] = {{"novel_classes", f.novel_classes}, {"way", f.way},         {"shot", f.shot},
                    {"query", f.query},                 {"augment", f.augment}, {"episodes", f.episodes}};
  return doc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  auto cfg = config_from_json(doc);
  if (cfg.world_dir && cfg.world_dir->is_relative()) cfg.world_dir = path.parent_path() / *cfg.world_dir;
  return cfg;
}

std::string hash_hex(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& config) { return hash_hex(config_to_json(config).dump()); }

}  // namespace l2a
