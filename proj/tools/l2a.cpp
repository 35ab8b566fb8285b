#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "l2a/common.hpp"
#include "l2a/config.hpp"
#include "l2a/pipeline.hpp"
#include "l2a/synthworld.hpp"

namespace fs = std::filesystem;
using namespace l2a;

namespace {

RunConfig config_with_setting(const std::string& path, const std::string& setting) {
  RunConfig cfg = load_config(path);
  if (!setting.empty()) {
    cfg.setting = parse_setting(setting);
    cfg.validate();
  }
  return cfg;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
}

void write_results(const fs::path& dir, const std::vector<pipeline::ExperimentResult>& rows) {
  fs::create_directories(dir);
  std::ofstream lines(dir / "results.jsonl", std::ios::trunc);
  if (!lines) throw IoError("cannot write results.jsonl in '" + dir.string() + "'");
  for (const auto& r : rows) lines << pipeline::to_json(r).dump() << '\n';
  pipeline::write_results_csv(dir / "results.csv", rows);
}

void print_rows(const std::vector<pipeline::ExperimentResult>& rows) {
  std::printf("%-22s %8s %6s %9s %9s\n", "variant", "budget", "aug", "toxic", "accuracy");
  for (const auto& r : rows) {
    std::printf("%-22s %8s %6zu %9s %9.4f\n", r.variant.c_str(), r.budget ? std::to_string(*r.budget).c_str() : "-",
                r.augmented_count, r.toxic_fraction ? std::to_string(*r.toxic_fraction).substr(0, 6).c_str() : "-",
                r.test_accuracy);
  }
}

std::vector<std::size_t> parse_budgets(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("budget '" + item + "' is not an integer");
    }
    if (used != item.size() || v < 0) throw ConfigError("budget '" + item + "' is not a non-negative integer");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("no budgets given");
  return out;
}

int cmd_gen(const std::string& spec_path, const std::string& out) {
  std::ifstream in(spec_path);
  if (!in) throw IoError("cannot open world spec '" + spec_path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("world spec is not valid JSON: ") + e.what());
  }
  const auto world = synthworld::generate_world(synthworld::world_spec_from_json(doc));
  synthworld::write_world(out, world);
  std::printf("wrote %zu samples in %zu classes to %s\n", world.dataset.manifest.samples.size(),
              world.dataset.manifest.class_count(), out.c_str());
  return 0;
}

int cmd_run(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  write_json(out / "config.json", config_to_json(cfg));
  pipeline::ExperimentResult result;
  if (cfg.setting == Setting::FewShot) {
    result = pipeline::run_fewshot(cfg);
  } else {
    const auto ws = pipeline::prepare_workspace(cfg);
    const auto run = pipeline::prepare_run(ws, cfg);
    pipeline::ClassifierModel model;
    const std::string variant =
        !cfg.compositing.enabled ? "no-augmentation" : (cfg.selector.enabled ? "l2a" : "random-selection");
    result = pipeline::finish_run(run, pipeline::choose_pairs(run, cfg.selector.budget), cfg.selector.budget, variant,
                                  &model);
    neural::save_checkpoint(out / "classifier", model.params, {{"config_hash", result.config_hash}});
    if (run.policy) {
      neural::save_checkpoint(out / "selector", run.policy->mlp, {{"config_hash", result.config_hash}});
      pipeline::write_selector_log(out / "selector_log.jsonl", run.selector_log);
    }
    std::ofstream epochs(out / "epochs.jsonl", std::ios::trunc);
    for (const auto& e : result.epochs) {
      epochs << nlohmann::json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}}.dump()
             << '\n';
    }
  }
  write_json(out / "result.json", pipeline::to_json(result));
  pipeline::write_results_csv(out / "results.csv", {result});
  print_rows({result});
  return 0;
}

void collect(const fs::path& root, std::vector<pipeline::ExperimentResult>& rows) {
  auto take = [&](const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open '" + file.string() + "'");
    if (file.filename() == "result.json") {
      rows.push_back(pipeline::result_from_json(nlohmann::json::parse(in)));
      return;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) rows.push_back(pipeline::result_from_json(nlohmann::json::parse(line)));
    }
  };
  if (fs::is_regular_file(root)) {
    take(root);
    return;
  }
  if (!fs::is_directory(root)) throw IoError("'" + root.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    const auto name = entry.path().filename();
    if (entry.is_regular_file() && (name == "result.json" || name == "results.jsonl")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) take(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned pair selection for video compositing augmentation"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, config_path, setting, budgets_text, report_out;
  std::vector<std::string> report_inputs;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic world");
  gen->add_option("--spec", spec_path, "World spec JSON")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config_path, "Run config JSON")->required();
  run->add_option("--setting", setting, "full | semi | fewshot");
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Retrain at several augmentation budgets");
  sweep->add_option("--config", config_path, "Run config JSON")->required();
  sweep->add_option("--setting", setting, "full | semi");
  sweep->add_option("--budgets", budgets_text, "Comma-separated budgets")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();

  auto* compare = app.add_subcommand("compare", "L2A against random, intra-class and joint baselines");
  compare->add_option("--config", config_path, "Run config JSON")->required();
  compare->add_option("--setting", setting, "full | semi");
  compare->add_option("--out", out_dir, "Output directory")->required();

  auto* ablate = app.add_subcommand("ablate", "Selector / compositing / matching on-off table");
  ablate->add_option("--config", config_path, "Run config JSON")->required();
  ablate->add_option("--setting", setting, "full | semi");
  ablate->add_option("--out", out_dir, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Collect result files into one CSV");
  report->add_option("--out", report_out, "CSV path")->required();
  report->add_option("inputs", report_inputs, "Run directories or result files (default: .)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(spec_path, out_dir);
    if (*run) return cmd_run(config_with_setting(config_path, setting), out_dir);
    if (*sweep) {
      const auto rows = pipeline::sweep_budget(config_with_setting(config_path, setting), parse_budgets(budgets_text));
      write_results(out_dir, rows);
      print_rows(rows);
      return 0;
    }
    if (*compare) {
      const auto rows = pipeline::compare_baselines(config_with_setting(config_path, setting));
      write_results(out_dir, rows);
      print_rows(rows);
      return 0;
    }
    if (*ablate) {
      const auto rows = pipeline::ablation_sweep(config_with_setting(config_path, setting));
      write_results(out_dir, rows);
      print_rows(rows);
      return 0;
    }
    if (*report) {
      if (report_inputs.empty()) report_inputs.push_back(".");
      std::vector<pipeline::ExperimentResult> rows;
      for (const auto& in : report_inputs) collect(in, rows);
      pipeline::write_results_csv(report_out, rows);
      std::printf("wrote %zu rows to %s\n", rows.size(), report_out.c_str());
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "l2a: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "l2a: malformed JSON: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "l2a: %s\n", e.what());
    return 1;
  }
  return 0;
}
