#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "l2a/config.hpp"
#include "l2a/features.hpp"
#include "l2a/manifest.hpp"
#include "l2a/neural.hpp"
#include "l2a/selector.hpp"
#include "l2a/semmatch.hpp"
#include "l2a/synthworld.hpp"

namespace l2a::pipeline {

struct EpochStat {
  std::size_t epoch = 0;  // 0 is the untrained model
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool operator==(const EpochStat&) const = default;
};

struct ClassifierModel {
  neural::MlpParams params;
};

struct TrainOutcome {
  ClassifierModel model;  // best-validation checkpoint
  std::vector<EpochStat> epochs;
  std::size_t best_epoch = 0;
};

struct EvalSet {
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> labels;
};

/// Minibatch SGD with momentum, weight decay and a cosine schedule over
/// epochs * ceil(n / batch) steps. Keeps the parameters with the lowest
/// validation loss (first epoch wins ties; no validation data keeps the last).
TrainOutcome train_classifier(const neural::LabeledSet& train, const neural::LabeledSet& val, std::size_t classes,
                              const OptimizerConfig& optimizer, std::uint64_t seed);

struct ExperimentResult {
  std::string setting;
  std::string variant;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string world_hash;
  std::optional<std::size_t> budget;
  std::size_t augmented_count = 0;
  std::size_t pseudo_labeled = 0;
  std::optional<double> toxic_fraction;  // oracle, evaluation only
  double test_accuracy = 0.0;
  std::size_t best_epoch = 0;
  std::vector<EpochStat> epochs;
  double seconds = 0.0;

  /// Equality ignoring wall-clock time.
  bool same_as(const ExperimentResult& other) const;
};

std::vector<std::string> csv_header();
std::vector<std::string> csv_row(const ExperimentResult& result);
void write_results_csv(const std::filesystem::path& path, const std::vector<ExperimentResult>& results);
nlohmann::json to_json(const ExperimentResult& result);
ExperimentResult result_from_json(const nlohmann::json& doc);

/// World, split and per-sample features shared by every run of one config.
struct Workspace {
  RunConfig config;
  synthworld::WorldSpec spec;
  Dataset dataset;  // manifest already re-tagged by the split
  std::string world_hash;
  semmatch::ClassMatching matching;
  features::Standardizer standardizer;        // fitted on the training pool, no labels
  std::vector<std::vector<double>> features;  // standardized, per manifest position
  std::vector<std::size_t> class_pos;         // per manifest position

  std::size_t class_count() const { return dataset.manifest.class_count(); }
  std::size_t position(SampleId id) const { return dataset.manifest.sample_index(id); }
  std::vector<double> one_hot_label(std::size_t position) const;
  neural::LabeledSet labeled(SplitTag tag) const;
  EvalSet eval_set(SplitTag tag) const;
  bool has_oracle() const;
};

Workspace prepare_workspace(const RunConfig& config);

/// Real training data and the pool composites are drawn from.
struct TrainingPool {
  std::vector<semmatch::PoolEntry> entries;
  std::vector<std::vector<double>> labels;  // per manifest position; empty outside the pool
  neural::LabeledSet real;
  std::size_t pseudo_labeled = 0;
};

/// Labeled split only.
TrainingPool labeled_pool(const Workspace& ws);

/// Labeled split plus unlabeled samples whose top softmax probability under
/// model reaches confidence, with one-hot pseudo-labels.
TrainingPool pseudo_labeled_pool(const Workspace& ws, const neural::MlpParams& model, double confidence);

struct CompositeSample {
  std::vector<double> features;
  std::vector<double> label;
  double lambda = 0.0;
};

/// Composites the sample at fg_pos onto the one at bg_pos and extracts features.
CompositeSample composite_positions(const Workspace& ws, std::size_t fg_pos, std::size_t bg_pos,
                                    std::span<const double> y_fg, std::span<const double> y_bg,
                                    const CompositingConfig& compositing);

/// Composites pair.fg onto pair.bg using the pool's labels.
CompositeSample make_composite(const Workspace& ws, const TrainingPool& pool, const semmatch::PairCandidate& pair,
                               const CompositingConfig& compositing);

std::vector<double> pair_input(const Workspace& ws, const TrainingPool& pool, const semmatch::PairCandidate& pair);

/// Throws Error unless both members of every pair belong to the pool
/// (composites never draw from validation or test samples).
void audit_pairs(const Workspace& ws, const TrainingPool& pool, const std::vector<semmatch::PairCandidate>& pairs);

/// The classifier and validation process the selector acts on.
class ClassifierEnvironment : public selector::Environment {
 public:
  ClassifierEnvironment(const Workspace& ws, const TrainingPool& pool, neural::MlpParams classifier,
                        const RunConfig& config);

  std::vector<semmatch::PairCandidate> sample_batch(std::size_t count, std::uint64_t seed) override;
  std::vector<double> pair_input(const semmatch::PairCandidate& pair) override;
  double initial_loss() override;
  double evaluate(std::span<const semmatch::PairCandidate> selected, std::size_t episode) override;

  const neural::MlpParams& classifier() const { return classifier_; }

 private:
  const CompositeSample& composite_for(const semmatch::PairCandidate& pair);

  const Workspace& ws_;
  const TrainingPool& pool_;
  neural::MlpParams classifier_;
  const RunConfig& config_;
  neural::LabeledSet val_;
  std::map<std::pair<SampleId, SampleId>, CompositeSample> cache_;
};

/// Stage-one state shared by every budget of a sweep.
struct PreparedRun {
  const Workspace* ws = nullptr;
  RunConfig config;
  TrainingPool pool;
  std::optional<TrainOutcome> stage0;  // semi: labeled-only classifier used for pseudo-labels
  TrainOutcome baseline;  // classifier on real data only
  std::vector<semmatch::PairCandidate> candidates;
  std::optional<selector::SelectorPolicy> policy;
  selector::TrainingLog selector_log;
  std::optional<neural::MlpParams> joint_classifier;
};

/// Builds the pool (pseudo-labels in the semi setting), trains the real-data
/// classifier, enumerates candidates and trains the selector when enabled.
PreparedRun prepare_run(const Workspace& ws, const RunConfig& config);

/// Pairs to composite at the given budget (nullopt: threshold mode, or every
/// candidate when the selector is off).
std::vector<semmatch::PairCandidate> choose_pairs(const PreparedRun& run, std::optional<std::size_t> budget);

/// Retrains from scratch on real + composites of pairs and evaluates on test.
ExperimentResult finish_run(const PreparedRun& run, const std::vector<semmatch::PairCandidate>& pairs,
                            std::optional<std::size_t> budget, const std::string& variant,
                            ClassifierModel* model_out = nullptr);

/// The classifier trained on real data alone, as a result row.
ExperimentResult baseline_result(const PreparedRun& run, const std::string& variant = "no-augmentation");

/// Semi setting: the stage-0 classifier trained on labeled data alone.
ExperimentResult labeled_only_result(const PreparedRun& run);

/// Joint variant: the classifier left behind by non-restoring selector training.
ExperimentResult joint_result(const PreparedRun& run, std::optional<std::size_t> budget);

double toxic_fraction(const Workspace& ws, const std::vector<semmatch::PairCandidate>& pairs);

ExperimentResult run_full(const RunConfig& config);
ExperimentResult run_semi(const RunConfig& config);
ExperimentResult run_fewshot(const RunConfig& config);
/// Dispatches on config.setting.
ExperimentResult run(const RunConfig& config);

std::vector<ExperimentResult> sweep_budget(const RunConfig& config, const std::vector<std::size_t>& budgets);

/// L2A, random selection, intra-class pairing and the joint variant at the
/// config's budget, plus the no-augmentation row.
std::vector<ExperimentResult> compare_baselines(const RunConfig& config);

/// Selector x compositing x matching on/off, eight rows plus no-augmentation.
std::vector<ExperimentResult> ablation_sweep(const RunConfig& config);

/// Selector training log as JSON lines.
void write_selector_log(const std::filesystem::path& path, const selector::TrainingLog& log);

}  // namespace l2a::pipeline
