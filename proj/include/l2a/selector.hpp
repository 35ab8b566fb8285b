#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "l2a/neural.hpp"
#include "l2a/semmatch.hpp"

namespace l2a::selector {

using semmatch::PairCandidate;

struct SelectorPolicy {
  neural::MlpParams mlp;  // selector_input -> one logit
  bool operator==(const SelectorPolicy&) const = default;
};

SelectorPolicy make_policy(std::size_t input_dim, std::span<const std::size_t> hidden, std::uint64_t seed);

double sigmoid(double z);

/// omega = sigmoid(mlp(input)).
double score_pair(const SelectorPolicy& policy, std::span<const double> input);
std::vector<double> score_batch(const SelectorPolicy& policy, const std::vector<std::vector<double>>& inputs);

inline constexpr double kScoreClamp = 1e-6;

/// Clamps into [1e-6, 1 - 1e-6] before taking logs.
double clamp_score(double omega);

/// sum_i a_i log w_i + (1 - a_i) log(1 - w_i) over clamped scores.
double log_policy(std::span<const double> scores, std::span<const int> actions);

struct ActionSample {
  std::vector<int> actions;
  double log_prob = 0.0;
};

/// Independent Bernoulli(omega_i) draws.
ActionSample sample_actions(std::span<const double> scores, std::uint64_t seed);

enum class RewardMode { Improvement, Literal };
enum class DeltaMode { Normalized, Literal };

std::string_view to_string(RewardMode mode);
std::string_view to_string(DeltaMode mode);
RewardMode parse_reward_mode(std::string_view text);
DeltaMode parse_delta_mode(std::string_view text);

struct RewardState {
  double delta = 0.0;
  int window = 5;
  RewardMode reward_mode = RewardMode::Improvement;
  DeltaMode delta_mode = DeltaMode::Normalized;
};

/// Improvement: delta - loss. Literal: loss - delta.
double compute_reward(double val_loss_mean, const RewardState& state);

/// Normalized: ((S-1)/S) delta + loss / S. Literal: ((S-1)/S) delta + loss.
RewardState update_delta(RewardState state, double val_loss_mean);

struct EpisodeRecord {
  std::size_t episode = 0;
  std::vector<PairCandidate> batch;  // score and action filled in
  std::vector<std::vector<double>> inputs;
  std::vector<PairCandidate> selected;
  double reward = 0.0;
  double log_prob = 0.0;
  double val_loss = 0.0;
  double delta = 0.0;  // baseline the reward was measured against
  bool skipped = false;
};

/// One JSON-lines record; inputs are omitted.
nlohmann::json to_json(const EpisodeRecord& record);

/// Gradient of R * log pi(a | batch) with respect to the policy parameters.
/// Throws ShapeError when actions, scores and inputs disagree in length.
neural::MlpParams policy_gradient(const SelectorPolicy& policy, const EpisodeRecord& episode);

/// What the selector interacts with during training.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::vector<PairCandidate> sample_batch(std::size_t count, std::uint64_t seed) = 0;
  virtual std::vector<double> pair_input(const PairCandidate& pair) = 0;
  /// Mean validation loss before any episode; seeds delta.
  virtual double initial_loss() = 0;
  /// Uses the selected pairs, returns the mean validation loss afterwards.
  /// An empty selection leaves the classifier as it is.
  virtual double evaluate(std::span<const PairCandidate> selected, std::size_t episode) = 0;
};

struct TrainingSettings {
  std::size_t episodes = 500;
  std::size_t batch_pairs = 16;
  double learning_rate = 1e-2;
  int window = 5;
  RewardMode reward_mode = RewardMode::Improvement;
  DeltaMode delta_mode = DeltaMode::Normalized;
  std::uint64_t seed = 0;
};

struct TrainingLog {
  std::vector<EpisodeRecord> episodes;
  RewardState final_state;
};

/// REINFORCE with the delta baseline. Episodes with no selected pair are
/// recorded as skipped: no policy update, but delta still takes in the
/// unchanged validation loss.
TrainingLog train_selector(SelectorPolicy& policy, Environment& env, const TrainingSettings& settings);

/// Scores every candidate (writes .score) in place.
void score_candidates(const SelectorPolicy& policy, Environment& env, std::vector<PairCandidate>& candidates);

/// Keeps score >= threshold, sorted by descending score then (fg, bg).
std::vector<PairCandidate> select_by_threshold(std::vector<PairCandidate> candidates, double threshold);

/// Top budget by score, ties by (fg, bg).
std::vector<PairCandidate> select_top(std::vector<PairCandidate> candidates, std::size_t budget);

}  // namespace l2a::selector
