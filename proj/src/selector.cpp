#include "l2a/selector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "l2a/common.hpp"

namespace l2a::selector {

SelectorPolicy make_policy(std::size_t input_dim, std::span<const std::size_t> hidden, std::uint64_t seed) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  return SelectorPolicy{neural::make_mlp(dims, seed)};
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double score_pair(const SelectorPolicy& policy, std::span<const double> input) {
  if (policy.mlp.output_dim() != 1) throw ShapeError("selector policy must output one logit");
  return sigmoid(neural::forward(policy.mlp, input)[0]);
}

std::vector<double> score_batch(const SelectorPolicy& policy, const std::vector<std::vector<double>>& inputs) {
  std::vector<double> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(score_pair(policy, x));
  return out;
}

double clamp_score(double omega) { return std::clamp(omega, kScoreClamp, 1.0 - kScoreClamp); }

double log_policy(std::span<const double> scores, std::span<const int> actions) {
  if (scores.size() != actions.size()) throw ShapeError("scores and actions differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (actions[i] != 0 && actions[i] != 1) throw DomainError("actions must be 0 or 1");
    const double w = clamp_score(scores[i]);
    total += actions[i] ? std::log(w) : std::log1p(-w);
  }
  return total;
}

ActionSample sample_actions(std::span<const double> scores, std::uint64_t seed) {
  Rng rng(seed);
  ActionSample out;
  out.actions.reserve(scores.size());
  for (double w : scores) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("score outside [0,1]");
    out.actions.push_back(rng.uniform() < w ? 1 : 0);
  }
  out.log_prob = log_policy(scores, out.actions);
  return out;
}

std::string_view to_string(RewardMode mode) { return mode == RewardMode::Improvement ? "improvement" : "literal"; }
std::string_view to_string(DeltaMode mode) { return mode == DeltaMode::Normalized ? "normalized" : "literal"; }

RewardMode parse_reward_mode(std::string_view text) {
  if (text == "improvement") return RewardMode::Improvement;
  if (text == "literal") return RewardMode::Literal;
  throw ConfigError("unknown reward mode '" + std::string(text) + "'");
}

DeltaMode parse_delta_mode(std::string_view text) {
  if (text == "normalized") return DeltaMode::Normalized;
  if (text == "literal") return DeltaMode::Literal;
  throw ConfigError("unknown delta mode '" + std::string(text) + "'");
}

double compute_reward(double val_loss_mean, const RewardState& state) {
  return state.reward_mode == RewardMode::Improvement ? state.delta - val_loss_mean : val_loss_mean - state.delta;
}

RewardState update_delta(RewardState state, double val_loss_mean) {
  if (state.window < 1) throw ConfigError("reward window must be >= 1");
  const double s = static_cast<double>(state.window);
  const double keep = (s - 1.0) / s;
  state.delta = state.delta_mode == DeltaMode::Normalized ? keep * state.delta + val_loss_mean / s
                                                          : keep * state.delta + val_loss_mean;
  return state;
}

nlohmann::json to_json(const EpisodeRecord& record) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : record.batch) pairs.push_back({p.fg, p.bg, p.score, p.action});
  return {{"episode", record.episode}, {"batch", pairs},          {"selected", record.selected.size()},
          {"reward", record.reward},   {"log_prob", record.log_prob}, {"val_loss", record.val_loss},
          {"delta", record.delta},     {"skipped", record.skipped}};
}

neural::MlpParams policy_gradient(const SelectorPolicy& policy, const EpisodeRecord& episode) {
  if (episode.inputs.size() != episode.batch.size()) throw ShapeError("stale episode: inputs do not match batch");
  neural::MlpParams grads = policy.mlp.zeros_like();
  if (episode.reward == 0.0) return grads;
  neural::ForwardCache cache;
  for (std::size_t i = 0; i < episode.batch.size(); ++i) {
    const auto logit = neural::forward(policy.mlp, episode.inputs[i], &cache);
    const double w = sigmoid(logit[0]);
    if (std::abs(w - episode.batch[i].score) > 1e-12) throw ShapeError("stale episode: scores do not match policy");
    const int a = episode.batch[i].action;
    if (a != 0 && a != 1) throw DomainError("actions must be 0 or 1");
    // Inside the clamp band log pi is flat in the logit.
    const bool clamped = (a == 1 && w < kScoreClamp) || (a == 0 && w > 1.0 - kScoreClamp);
    if (clamped) continue;
    const double dlogit[1] = {episode.reward * (static_cast<double>(a) - w)};
    neural::backward(policy.mlp, cache, dlogit, grads);
  }
  return grads;
}

TrainingLog train_selector(SelectorPolicy& policy, Environment& env, const TrainingSettings& settings) {
  if (settings.window < 1) throw ConfigError("reward window must be >= 1");
  if (settings.batch_pairs == 0) throw ConfigError("selector batch must hold at least one pair");
  TrainingLog log;
  RewardState state{env.initial_loss(), settings.window, settings.reward_mode, settings.delta_mode};
  log.episodes.reserve(settings.episodes);

  for (std::size_t e = 0; e < settings.episodes; ++e) {
    EpisodeRecord rec;
    rec.episode = e;
    rec.delta = state.delta;
    rec.batch = env.sample_batch(settings.batch_pairs, derive_seed(settings.seed, "batch", e));
    for (const auto& p : rec.batch) rec.inputs.push_back(env.pair_input(p));
    const auto scores = score_batch(policy, rec.inputs);
    const auto draw = sample_actions(scores, derive_seed(settings.seed, "actions", e));
    for (std::size_t i = 0; i < rec.batch.size(); ++i) {
      rec.batch[i].score = scores[i];
      rec.batch[i].action = draw.actions[i];
      if (draw.actions[i]) rec.selected.push_back(rec.batch[i]);
    }
    rec.log_prob = draw.log_prob;

    if (rec.selected.empty()) {
      rec.skipped = true;
      rec.val_loss = env.evaluate({}, e);
      state = update_delta(state, rec.val_loss);
      log.episodes.push_back(std::move(rec));
      continue;
    }
    rec.val_loss = env.evaluate(rec.selected, e);
    rec.reward = compute_reward(rec.val_loss, state);
    if (!std::isfinite(rec.reward)) throw DomainError("non-finite reward in episode " + std::to_string(e));

    if (settings.learning_rate != 0.0) {
      const auto grads = policy_gradient(policy, rec);
      for (std::size_t li = 0; li < policy.mlp.layers.size(); ++li) {
        auto& layer = policy.mlp.layers[li];
        const auto& g = grads.layers[li];
        for (std::size_t k = 0; k < layer.weight.values.size(); ++k) {
          layer.weight.values[k] += settings.learning_rate * g.weight.values[k];
        }
        for (std::size_t k = 0; k < layer.bias.size(); ++k) layer.bias[k] += settings.learning_rate * g.bias[k];
      }
    }
    state = update_delta(state, rec.val_loss);
    log.episodes.push_back(std::move(rec));
  }
  log.final_state = state;
  return log;
}

void score_candidates(const SelectorPolicy& policy, Environment& env, std::vector<PairCandidate>& candidates) {
  for (auto& c : candidates) c.score = score_pair(policy, env.pair_input(c));
}

namespace {

void rank(std::vector<PairCandidate>& candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const PairCandidate& a, const PairCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.fg != b.fg) return a.fg < b.fg;
    return a.bg < b.bg;
  });
}

}  // namespace

std::vector<PairCandidate> select_by_threshold(std::vector<PairCandidate> candidates, double threshold) {
  std::erase_if(candidates, [&](const PairCandidate& c) { return !(c.score >= threshold); });
  rank(candidates);
  return candidates;
}

std::vector<PairCandidate> select_top(std::vector<PairCandidate> candidates, std::size_t budget) {
  rank(candidates);
  if (candidates.size() > budget) candidates.resize(budget);
  return candidates;
}

}  // namespace l2a::selector
