#include "l2a/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "l2a/common.hpp"
#include "l2a/compositing.hpp"
#include "l2a/features.hpp"

namespace l2a::pipeline {

namespace {

using semmatch::PairCandidate;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::size_t> layer_dims(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output) {
  std::vector<std::size_t> dims{input};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output);
  return dims;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

TrainOutcome train_classifier(const neural::LabeledSet& train, const neural::LabeledSet& val, std::size_t classes,
                              const OptimizerConfig& optimizer, std::uint64_t seed) {
  if (train.size() == 0) throw DomainError("cannot train a classifier on an empty set");
  if (optimizer.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  const auto dims = layer_dims(train.inputs.front().size(), optimizer.hidden, classes);
  TrainOutcome out;
  out.model.params = neural::make_mlp(dims, derive_seed(seed, "classifier-init"));
  auto& params = out.model.params;

  const std::size_t n = train.size();
  const std::size_t steps_per_epoch = (n + optimizer.batch_size - 1) / optimizer.batch_size;
  neural::SgdSettings sgd{optimizer.lr0, optimizer.momentum, optimizer.weight_decay,
                          std::max<std::size_t>(1, optimizer.epochs * steps_per_epoch)};
  auto opt = neural::make_optimizer(params, sgd);

  out.epochs.push_back({0, neural::mean_loss(params, train), neural::mean_loss(params, val)});
  neural::MlpParams best = params;
  double best_val = out.epochs.back().val_loss;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "classifier-shuffle"));
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= optimizer.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += optimizer.batch_size) {
      const std::size_t end = std::min(n, start + optimizer.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      auto grads = params.zeros_like();
      total += neural::accumulate_gradient(params, train, idx, grads) * static_cast<double>(idx.size());
      neural::sgd_step(params, grads, opt, step++);
    }
    EpochStat stat{epoch, total / static_cast<double>(n), neural::mean_loss(params, val)};
    out.epochs.push_back(stat);
    if (val.size() == 0 || stat.val_loss < best_val) {
      best_val = stat.val_loss;
      best = params;
      out.best_epoch = epoch;
    }
  }
  out.model.params = std::move(best);
  return out;
}

bool ExperimentResult::same_as(const ExperimentResult& o) const {
  return setting == o.setting && variant == o.variant && seed == o.seed && config_hash == o.config_hash &&
         world_hash == o.world_hash && budget == o.budget && augmented_count == o.augmented_count &&
         pseudo_labeled == o.pseudo_labeled && toxic_fraction == o.toxic_fraction &&
         test_accuracy == o.test_accuracy && best_epoch == o.best_epoch && epochs == o.epochs;
}

std::vector<std::string> csv_header() {
  return {"setting",        "variant",        "seed",          "config_hash", "world_hash",
          "budget",         "augmented_count", "pseudo_labeled", "toxic_fraction", "test_accuracy",
          "best_epoch",     "final_train_loss", "final_val_loss", "seconds"};
}

std::vector<std::string> csv_row(const ExperimentResult& r) {
  const EpochStat last = r.epochs.empty() ? EpochStat{} : r.epochs.back();
  return {r.setting,
          r.variant,
          std::to_string(r.seed),
          r.config_hash,
          r.world_hash,
          r.budget ? std::to_string(*r.budget) : "",
          std::to_string(r.augmented_count),
          std::to_string(r.pseudo_labeled),
          r.toxic_fraction ? fmt(*r.toxic_fraction) : "",
          fmt(r.test_accuracy),
          std::to_string(r.best_epoch),
          fmt(last.train_loss),
          fmt(last.val_loss),
          fmt(r.seconds)};
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ExperimentResult>& results) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  emit(csv_header());
  for (const auto& r : results) emit(csv_row(r));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

nlohmann::json to_json(const ExperimentResult& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  return {{"setting", r.setting},
          {"variant", r.variant},
          {"seed", r.seed},
          {"config_hash", r.config_hash},
          {"world_hash", r.world_hash},
          {"budget", r.budget ? nlohmann::json(*r.budget) : nlohmann::json(nullptr)},
          {"augmented_count", r.augmented_count},
          {"pseudo_labeled", r.pseudo_labeled},
          {"toxic_fraction", r.toxic_fraction ? nlohmann::json(*r.toxic_fraction) : nlohmann::json(nullptr)},
          {"test_accuracy", r.test_accuracy},
          {"best_epoch", r.best_epoch},
          {"epochs", epochs},
          {"seconds", r.seconds}};
}

ExperimentResult result_from_json(const nlohmann::json& doc) {
  try {
    ExperimentResult r;
    r.setting = doc.at("setting").get<std::string>();
    r.variant = doc.at("variant").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.config_hash = doc.at("config_hash").get<std::string>();
    r.world_hash = doc.at("world_hash").get<std::string>();
    if (!doc.at("budget").is_null()) r.budget = doc.at("budget").get<std::size_t>();
    r.augmented_count = doc.at("augmented_count").get<std::size_t>();
    r.pseudo_labeled = doc.at("pseudo_labeled").get<std::size_t>();
    if (!doc.at("toxic_fraction").is_null()) r.toxic_fraction = doc.at("toxic_fraction").get<double>();
    r.test_accuracy = doc.at("test_accuracy").get<double>();
    r.best_epoch = doc.at("best_epoch").get<std::size_t>();
    for (const auto& e : doc.at("epochs")) {
      r.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                          e.at("val_loss").get<double>()});
    }
    r.seconds = doc.at("seconds").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed result record: ") + e.what());
  }
}

std::vector<double> Workspace::one_hot_label(std::size_t position) const {
  return one_hot(class_pos.at(position), class_count());
}

neural::LabeledSet Workspace::labeled(SplitTag tag) const {
  neural::LabeledSet set;
  for (std::size_t pos : dataset.manifest.samples_with(tag)) set.append(features[pos], one_hot_label(pos));
  return set;
}

EvalSet Workspace::eval_set(SplitTag tag) const {
  EvalSet set;
  for (std::size_t pos : dataset.manifest.samples_with(tag)) {
    set.inputs.push_back(features[pos]);
    set.labels.push_back(class_pos[pos]);
  }
  return set;
}

bool Workspace::has_oracle() const {
  return std::all_of(dataset.manifest.samples.begin(), dataset.manifest.samples.end(),
                     [](const SampleEntry& s) { return s.camera_motion && s.background_family; });
}

Workspace prepare_workspace(const RunConfig& config) {
  config.validate();
  Workspace ws;
  ws.config = config;
  synthworld::World world =
      config.world_dir ? synthworld::load_world(*config.world_dir) : synthworld::generate_world(config.world);
  ws.spec = world.spec;
  ws.dataset = std::move(world.dataset);
  ws.dataset.manifest = synthworld::split_world(ws.dataset.manifest, config.labeled_fraction, config.val_fraction,
                                                derive_seed(config.seed, "split"));
  const auto& manifest = ws.dataset.manifest;
  ws.world_hash = hash_hex(synthworld::world_spec_to_json(ws.spec).dump() + manifest_to_json(manifest).dump());
  ws.matching = semmatch::nearest_neighbors(manifest, config.metric);
  ws.features.reserve(manifest.samples.size());
  ws.class_pos.reserve(manifest.samples.size());
  std::vector<std::vector<double>> pool_features;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    ws.features.push_back(features::extract(ws.dataset.tensors[i].video, config.features));
    ws.class_pos.push_back(manifest.class_index(manifest.samples[i].class_id));
    const auto tag = manifest.samples[i].split;
    if (tag == SplitTag::TrainLabeled || tag == SplitTag::TrainUnlabeled) pool_features.push_back(ws.features.back());
  }
  ws.standardizer = features::fit_standardizer(pool_features);
  for (auto& f : ws.features) f = ws.standardizer.apply(f);
  return ws;
}

TrainingPool labeled_pool(const Workspace& ws) {
  TrainingPool pool;
  pool.labels.resize(ws.dataset.manifest.samples.size());
  for (std::size_t pos : ws.dataset.manifest.samples_with(SplitTag::TrainLabeled)) {
    pool.entries.push_back({ws.dataset.manifest.samples[pos].id, ws.class_pos[pos]});
    pool.labels[pos] = ws.one_hot_label(pos);
    pool.real.append(ws.features[pos], pool.labels[pos]);
  }
  return pool;
}

TrainingPool pseudo_labeled_pool(const Workspace& ws, const neural::MlpParams& model, double confidence) {
  TrainingPool pool = labeled_pool(ws);
  for (std::size_t pos : ws.dataset.manifest.samples_with(SplitTag::TrainUnlabeled)) {
    const auto probs = neural::softmax(neural::forward(model, ws.features[pos]));
    const std::size_t k = neural::argmax(probs);
    if (probs[k] < confidence) continue;
    pool.entries.push_back({ws.dataset.manifest.samples[pos].id, k});
    pool.labels[pos] = one_hot(k, ws.class_count());
    pool.real.append(ws.features[pos], pool.labels[pos]);
    ++pool.pseudo_labeled;
  }
  return pool;
}

CompositeSample composite_positions(const Workspace& ws, std::size_t fg_pos, std::size_t bg_pos,
                                    std::span<const double> y_fg, std::span<const double> y_bg,
                                    const CompositingConfig& compositing) {
  const auto& fg = ws.dataset.tensors.at(fg_pos);
  const auto& bg = ws.dataset.tensors.at(bg_pos);
  const compositing::CompositeInput fin{fg.video, fg.mask, fg.actor_mask, y_fg};
  const compositing::CompositeInput bin{bg.video, bg.mask, bg.actor_mask, y_bg};
  auto res = compositing::composite_pair(fin, bin, compositing.flags, compositing.alpha);
  return {ws.standardizer.apply(features::extract(res.video, ws.config.features)), std::move(res.label), res.lambda};
}

namespace {

const std::vector<double>& pool_label(const Workspace& ws, const TrainingPool& pool, SampleId id) {
  const auto& label = pool.labels.at(ws.position(id));
  if (label.empty()) throw NotFoundError("sample " + std::to_string(id) + " is not in the augmentation pool");
  return label;
}

}  // namespace

CompositeSample make_composite(const Workspace& ws, const TrainingPool& pool, const PairCandidate& pair,
                               const CompositingConfig& compositing) {
  return composite_positions(ws, ws.position(pair.fg), ws.position(pair.bg), pool_label(ws, pool, pair.fg),
                             pool_label(ws, pool, pair.bg), compositing);
}

std::vector<double> pair_input(const Workspace& ws, const TrainingPool& pool, const PairCandidate& pair) {
  return features::selector_input(ws.features[ws.position(pair.fg)], pool_label(ws, pool, pair.fg),
                                  ws.features[ws.position(pair.bg)], pool_label(ws, pool, pair.bg));
}

void audit_pairs(const Workspace& ws, const TrainingPool& pool, const std::vector<PairCandidate>& pairs) {
  const auto& manifest = ws.dataset.manifest;
  for (const auto& p : pairs) {
    for (SampleId id : {p.fg, p.bg}) {
      const auto pos = ws.position(id);
      const auto tag = manifest.samples[pos].split;
      if (tag == SplitTag::Val || tag == SplitTag::Test || pool.labels[pos].empty()) {
        throw Error("split audit: sample " + std::to_string(id) + " (" + std::string(to_string(tag)) +
                    ") may not be composited");
      }
    }
  }
}

ClassifierEnvironment::ClassifierEnvironment(const Workspace& ws, const TrainingPool& pool,
                                             neural::MlpParams classifier, const RunConfig& config)
    : ws_(ws), pool_(pool), classifier_(std::move(classifier)), config_(config), val_(ws.labeled(SplitTag::Val)) {
  if (pool.entries.empty()) throw DomainError("selector training needs a non-empty labeled pool");
  if (val_.size() == 0) throw DomainError("selector training needs a non-empty validation split");
}

std::vector<PairCandidate> ClassifierEnvironment::sample_batch(std::size_t count, std::uint64_t seed) {
  return semmatch::sample_pairs(pool_.entries, ws_.matching, config_.pairing, count, seed);
}

std::vector<double> ClassifierEnvironment::pair_input(const PairCandidate& pair) {
  return pipeline::pair_input(ws_, pool_, pair);
}

double ClassifierEnvironment::initial_loss() { return neural::mean_loss(classifier_, val_); }

const CompositeSample& ClassifierEnvironment::composite_for(const PairCandidate& pair) {
  const auto key = std::make_pair(pair.fg, pair.bg);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, make_composite(ws_, pool_, pair, config_.compositing)).first;
  return it->second;
}

double ClassifierEnvironment::evaluate(std::span<const PairCandidate> selected, std::size_t) {
  if (selected.empty()) return neural::mean_loss(classifier_, val_);
  neural::LabeledSet batch;
  for (const auto& p : selected) {
    const auto& c = composite_for(p);
    batch.append(c.features, c.label);
  }
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  neural::MlpParams probe = classifier_;
  const double lr = config_.selector.probe_lr;
  const double wd = config_.optimizer.weight_decay;
  for (std::size_t k = 0; k < config_.selector.probe_steps; ++k) {
    auto grads = probe.zeros_like();
    neural::accumulate_gradient(probe, batch, idx, grads);
    for (std::size_t li = 0; li < probe.layers.size(); ++li) {
      auto& layer = probe.layers[li];
      const auto& g = grads.layers[li];
      for (std::size_t i = 0; i < layer.weight.values.size(); ++i) {
        layer.weight.values[i] -= lr * (g.weight.values[i] + wd * layer.weight.values[i]);
      }
      for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * (g.bias[i] + wd * layer.bias[i]);
    }
  }
  const double loss = neural::mean_loss(probe, val_);
  if (!config_.selector.restore) classifier_ = std::move(probe);
  return loss;
}

PreparedRun prepare_run(const Workspace& ws, const RunConfig& config) {
  PreparedRun run;
  run.ws = &ws;
  run.config = config;
  const auto val = ws.labeled(SplitTag::Val);
  const std::size_t classes = ws.class_count();

  if (config.setting == Setting::Semi) {
    const auto labeled = labeled_pool(ws);
    run.stage0 = train_classifier(labeled.real, val, classes, config.optimizer, derive_seed(config.seed, "stage0"));
    run.pool = pseudo_labeled_pool(ws, run.stage0->model.params, config.semi.confidence);
    if (run.pool.pseudo_labeled == 0) {
      std::fprintf(stderr, "warning: no unlabeled sample reached confidence %.3f; continuing without pseudo-labels\n",
                   config.semi.confidence);
    }
  } else {
    run.pool = labeled_pool(ws);
  }
  run.baseline = train_classifier(run.pool.real, val, classes, config.optimizer, derive_seed(config.seed, "classifier"));

  if (!config.compositing.enabled) return run;
  run.candidates = semmatch::enumerate_pairs(run.pool.entries, ws.matching, config.pairing);

  const bool zero_budget = config.selector.budget && *config.selector.budget == 0;
  if (!config.selector.enabled || zero_budget || run.candidates.empty()) return run;

  ClassifierEnvironment env(ws, run.pool, run.baseline.model.params, run.config);
  const std::size_t input_dim = run.pool.real.inputs.front().size() * 2 + classes * 2;
  auto policy = selector::make_policy(input_dim, config.selector.hidden, derive_seed(config.seed, "selector-init"));
  selector::TrainingSettings settings;
  settings.episodes = config.selector.episodes;
  settings.batch_pairs = config.selector.batch_pairs;
  settings.learning_rate = config.selector.learning_rate;
  settings.window = config.selector.window;
  settings.reward_mode = config.selector.reward_mode;
  settings.delta_mode = config.selector.delta_mode;
  settings.seed = derive_seed(config.seed, "selector");
  run.selector_log = selector::train_selector(policy, env, settings);
  if (!config.selector.restore) run.joint_classifier = env.classifier();

  for (auto& c : run.candidates) c.score = selector::score_pair(policy, env.pair_input(c));
  run.policy = std::move(policy);
  return run;
}

std::vector<PairCandidate> choose_pairs(const PreparedRun& run, std::optional<std::size_t> budget) {
  if (!run.config.compositing.enabled) return {};
  if (budget && *budget == 0) return {};
  if (run.policy) {
    return budget ? selector::select_top(run.candidates, *budget)
                  : selector::select_by_threshold(run.candidates, run.config.selector.threshold);
  }
  auto shuffled = run.candidates;
  Rng rng(derive_seed(run.config.seed, "random-pairs"));
  rng.shuffle(shuffled);
  if (budget && shuffled.size() > *budget) shuffled.resize(*budget);
  return shuffled;
}

double toxic_fraction(const Workspace& ws, const std::vector<PairCandidate>& pairs) {
  if (pairs.empty()) return 0.0;
  const synthworld::PairQualityOracle oracle(ws.dataset.manifest, ws.spec);
  std::size_t toxic = 0;
  for (const auto& p : pairs) toxic += oracle.toxic(p.fg, p.bg) ? 1 : 0;
  return static_cast<double>(toxic) / static_cast<double>(pairs.size());
}

namespace {

ExperimentResult make_result(const PreparedRun& run, const TrainOutcome& outcome, const std::string& variant) {
  const auto& ws = *run.ws;
  ExperimentResult r;
  r.setting = std::string(to_string(run.config.setting));
  r.variant = variant;
  r.seed = run.config.seed;
  r.config_hash = config_hash(run.config);
  r.world_hash = ws.world_hash;
  r.pseudo_labeled = run.pool.pseudo_labeled;
  const auto test = ws.eval_set(SplitTag::Test);
  r.test_accuracy = neural::accuracy(outcome.model.params, test.inputs, test.labels);
  r.best_epoch = outcome.best_epoch;
  r.epochs = outcome.epochs;
  return r;
}

}  // namespace

ExperimentResult finish_run(const PreparedRun& run, const std::vector<PairCandidate>& pairs,
                            std::optional<std::size_t> budget, const std::string& variant,
                            ClassifierModel* model_out) {
  const auto start = Clock::now();
  const auto& ws = *run.ws;
  audit_pairs(ws, run.pool, pairs);
  neural::LabeledSet train = run.pool.real;
  for (const auto& p : pairs) {
    auto c = make_composite(ws, run.pool, p, run.config.compositing);
    train.append(std::move(c.features), std::move(c.label));
  }
  const auto outcome = train_classifier(train, ws.labeled(SplitTag::Val), ws.class_count(), run.config.optimizer,
                                        derive_seed(run.config.seed, "classifier"));
  auto r = make_result(run, outcome, variant);
  r.budget = budget;
  r.augmented_count = pairs.size();
  if (!pairs.empty() && ws.has_oracle()) r.toxic_fraction = toxic_fraction(ws, pairs);
  r.seconds = seconds_since(start);
  if (model_out) *model_out = outcome.model;
  return r;
}

ExperimentResult baseline_result(const PreparedRun& run, const std::string& variant) {
  auto r = make_result(run, run.baseline, variant);
  r.budget = 0;
  return r;
}

ExperimentResult labeled_only_result(const PreparedRun& run) {
  if (!run.stage0) throw ConfigError("labeled-only result exists only in the semi setting");
  auto r = make_result(run, *run.stage0, "labeled-only");
  r.budget = 0;
  r.pseudo_labeled = 0;
  return r;
}

ExperimentResult joint_result(const PreparedRun& run, std::optional<std::size_t> budget) {
  if (!run.joint_classifier) {
    auto r = baseline_result(run, "joint");
    r.budget = budget;
    return r;
  }
  TrainOutcome joint{ClassifierModel{*run.joint_classifier}, run.baseline.epochs, run.baseline.best_epoch};
  auto r = make_result(run, joint, "joint");
  r.budget = budget;
  std::vector<PairCandidate> used;
  for (const auto& e : run.selector_log.episodes) used.insert(used.end(), e.selected.begin(), e.selected.end());
  r.augmented_count = used.size();
  if (!used.empty() && run.ws->has_oracle()) r.toxic_fraction = toxic_fraction(*run.ws, used);
  return r;
}

namespace {

std::string variant_name(const RunConfig& config) {
  if (!config.compositing.enabled) return "no-augmentation";
  return config.selector.enabled ? "l2a" : "random-selection";
}

ExperimentResult run_pair_setting(const RunConfig& config) {
  const auto start = Clock::now();
  const auto ws = prepare_workspace(config);
  const auto run = prepare_run(ws, config);
  auto r = finish_run(run, choose_pairs(run, config.selector.budget), config.selector.budget, variant_name(config));
  r.seconds = seconds_since(start);
  return r;
}

}  // namespace

ExperimentResult run_full(const RunConfig& config) {
  if (config.setting != Setting::Full) throw ConfigError("run_full needs setting=full");
  return run_pair_setting(config);
}

ExperimentResult run_semi(const RunConfig& config) {
  if (config.setting != Setting::Semi) throw ConfigError("run_semi needs setting=semi");
  return run_pair_setting(config);
}

ExperimentResult run_fewshot(const RunConfig& config) {
  if (config.setting != Setting::FewShot) throw ConfigError("run_fewshot needs setting=fewshot");
  const auto start = Clock::now();
  const auto ws = prepare_workspace(config);
  const auto& fs = config.fewshot;
  const auto& manifest = ws.dataset.manifest;
  const std::size_t classes = ws.class_count();
  if (fs.novel_classes >= classes) throw ConfigError("no seen classes left for the few-shot split");

  std::vector<std::size_t> novel(fs.novel_classes);
  std::iota(novel.begin(), novel.end(), classes - fs.novel_classes);
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t pos = 0; pos < manifest.samples.size(); ++pos) members[ws.class_pos[pos]].push_back(pos);
  for (std::size_t c : novel) {
    if (members[c].size() < fs.shot + fs.query) {
      throw DomainError("novel class " + std::to_string(c) + " has fewer than shot + query samples");
    }
  }
  std::vector<std::vector<double>> embeddings;
  for (const auto& cls : manifest.classes) embeddings.push_back(cls.embedding);

  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cache;
  double total_accuracy = 0.0;
  const std::size_t dim = ws.features.front().size();
  for (std::size_t e = 0; e < fs.episodes; ++e) {
    Rng rng(derive_seed(config.seed, "fewshot", e));
    auto picked = novel;
    rng.shuffle(picked);
    picked.resize(fs.way);
    std::vector<std::vector<std::size_t>> support(fs.way), query(fs.way);
    for (std::size_t w = 0; w < fs.way; ++w) {
      auto pool = members[picked[w]];
      rng.shuffle(pool);
      support[w].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(fs.shot));
      query[w].assign(pool.begin() + static_cast<std::ptrdiff_t>(fs.shot),
                      pool.begin() + static_cast<std::ptrdiff_t>(fs.shot + fs.query));
    }

    std::vector<std::vector<double>> prototypes(fs.way, std::vector<double>(dim, 0.0));
    for (std::size_t w = 0; w < fs.way; ++w) {
      auto& proto = prototypes[w];
      for (std::size_t pos : support[w]) {
        for (std::size_t d = 0; d < dim; ++d) proto[d] += ws.features[pos][d];
      }
      if (fs.augment > 0) {
        std::vector<std::size_t> others;
        for (std::size_t v = 0; v < fs.way; ++v) {
          if (v != w) others.push_back(picked[v]);
        }
        const std::size_t nb_class = semmatch::nearest_within(embeddings, picked[w], others, config.metric);
        const std::size_t nb = static_cast<std::size_t>(std::find(picked.begin(), picked.end(), nb_class) - picked.begin());
        for (std::size_t j = 0; j < fs.augment; ++j) {
          const std::size_t fg = support[w][j % fs.shot];
          const std::size_t bg = support[nb][(j / fs.shot) % fs.shot];
          auto it = cache.find({fg, bg});
          if (it == cache.end()) {
            const auto y_fg = ws.one_hot_label(fg);
            const auto y_bg = ws.one_hot_label(bg);
            it = cache.emplace(std::make_pair(fg, bg),
                               composite_positions(ws, fg, bg, y_fg, y_bg, config.compositing).features)
                     .first;
          }
          for (std::size_t d = 0; d < dim; ++d) proto[d] += it->second[d];
        }
      }
      const double count = static_cast<double>(fs.shot + fs.augment);
      for (auto& v : proto) v /= count;
    }

    std::size_t hits = 0;
    for (std::size_t w = 0; w < fs.way; ++w) {
      for (std::size_t pos : query[w]) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < fs.way; ++v) {
          double d2 = 0.0;
          for (std::size_t d = 0; d < dim; ++d) {
            const double diff = ws.features[pos][d] - prototypes[v][d];
            d2 += diff * diff;
          }
          if (d2 < best_d) {
            best_d = d2;
            best = v;
          }
        }
        hits += best == w ? 1 : 0;
      }
    }
    total_accuracy += static_cast<double>(hits) / static_cast<double>(fs.way * fs.query);
  }

  ExperimentResult r;
  r.setting = "fewshot";
  r.variant = fs.augment > 0 ? "prototype+composites" : "prototype";
  r.seed = config.seed;
  r.config_hash = config_hash(config);
  r.world_hash = ws.world_hash;
  r.budget = fs.augment;
  r.augmented_count = fs.augment * fs.way;
  r.test_accuracy = fs.episodes ? total_accuracy / static_cast<double>(fs.episodes) : 0.0;
  r.seconds = seconds_since(start);
  return r;
}

ExperimentResult run(const RunConfig& config) {
  switch (config.setting) {
    case Setting::Full: return run_full(config);
    case Setting::Semi: return run_semi(config);
    case Setting::FewShot: return run_fewshot(config);
  }
  throw ConfigError("unknown setting");
}

std::vector<ExperimentResult> sweep_budget(const RunConfig& config, const std::vector<std::size_t>& budgets) {
  if (config.setting == Setting::FewShot) throw ConfigError("budget sweeps cover the full and semi settings");
  const auto ws = prepare_workspace(config);
  const auto run = prepare_run(ws, config);
  std::vector<ExperimentResult> out;
  for (std::size_t b : budgets) out.push_back(finish_run(run, choose_pairs(run, b), b, variant_name(config)));
  return out;
}

namespace {

std::size_t resolve_budget(const PreparedRun& l2a, const RunConfig& config) {
  if (config.selector.budget) return *config.selector.budget;
  return choose_pairs(l2a, std::nullopt).size();
}

}  // namespace

std::vector<ExperimentResult> compare_baselines(const RunConfig& config) {
  if (config.setting == Setting::FewShot) throw ConfigError("baseline comparison covers the full and semi settings");
  const auto ws = prepare_workspace(config);
  RunConfig base = config;
  base.selector.enabled = true;
  base.selector.restore = true;
  base.pairing = semmatch::PairingMode::Semantic;
  const auto l2a = prepare_run(ws, base);
  const std::size_t budget = resolve_budget(l2a, base);

  std::vector<ExperimentResult> rows;
  rows.push_back(baseline_result(l2a));
  rows.push_back(finish_run(l2a, choose_pairs(l2a, budget), budget, "l2a"));

  PreparedRun random = l2a;
  random.policy.reset();
  rows.push_back(finish_run(random, choose_pairs(random, budget), budget, "random-selection"));

  RunConfig intra = base;
  intra.pairing = semmatch::PairingMode::IntraClass;
  const auto intra_run = prepare_run(ws, intra);
  rows.push_back(finish_run(intra_run, choose_pairs(intra_run, budget), budget, "intra-class"));

  RunConfig joint = base;
  joint.selector.restore = false;
  joint.selector.budget = budget;
  const auto joint_run = prepare_run(ws, joint);
  rows.push_back(joint_result(joint_run, budget));
  return rows;
}

std::vector<ExperimentResult> ablation_sweep(const RunConfig& config) {
  if (config.setting == Setting::FewShot) throw ConfigError("ablations cover the full and semi settings");
  const auto ws = prepare_workspace(config);
  struct Row {
    bool selector, compositing, matching;
  };
  const Row table[] = {{true, true, true},   {false, true, true},  {true, false, true},  {true, true, false},
                       {true, false, false}, {false, true, false}, {false, false, true}, {false, false, false}};
  std::vector<ExperimentResult> rows;
  std::optional<std::size_t> budget = config.selector.budget;
  for (const auto& row : table) {
    RunConfig cfg = config;
    cfg.selector.enabled = row.selector;
    cfg.compositing.enabled = true;
    cfg.compositing.flags = {row.compositing, row.compositing, row.compositing};
    cfg.pairing = row.matching ? semmatch::PairingMode::Semantic : semmatch::PairingMode::Random;
    cfg.selector.budget = budget;
    const auto run = prepare_run(ws, cfg);
    if (!budget) budget = resolve_budget(run, cfg);
    if (rows.empty()) rows.push_back(baseline_result(run));
    const std::string name = std::string(row.selector ? "sel+" : "sel-") + (row.compositing ? "vc+" : "vc-") +
                             (row.matching ? "sm+" : "sm-");
    rows.push_back(finish_run(run, choose_pairs(run, budget), budget, name));
  }
  return rows;
}

void write_selector_log(const std::filesystem::path& path, const selector::TrainingLog& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& e : log.episodes) out << selector::to_json(e).dump() << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace l2a::pipeline
