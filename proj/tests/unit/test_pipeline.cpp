#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "l2a/common.hpp"
#include "l2a/pipeline.hpp"
#include "support.hpp"

using namespace l2a;
using namespace l2a::pipeline;

namespace {

RunConfig small_config(Setting setting) {
  RunConfig c;
  c.seed = 5;
  c.setting = setting;
  c.world.classes = 4;
  c.world.families = 2;
  c.world.samples_per_class = 10;
  c.world.test_per_class = 6;
  c.optimizer.epochs = 8;
  c.selector.episodes = 15;
  c.selector.batch_pairs = 6;
  c.selector.hidden = {8};
  c.selector.budget = 12;
  if (setting == Setting::Semi) c.labeled_fraction = 0.4;
  if (setting == Setting::FewShot) c.fewshot = {2, 2, 1, 3, 2, 20};
  return c;
}

// Three well-separated blobs.
neural::LabeledSet blobs(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  neural::LabeledSet s;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> x = {0.3 * rng.normal(), 0.3 * rng.normal()};
      x[k % 2] += k == 2 ? -2.0 : 2.0;
      std::vector<double> y(3, 0.0);
      y[k] = 1.0;
      s.append(std::move(x), std::move(y));
    }
  return s;
}

std::vector<std::size_t> labels_of(const neural::LabeledSet& s) {
  std::vector<std::size_t> out;
  for (const auto& y : s.targets) out.push_back(neural::argmax(y));
  return out;
}

}  // namespace

TEST_CASE("classifier training on separable data") {
  const auto train = blobs(30, 1), val = blobs(10, 2), test = blobs(30, 3);
  OptimizerConfig opt;
  opt.epochs = 30;
  const auto out = train_classifier(train, val, 3, opt, 7);
  CHECK(neural::accuracy(out.model.params, test.inputs, labels_of(test)) >= 0.95);
  CHECK(out.epochs.size() == 31);
  CHECK(out.epochs.front().epoch == 0);
  for (const auto& e : out.epochs) CHECK(out.epochs[out.best_epoch].val_loss <= e.val_loss);

  const auto again = train_classifier(train, val, 3, opt, 7);
  CHECK(again.model.params == out.model.params);

  opt.epochs = 0;
  const auto untrained = train_classifier(train, val, 3, opt, 7);
  CHECK(untrained.best_epoch == 0);
  CHECK(untrained.epochs.size() == 1);
  CHECK(std::abs(neural::accuracy(untrained.model.params, test.inputs, labels_of(test)) - 1.0 / 3.0) <= 0.1);
}

TEST_CASE("workspace splits and pools") {
  const auto cfg = small_config(Setting::Semi);
  const auto ws = prepare_workspace(cfg);
  CHECK(ws.class_count() == 4);
  const auto pool = labeled_pool(ws);
  CHECK(pool.pseudo_labeled == 0);
  CHECK(pool.entries.size() == pool.real.size());
  for (const auto& e : pool.entries) {
    CHECK(ws.dataset.manifest.samples[ws.position(e.sample)].split == SplitTag::TrainLabeled);
  }

  const auto run = prepare_run(ws, cfg);
  REQUIRE(run.stage0);
  const auto none = pseudo_labeled_pool(ws, run.stage0->model.params, 1.01);
  CHECK(none.pseudo_labeled == 0);
  CHECK(none.real.inputs == pool.real.inputs);
  const auto all = pseudo_labeled_pool(ws, run.stage0->model.params, 0.0);
  CHECK(all.pseudo_labeled == ws.dataset.manifest.samples_with(SplitTag::TrainUnlabeled).size());
}

TEST_CASE("split audit") {
  const auto cfg = small_config(Setting::Full);
  const auto ws = prepare_workspace(cfg);
  const auto pool = labeled_pool(ws);
  const auto& manifest = ws.dataset.manifest;
  const auto test_pos = manifest.samples_with(SplitTag::Test).front();
  const auto val_pos = manifest.samples_with(SplitTag::Val).front();
  const auto ok = pool.entries.front().sample;
  CHECK_NOTHROW(audit_pairs(ws, pool, {{ok, ok}}));
  CHECK_THROWS_AS(audit_pairs(ws, pool, {{ok, manifest.samples[test_pos].id}}), Error);
  CHECK_THROWS_AS(audit_pairs(ws, pool, {{manifest.samples[val_pos].id, ok}}), Error);
  CHECK_THROWS_AS(make_composite(ws, pool, {ok, manifest.samples[test_pos].id}, cfg.compositing), NotFoundError);
}

TEST_CASE("budget zero reduces to the baseline") {
  for (Setting s : {Setting::Full, Setting::Semi}) {
    CAPTURE(to_string(s));
    auto cfg = small_config(s);
    const auto ws = prepare_workspace(cfg);
    const auto run = prepare_run(ws, cfg);
    CHECK(choose_pairs(run, 0).empty());
    const auto zero = finish_run(run, {}, 0, "no-augmentation");
    CHECK(zero.same_as(baseline_result(run)));

    cfg.selector.budget = 0;
    const auto direct = pipeline::run(cfg);
    CHECK(direct.augmented_count == 0);
    CHECK(direct.test_accuracy == zero.test_accuracy);
  }
}

TEST_CASE("semi setting completes without pseudo-labels") {
  auto cfg = small_config(Setting::Semi);
  cfg.semi.confidence = 1.01;
  const auto ws = prepare_workspace(cfg);
  const auto run = prepare_run(ws, cfg);
  CHECK(run.pool.pseudo_labeled == 0);
  CHECK(run.pool.real.inputs == labeled_pool(ws).real.inputs);
  const auto r = pipeline::run(cfg);
  CHECK(r.pseudo_labeled == 0);
  CHECK(r.augmented_count > 0);

  const auto full = prepare_run(ws, small_config(Setting::Full));
  CHECK_THROWS_AS(labeled_only_result(full), ConfigError);
}

TEST_CASE("runs repeat bit for bit") {
  for (Setting s : {Setting::Full, Setting::Semi, Setting::FewShot}) {
    CAPTURE(to_string(s));
    const auto cfg = small_config(s);
    const auto a = pipeline::run(cfg);
    const auto b = pipeline::run(cfg);
    CHECK(a.same_as(b));
    CHECK(a.test_accuracy >= 0.0);
    CHECK(a.test_accuracy <= 1.0);
  }
}

TEST_CASE("selection respects the budget and candidates") {
  const auto cfg = small_config(Setting::Full);
  const auto ws = prepare_workspace(cfg);
  const auto run = prepare_run(ws, cfg);
  REQUIRE(run.policy);
  const auto picked = choose_pairs(run, 5);
  CHECK(picked.size() == 5);
  for (std::size_t i = 1; i < picked.size(); ++i) CHECK(picked[i - 1].score >= picked[i].score);
  CHECK(choose_pairs(run, run.candidates.size() + 10).size() == run.candidates.size());
  CHECK(run.selector_log.episodes.size() == cfg.selector.episodes);

  auto random = run;
  random.policy.reset();
  const auto r1 = choose_pairs(random, 5);
  CHECK(r1 == choose_pairs(random, 5));
  CHECK(r1.size() == 5);
  const double tf = toxic_fraction(ws, r1);
  CHECK(tf >= 0.0);
  CHECK(tf <= 1.0);
}

TEST_CASE("sweeps and comparisons") {
  auto cfg = small_config(Setting::Full);
  const auto one = sweep_budget(cfg, {0});
  REQUIRE(one.size() == 1);
  CHECK(one[0].augmented_count == 0);

  const auto rows = sweep_budget(cfg, {4, 4});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].same_as(rows[1]));

  cfg.selector.budget = 0;
  const auto cmp = compare_baselines(cfg);
  REQUIRE(cmp.size() == 5);
  for (const auto& r : cmp) {
    CHECK(r.world_hash == cmp[0].world_hash);
    CHECK(r.test_accuracy == cmp[0].test_accuracy);
  }
  cfg.setting = Setting::FewShot;
  CHECK_THROWS_AS(sweep_budget(cfg, {0}), ConfigError);
}

TEST_CASE("result rows serialize") {
  ExperimentResult r;
  r.setting = "semi";
  r.variant = "l2a";
  r.seed = 3;
  r.config_hash = "00000000000000aa";
  r.world_hash = "00000000000000bb";
  r.budget = 40;
  r.augmented_count = 40;
  r.pseudo_labeled = 12;
  r.toxic_fraction = 0.25;
  r.test_accuracy = 0.8125;
  r.best_epoch = 4;
  r.epochs = {{0, 1.0, 1.1}, {1, 0.5, 0.7}};
  const auto back = result_from_json(to_json(r));
  CHECK(back.same_as(r));
  CHECK(csv_row(r).size() == csv_header().size());

  testing::TempDir tmp;
  write_results_csv(tmp / "results.csv", {r, r});
  const auto text = testing::slurp(tmp / "results.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("few-shot reductions") {
  auto cfg = small_config(Setting::FewShot);
  cfg.fewshot.augment = 0;
  const auto plain = pipeline::run(cfg);
  CHECK(plain.variant == "prototype");
  CHECK(plain.augmented_count == 0);
  CHECK(plain.test_accuracy >= 0.0);

  cfg.fewshot.augment = 2;
  const auto aug = pipeline::run(cfg);
  CHECK(aug.variant == "prototype+composites");
  CHECK(aug.augmented_count == 4);
  CHECK(aug.world_hash == plain.world_hash);

  cfg.fewshot.shot = 9;
  CHECK_THROWS_AS(pipeline::run(cfg), ConfigError);
}
