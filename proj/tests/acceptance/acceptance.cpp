// Acceptance checks 1-10. One PASS/FAIL line per criterion; exit status 1
// when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "l2a/common.hpp"
#include "l2a/compositing.hpp"
#include "l2a/config.hpp"
#include "l2a/neural.hpp"
#include "l2a/pipeline.hpp"
#include "l2a/selector.hpp"
#include "l2a/synthworld.hpp"

using namespace l2a;

namespace {

struct Options {
  int seeds = 5;
  bool verbose = false;
  std::size_t semi_budget = 100;
  std::size_t full_budget = 200;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---------------------------------------------------------------- 1

Outcome kernels() {
  using namespace compositing;
  int failed = 0;
  int checks = 0;
  auto check = [&](bool ok) {
    ++checks;
    failed += ok ? 0 : 1;
  };

  VideoTensor fg(1, 2, 2, 1), bg(1, 2, 2, 1, 1.0f);
  const float fv[] = {0.2f, 0.4f, 0.6f, 0.8f};
  std::copy(std::begin(fv), std::end(fv), fg.data().begin());
  MaskTensor m(1, 2, 2);
  m.at(0, 0, 0) = 1;
  m.at(0, 1, 1) = 1;
  const auto out = composite(fg, m, bg);
  const double want[] = {0.2, 1.0, 1.0, 0.8};
  for (int i = 0; i < 4; ++i) check(near(out.data()[i], want[i], 1e-6));
  check(composite(fg, MaskTensor(1, 2, 2, 1), bg) == fg);
  check(composite(fg, MaskTensor(1, 2, 2, 0), bg) == bg);

  std::vector<double> y2(8, 0.0), y5(8, 0.0);
  y2[2] = 1.0;
  y5[5] = 1.0;
  const auto mixed = mix_labels(y2, y5, 0.9375);
  check(near(mixed[2], 0.9375, 1e-6) && near(mixed[5], 0.0625, 1e-6));
  check(mix_labels(y2, y5, 1.0) == y2);
  check(mix_labels(y2, y5, 0.0) == y5);

  check(mixing_weight(0.0) == 0.0);
  check(mixing_weight(1.0) == 1.0);
  check(mixing_weight(0.5) == 0.9375);  // 1 - 2^-4 is exact in binary
  check(near(mixing_weight(0.75), 0.99609375, 1e-6));
  for (int i = 0; i <= 1000; ++i) {
    const double g = i / 1000.0;
    if (mixing_weight(g) < g) {
      check(false);
      break;
    }
  }

  return {failed == 0, std::to_string(checks - failed) + "/" + std::to_string(checks) + " kernel checks"};
}

// ---------------------------------------------------------------- 2

std::vector<double> random_simplex(Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  double s = 0.0;
  for (auto& x : v) {
    x = rng.uniform(0.05, 1.0);
    s += x;
  }
  for (auto& x : v) x /= s;
  return v;
}

// Random parameters rather than the initializer's zero biases: a layer that is
// all dead at init puts the next pre-activation exactly on a ReLU kink.
void jitter(neural::MlpParams& p, Rng& rng) {
  auto flat = p.flatten();
  for (auto& v : flat) v += 0.1 * rng.normal();
  p.assign(flat);
}

Outcome gradients() {
  constexpr int kConfigs = 24;
  constexpr double kEps = 1e-5;
  double head = 0.0, policy = 0.0, ce = 0.0, elementwise = 0.0;
  for (int cfg = 0; cfg < kConfigs; ++cfg) {
    Rng rng(derive_seed(2024, "gradcheck", cfg));
    std::vector<std::size_t> dims{3 + rng.uniform_index(6)};
    const auto depth = 1 + rng.uniform_index(3);
    for (std::size_t l = 0; l < depth; ++l) dims.push_back(3 + rng.uniform_index(6));
    const std::size_t classes = 2 + rng.uniform_index(4);
    dims.push_back(classes);

    // Classifier head on soft targets.
    auto net = neural::make_mlp(dims, derive_seed(cfg, "head"));
    jitter(net, rng);
    neural::LabeledSet data;
    for (int i = 0; i < 3; ++i) {
      std::vector<double> x(dims.front());
      for (auto& v : x) v = rng.normal();
      data.append(x, random_simplex(rng, classes));
    }
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    const auto head_loss = [&](const neural::MlpParams& p, neural::MlpParams* g) {
      if (g) return neural::accumulate_gradient(p, data, all, *g);
      return neural::mean_loss(p, data);
    };
    const auto hr = neural::grad_check(net, head_loss, kEps);
    head = std::max(head, hr.norm_relative_error);
    elementwise = std::max(elementwise, hr.max_relative_error);

    // Selector policy: R * log pi over a small batch.
    const std::span<const std::size_t> hidden(dims.data() + 1, dims.size() - 2);
    auto pol = selector::make_policy(dims.front(), hidden, derive_seed(cfg, "policy"));
    jitter(pol.mlp, rng);
    selector::EpisodeRecord ep;
    ep.reward = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < 4; ++i) {
      std::vector<double> x(dims.front());
      for (auto& v : x) v = rng.normal();
      semmatch::PairCandidate c;
      c.action = rng.bernoulli(0.5) ? 1 : 0;
      ep.inputs.push_back(x);
      ep.batch.push_back(c);
    }
    const auto policy_loss = [&](const neural::MlpParams& p, neural::MlpParams* g) {
      const selector::SelectorPolicy sp{p};
      auto rec = ep;
      std::vector<int> actions;
      std::vector<double> scores;
      for (std::size_t i = 0; i < rec.batch.size(); ++i) {
        rec.batch[i].score = selector::score_pair(sp, rec.inputs[i]);
        scores.push_back(rec.batch[i].score);
        actions.push_back(rec.batch[i].action);
      }
      if (g) {
        auto flat = g->flatten();
        const auto add = selector::policy_gradient(sp, rec).flatten();
        for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += add[i];
        g->assign(flat);
      }
      return rec.reward * selector::log_policy(scores, actions);
    };
    const auto pr = neural::grad_check(pol.mlp, policy_loss, kEps);
    policy = std::max(policy, pr.norm_relative_error);
    elementwise = std::max(elementwise, pr.max_relative_error);

    // Soft cross-entropy with respect to the logits.
    std::vector<double> logits(classes);
    for (auto& v : logits) v = rng.normal();
    const auto target = random_simplex(rng, classes);
    const auto lg = neural::soft_cross_entropy(logits, target);
    double d2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      auto up = logits, down = logits;
      up[k] += kEps;
      down[k] -= kEps;
      const double numeric =
          (neural::soft_cross_entropy(up, target).loss - neural::soft_cross_entropy(down, target).loss) / (2 * kEps);
      elementwise = std::max(elementwise, neural::relative_error(lg.grad[k], numeric));
      d2 += (lg.grad[k] - numeric) * (lg.grad[k] - numeric);
      a2 += lg.grad[k] * lg.grad[k];
      n2 += numeric * numeric;
    }
    ce = std::max(ce, std::sqrt(d2 / std::max(a2, n2)));
  }
  const double worst = std::max({head, policy, ce});
  return {worst <= 1e-7, std::to_string(kConfigs) + " configs, relative error head " + fmt("%.2e", head) + " policy " +
                             fmt("%.2e", policy) + " soft-ce " + fmt("%.2e", ce) +
                             " (bound 1e-7); max per-entry " + fmt("%.2e", elementwise)};
}

// ---------------------------------------------------------------- 3

Outcome reinforce_oracle() {
  constexpr std::size_t n = 4;
  const std::size_t dims[] = {3, 5};
  auto policy = selector::make_policy(3, std::span(dims).subspan(1), 77);
  Rng rng(5);
  std::vector<std::vector<double>> inputs(n, std::vector<double>(3));
  for (auto& x : inputs) {
    for (auto& v : x) v = rng.normal();
  }
  std::vector<double> reward(1u << n);
  for (auto& r : reward) r = rng.uniform(-1.0, 1.0);

  auto expected_reward = [&](const neural::MlpParams& p) {
    const selector::SelectorPolicy pol{p};
    const auto scores = selector::score_batch(pol, inputs);
    double e = 0.0;
    for (std::size_t mask = 0; mask < reward.size(); ++mask) {
      std::vector<int> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = (mask >> i) & 1u;
      e += std::exp(selector::log_policy(scores, a)) * reward[mask];
    }
    return e;
  };

  // Exact expectation of the estimator over all 2^n action vectors.
  const auto scores = selector::score_batch(policy, inputs);
  std::vector<double> estimator(policy.mlp.parameter_count(), 0.0);
  for (std::size_t mask = 0; mask < reward.size(); ++mask) {
    selector::EpisodeRecord ep;
    ep.inputs = inputs;
    std::vector<int> a(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = (mask >> i) & 1u;
      semmatch::PairCandidate c;
      c.score = scores[i];
      c.action = a[i];
      ep.batch.push_back(c);
    }
    ep.reward = reward[mask];
    const double prob = std::exp(selector::log_policy(scores, a));
    const auto g = selector::policy_gradient(policy, ep).flatten();
    for (std::size_t k = 0; k < g.size(); ++k) estimator[k] += prob * g[k];
  }

  auto flat = policy.mlp.flatten();
  neural::MlpParams probe = policy.mlp;
  double worst = 0.0;
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double orig = flat[k];
    const double eps = 1e-5;
    flat[k] = orig + eps;
    probe.assign(flat);
    const double up = expected_reward(probe);
    flat[k] = orig - eps;
    probe.assign(flat);
    const double down = expected_reward(probe);
    flat[k] = orig;
    worst = std::max(worst, neural::relative_error(estimator[k], (up - down) / (2 * eps)));
  }
  return {worst <= 1e-3, std::to_string(flat.size()) + " parameters, max rel err " + fmt("%.2e", worst) +
                             " (bound 1e-3)"};
}

// ---------------------------------------------------------------- 4

Outcome delta_recurrence() {
  selector::RewardState s{1.0, 5, selector::RewardMode::Improvement, selector::DeltaMode::Normalized};
  const double loss = 0.5;
  double worst = 0.0;
  double prev_gap = std::fabs(s.delta - loss);
  for (int t = 1; t <= 30; ++t) {
    s = selector::update_delta(s, loss);
    const double gap = std::fabs(s.delta - loss);
    worst = std::max(worst, std::fabs(gap / prev_gap - 0.8));
    worst = std::max(worst, std::fabs(gap - std::pow(0.8, t) * 0.5) / std::pow(0.8, t));
    prev_gap = gap;
  }
  selector::RewardState lit{1.0, 5, selector::RewardMode::Improvement, selector::DeltaMode::Literal};
  const double literal = selector::update_delta(lit, 0.5).delta;
  const bool ok = worst <= 1e-9 && near(literal, 1.3, 1e-12);
  return {ok, "normalized contraction error " + fmt("%.1e", worst) + ", literal worked example " +
                  fmt("%.6f", literal)};
}

// ---------------------------------------------------------------- 5

// Loss 0.5 while the designated pair is missing, 0 once it is picked; every
// other pair picked adds 0.5 / (arms - 1).
class BanditEnv : public selector::Environment {
 public:
  BanditEnv(std::size_t arms, std::size_t designated) : arms_(arms), designated_(designated) {}
  std::vector<semmatch::PairCandidate> sample_batch(std::size_t, std::uint64_t) override {
    std::vector<semmatch::PairCandidate> out(arms_);
    for (std::size_t i = 0; i < arms_; ++i) out[i].fg = out[i].bg = static_cast<SampleId>(i);
    return out;
  }
  std::vector<double> pair_input(const semmatch::PairCandidate& p) override { return one_hot(p.fg, arms_); }
  double initial_loss() override { return 0.5; }
  double evaluate(std::span<const semmatch::PairCandidate> selected, std::size_t) override {
    double loss = 0.5;
    for (const auto& p : selected) loss += p.fg == designated_ ? -0.5 : 0.5 / static_cast<double>(arms_ - 1);
    return loss;
  }

 private:
  std::size_t arms_;
  std::size_t designated_;
};

Outcome bandit(const Options& opt) {
  constexpr std::size_t arms = 4;
  const RunConfig defaults;
  int passed = 0;
  std::string detail;
  for (int s = 0; s < opt.seeds; ++s) {
    const std::size_t designated = static_cast<std::size_t>(s) % arms;
    BanditEnv env(arms, designated);
    auto policy = selector::make_policy(arms, defaults.selector.hidden, derive_seed(s, "bandit-policy"));
    selector::TrainingSettings ts;
    ts.episodes = 500;
    ts.batch_pairs = arms;
    ts.learning_rate = 0.1;
    ts.seed = derive_seed(s, "bandit");
    selector::train_selector(policy, env, ts);
    double on = 0.0, off = 0.0;
    for (std::size_t i = 0; i < arms; ++i) {
      const double w = selector::score_pair(policy, one_hot(i, arms));
      if (i == designated) {
        on = w;
      } else {
        off = std::max(off, w);
      }
    }
    passed += on > 0.9 && off < 0.1 ? 1 : 0;
    detail += (detail.empty() ? "" : ", ") + fmt("%.3f", on) + "/" + fmt("%.3f", off);
  }
  return {passed == opt.seeds,
          std::to_string(passed) + "/" + std::to_string(opt.seeds) + " seeds; designated/max-other omega " + detail};
}

// ---------------------------------------------------------------- 6

RunConfig base_config(std::uint64_t seed, Setting setting) {
  RunConfig c;
  c.seed = seed;
  c.setting = setting;
  if (setting == Setting::Semi) c.labeled_fraction = 0.2;
  c.validate();
  return c;
}

Outcome selector_quality(const Options& opt) {
  std::vector<double> l2a, random, pool, good_w, toxic_w;
  for (int s = 1; s <= opt.seeds; ++s) {
    auto cfg = base_config(static_cast<std::uint64_t>(s), Setting::Full);
    cfg.selector.budget = opt.full_budget;
    const auto ws = pipeline::prepare_workspace(cfg);
    auto run = pipeline::prepare_run(ws, cfg);
    const synthworld::PairQualityOracle oracle(ws.dataset.manifest, ws.spec);
    double gw = 0.0, tw = 0.0;
    std::size_t gn = 0, tn = 0;
    for (const auto& c : run.candidates) {
      if (oracle.toxic(c.fg, c.bg)) {
        tw += c.score;
        ++tn;
      } else {
        gw += c.score;
        ++gn;
      }
    }
    good_w.push_back(gn ? gw / gn : 0.0);
    toxic_w.push_back(tn ? tw / tn : 0.0);
    pool.push_back(pipeline::toxic_fraction(ws, run.candidates));
    l2a.push_back(pipeline::toxic_fraction(ws, pipeline::choose_pairs(run, opt.full_budget)));
    run.policy.reset();
    random.push_back(pipeline::toxic_fraction(ws, pipeline::choose_pairs(run, opt.full_budget)));
    if (opt.verbose) {
      std::printf("  seed %d: candidates toxic %.3f, l2a %.3f, random %.3f, mean omega good %.3f toxic %.3f\n", s,
                  pool.back(), l2a.back(), random.back(), good_w.back(), toxic_w.back());
    }
  }
  const double ratio = mean(random) > 0 ? mean(l2a) / mean(random) : 1.0;
  return {mean(l2a) <= mean(random) / 3.0,
          "toxic fraction l2a " + fmt("%.3f", mean(l2a)) + " vs random " + fmt("%.3f", mean(random)) + " (ratio " +
              fmt("%.2f", ratio) + ", bound 0.33); candidates " + fmt("%.3f", mean(pool)) + "; mean omega good " +
              fmt("%.3f", mean(good_w)) + " toxic " + fmt("%.3f", mean(toxic_w))};
}

// ---------------------------------------------------------------- 7, 9

struct CompareTable {
  std::vector<double> none, l2a, random, intra;
};

CompareTable semi_compare(const Options& opt) {
  CompareTable t;
  for (int s = 1; s <= opt.seeds; ++s) {
    auto cfg = base_config(static_cast<std::uint64_t>(s), Setting::Semi);
    cfg.selector.budget = opt.semi_budget;
    const auto rows = pipeline::compare_baselines(cfg);
    for (const auto& r : rows) {
      if (r.variant == "no-augmentation") t.none.push_back(r.test_accuracy);
      if (r.variant == "l2a") t.l2a.push_back(r.test_accuracy);
      if (r.variant == "random-selection") t.random.push_back(r.test_accuracy);
      if (r.variant == "intra-class") t.intra.push_back(r.test_accuracy);
    }
    if (opt.verbose) {
      std::printf("  seed %d: none %.4f l2a %.4f random %.4f intra %.4f\n", s, t.none.back(), t.l2a.back(),
                  t.random.back(), t.intra.back());
    }
  }
  return t;
}

std::string mean_se(const std::vector<double>& v) {
  return fmt("%.2f", 100 * mean(v)) + "+-" + fmt("%.2f", 100 * std_error(v));
}

Outcome ordered_ablation(const CompareTable& t) {
  auto above = [](const std::vector<double>& hi, const std::vector<double>& lo) {
    return mean(hi) - mean(lo) >= 0.01 && mean(hi) - std_error(hi) > mean(lo) + std_error(lo);
  };
  return {above(t.l2a, t.random) && above(t.random, t.none),
          "accuracy % l2a " + mean_se(t.l2a) + " > random " + mean_se(t.random) + " > none " + mean_se(t.none) +
              " (gaps >= 1 point, disjoint +-1 s.e.)"};
}

Outcome intra_class(const CompareTable& t) {
  return {mean(t.intra) < mean(t.l2a),
          "accuracy % intra-class " + mean_se(t.intra) + " < semantic " + mean_se(t.l2a)};
}

// ---------------------------------------------------------------- 8

Outcome budget_curve(const Options& opt) {
  const std::vector<std::size_t> budgets{0, 25, 50, 100, 200, 400, 800, 1u << 30};
  std::vector<std::vector<double>> acc(budgets.size());
  for (int s = 1; s <= opt.seeds; ++s) {
    auto cfg = base_config(static_cast<std::uint64_t>(s), Setting::Full);
    const auto rows = pipeline::sweep_budget(cfg, budgets);
    for (std::size_t i = 0; i < rows.size(); ++i) acc[i].push_back(rows[i].test_accuracy);
    if (opt.verbose) {
      std::printf("  seed %d:", s);
      for (const auto& r : rows) std::printf(" %zu:%.4f", r.augmented_count, r.test_accuracy);
      std::printf("\n");
    }
  }
  std::vector<double> m;
  for (const auto& a : acc) m.push_back(mean(a));
  const auto peak = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
  const bool ok = peak > 0 && peak + 1 < m.size() && m[peak] > m.front() && m[peak] > m.back();
  std::string curve;
  for (std::size_t i = 0; i < m.size(); ++i) {
    curve += (i ? " " : "") + (i + 1 == m.size() ? std::string("all") : std::to_string(budgets[i])) + ":" +
             fmt("%.2f", 100 * m[i]);
  }
  return {ok, "mean accuracy % by budget " + curve};
}

// ---------------------------------------------------------------- 10

Outcome determinism() {
  RunConfig cfg = base_config(3, Setting::Semi);
  cfg.world.classes = 4;
  cfg.world.families = 2;
  cfg.world.samples_per_class = 12;
  cfg.world.test_per_class = 10;
  cfg.selector.episodes = 60;
  cfg.optimizer.epochs = 20;
  cfg.labeled_fraction = 0.3;

  int failed = 0;
  std::string notes;
  for (Setting setting : {Setting::Full, Setting::Semi}) {
    RunConfig c = cfg;
    c.setting = setting;
    if (setting == Setting::Full) c.labeled_fraction = 1.0;
    const auto ws = pipeline::prepare_workspace(c);
    const auto run = pipeline::prepare_run(ws, c);
    const auto zero = pipeline::finish_run(run, pipeline::choose_pairs(run, 0), 0, "no-augmentation");
    const auto base = pipeline::baseline_result(run);
    if (!zero.same_as(base)) {
      ++failed;
      notes += std::string(" budget-0 differs in ") + std::string(to_string(setting)) + ";";
    }
    c.selector.budget = 40;
    const auto a = pipeline::run(c);
    const auto b = pipeline::run(c);
    if (!a.same_as(b)) {
      ++failed;
      notes += std::string(" repeat differs in ") + std::string(to_string(setting)) + ";";
    }
  }
  RunConfig few = cfg;
  few.setting = Setting::FewShot;
  few.fewshot = {2, 2, 1, 3, 2, 50};
  few.validate();
  if (!pipeline::run(few).same_as(pipeline::run(few))) {
    ++failed;
    notes += " repeat differs in fewshot;";
  }
  return {failed == 0, failed == 0 ? "budget-0 equals baseline (full, semi); repeated runs identical (full, semi, "
                                     "fewshot)"
                                   : notes};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Options opt;
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  app.add_option("--seeds", opt.seeds, "Seeds for the averaged criteria");
  app.add_option("--semi-budget", opt.semi_budget, "Augmentation budget for criteria 7 and 9");
  app.add_option("--full-budget", opt.full_budget, "Selection budget for criterion 6");
  app.add_flag("--verbose", opt.verbose, "Per-seed detail");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> chosen(only.begin(), only.end());
  auto wanted = [&](int c) { return chosen.empty() || chosen.contains(c); };

  int failures = 0;
  auto report = [&](int id, double limit_s, const std::function<Outcome()>& body) {
    if (!wanted(id)) return;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = limit_s <= 0 || secs <= limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("criterion %2d: %s  %s  [%.1f s%s]\n", id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
  };

  report(1, 1.0, kernels);
  report(2, 30.0, gradients);
  report(3, 10.0, reinforce_oracle);
  report(4, 0.0, delta_recurrence);
  report(5, 60.0, [&] { return bandit(opt); });
  report(6, 600.0, [&] { return selector_quality(opt); });
  CompareTable table;
  double table_secs = 0.0;
  bool table_ready = false;
  auto table_for = [&]() -> const CompareTable& {
    if (!table_ready) {
      const auto start = std::chrono::steady_clock::now();
      table = semi_compare(opt);
      table_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      table_ready = true;
    }
    return table;
  };
  report(7, 1200.0, [&] { return ordered_ablation(table_for()); });
  report(8, 0.0, [&] { return budget_curve(opt); });
  report(9, 0.0, [&] {
    auto o = intra_class(table_for());
    if (table_secs > 0 && !wanted(7)) o.detail += " (shared runs)";
    return o;
  });
  report(10, 0.0, determinism);
  return failures == 0 ? 0 : 1;
}
