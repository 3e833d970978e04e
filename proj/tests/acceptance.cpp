// Acceptance suite: one line per criterion, non-zero exit if any fails.
// Usage: acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "failscope/cli.hpp"
#include "failscope/evaluation.hpp"
#include "failscope/generators.hpp"
#include "failscope/io.hpp"
#include "failscope/models.hpp"
#include "failscope/rules.hpp"
#include "failscope/sampling.hpp"
#include "failscope/subjects.hpp"

using namespace failscope;
using nlohmann::json;

namespace {

// Pinned tolerances and settings.
constexpr Scalar kFig5Tolerance = 1e-12;
constexpr std::size_t kSeeds = 10;
constexpr Scalar kSuiteTime = 3000.0;  // simulated seconds: 100 executions at the default exec_cost
constexpr std::size_t kParetoMinSubjects = 4;
constexpr Scalar kAccuracyMargin = 0.05;
constexpr Scalar kAlpha = 0.05;
constexpr Scalar kSizeFactor = 1.33;
constexpr Scalar kExecOverTrain = 100.0;
constexpr Scalar kCapRelError = 0.10;
constexpr Scalar kRuleAccuracy = 0.9;
constexpr std::size_t kRuleTests = 10000;
constexpr std::size_t kTreeMinSubjects = 3;
constexpr Scalar kGradTolerance = 1e-4;
constexpr Scalar kFdStep = 1e-5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<std::string> kSubjects = {"sum_cap", "threshold_mix", "band", "step_controller", "xor_regions"};

ExperimentPlan suite_plan(const std::vector<std::string>& labels) {
  json j = {{"subjects", kSubjects},
            {"strategies", labels},
            {"seeds", {{"first", 1}, {"count", kSeeds}}},
            {"budget", {{"max_time", kSuiteTime}}}};
  auto plan = ExperimentPlan::from_json(j);
  plan.workers = std::max(1u, std::thread::hardware_concurrency());
  return plan;
}

const ExperimentReport& main_report() {
  static const ExperimentReport report = [] {
    auto plan = suite_plan({"SA_DYN", "RS", "RT_GUIDED", "LR_GUIDED", "SOTA"});
    return run_experiment(plan, builtin_catalog());
  }();
  return report;
}

const json& stats(const ExperimentReport& r, const std::string& subject, const std::string& strategy) {
  for (const auto& s : r.subjects)
    if (s.subject == subject) return s.strategy_stats.at(strategy);
  throw std::runtime_error("no subject " + subject);
}

// ---------------------------------------------------------------- 1: gating

class ConstantRegressor final : public Regressor {
 public:
  explicit ConstantRegressor(Scalar v) : value(v) {}
  Scalar value;
  Scalar predict(const Eigen::Ref<const RowVector>&) const override { return value; }
  nlohmann::json summary() const override { return {{"constant", value}}; }
};

GenerationResult run_stub(Scalar fbar, Scalar e, std::size_t d) {
  const Subject s = make_subject("band");
  GeneratorConfig cfg = parse_strategy("SA_GL");
  cfg.sampler.initial_dataset_size = d;
  cfg.max_iterations = 5;
  GeneratorHooks hooks;
  hooks.trainer = [fbar, e](ModelType t, const LabeledDataset& ds, Rng&) {
    TrainedModel m;
    m.type = t;
    m.regressor = std::make_shared<ConstantRegressor>(fbar);
    m.encoder = Encoder(ds.space());
    m.holdout_mae = e;
    return m;
  };
  ExecutionBudget budget(1000, 1e6, s.exec_cost);
  Rng rng(1);
  return generate(s, cfg, budget, rng, hooks);
}

Outcome criterion_gating() {
  const std::size_t d = 10;
  const auto hi = run_stub(8.0, 2.0, d);
  const auto lo = run_stub(-1.0, 2.0, d);
  const auto& first_hi = hi.dataset.rows().at(d);
  const auto& first_lo = lo.dataset.rows().at(d);
  const bool predicted = first_hi.source == RowSource::Predicted && first_hi.fitness == 8.0 &&
                         hi.consumed_executions == d && hi.dataset.count(RowSource::Predicted) == hi.dataset.size() - d;
  const bool executed = first_lo.source == RowSource::Executed && lo.consumed_executions == lo.dataset.size() &&
                        lo.dataset.size() > d;
  return {predicted && executed,
          fmt("F=8,e=2: row %zu %s, executions %zu/%zu; F=-1,e=2: row %zu %s, executions %zu", d,
              std::string(to_string(first_hi.source)).c_str(), hi.consumed_executions, d, d,
              std::string(to_string(first_lo.source)).c_str(), lo.consumed_executions)};
}

// ------------------------------------------------------- 2: range reduction

Outcome criterion_ranges() {
  // Root v1 <= 10; left: v2 <= 20 -> leaf 5.0, else v3 <= 5 -> leaf 0.5 / leaf -0.3; right: leaf -7.
  DecisionTree tree;
  auto node = [&](int feature, Scalar thr, int l, int r, Scalar value, int depth) {
    TreeNode n;
    n.feature = feature;
    n.threshold = thr;
    n.left = l;
    n.right = r;
    n.value = value;
    n.depth = depth;
    tree.nodes.push_back(n);
  };
  node(0, 10.0, 1, 2, 0.0, 0);
  node(1, 20.0, 3, 4, 0.0, 1);
  node(-1, 0.0, -1, -1, -7.0, 1);
  node(-1, 0.0, -1, -1, 5.0, 2);
  node(2, 5.0, 5, 6, 0.0, 2);
  node(-1, 0.0, -1, -1, 0.5, 3);
  node(-1, 0.0, -1, -1, -0.3, 3);
  const InputSpace space({InputVariable::real("v1", 0, 20), InputVariable::real("v2", 10, 30),
                          InputVariable::real("v3", 1, 7)});
  const Encoder enc(space);
  const auto leaves = boundary_leaves(tree);
  if (!leaves) return {false, "no boundary leaves"};
  const auto original = space_ranges(space);
  const auto r = reduce_ranges(*leaves, enc, original, original, 0.05);
  const std::vector<RealRange> want = {{9.5, 10.5}, {19.0, 21.0}, {4.75, 5.25}};
  bool ok = r.size() == 3;
  for (std::size_t i = 0; ok && i < 3; ++i)
    ok = std::abs(r[i].lower - want[i].lower) <= kFig5Tolerance && std::abs(r[i].upper - want[i].upper) <= kFig5Tolerance;
  return {ok, fmt("v1 [%g, %g], v2 [%g, %g], v3 [%g, %g]", r[0].lower, r[0].upper, r[1].lower, r[1].upper, r[2].lower,
                  r[2].upper)};
}

// ------------------------------------------------------------ 3: Pareto

Outcome criterion_pareto() {
  auto plan = suite_plan({"SA_DYN", "SA_GL", "SA_GNL", "SA_LSB", "SA_RT", "SA_NN", "SA_RF", "SA_SVR"});
  plan.learn_rules = false;
  plan.tree_metrics = false;
  const auto report = run_experiment(plan, builtin_catalog());
  std::size_t on_front = 0;
  std::string missing;
  for (const auto& s : report.subjects) {
    const bool member = std::any_of(s.front.begin(), s.front.end(), [](const ParetoPoint& p) { return p.algorithm == "SA_DYN"; });
    on_front += member;
    if (!member) missing += " " + s.subject;
  }
  return {on_front >= kParetoMinSubjects && report.failed_runs() == 0,
          fmt("SA_DYN on the front for %zu of 5 subjects (need %zu)%s%s", on_front, kParetoMinSubjects,
              missing.empty() ? "" : "; dominated on:", missing.c_str())};
}

// ------------------------------------------------------- 4: accuracy order

Outcome criterion_accuracy() {
  const auto& r = main_report();
  auto suite_mean = [&](const std::string& k) { return mean(r.suite_accuracy.at(k)); };
  const Scalar dyn = suite_mean("SA_DYN"), rs = suite_mean("RS"), rt = suite_mean("RT_GUIDED"), lr = suite_mean("LR_GUIDED");
  const Scalar p = wilcoxon_rank_sum(r.suite_accuracy.at("SA_DYN"), r.suite_accuracy.at("RS"));
  const bool ok = dyn >= rs + kAccuracyMargin && dyn >= rt && dyn >= lr && p < kAlpha &&
                  r.suite_accuracy.at("SA_DYN").size() == kSeeds;
  return {ok, fmt("mean accuracy SA_DYN %.4f, RS %.4f (diff %+.4f, need >= %.2f), RT_GUIDED %.4f, LR_GUIDED %.4f; p = %.2g",
                  dyn, rs, dyn - rs, kAccuracyMargin, rt, lr, p)};
}

// ------------------------------------------------------------ 5: size gain

Scalar measured_training_seconds() {
  // Wall-clock of fitting all seven surrogates on a preprocessing-sized dataset.
  const Subject s = make_subject("step_controller");
  SamplerConfig cfg;
  cfg.initial_dataset_size = 60;
  ExecutionBudget budget(1000, 1e9, s.exec_cost);
  Rng rng(3);
  const auto ds = preprocess(s, cfg, budget, rng).dataset;
  Scalar worst = 0.0;
  for (auto t : kSurrogateTypes) {
    Rng r(4);
    TrainOptions opts;
    opts.bounds = s.bounds;
    const auto start = std::chrono::steady_clock::now();
    (void)train(t, ds, opts, r);
    worst = std::max(worst, std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - start).count());
  }
  return worst;
}

Outcome criterion_size() {
  const auto& r = main_report();
  const Scalar exec_cost = builtin_catalog().at("sum_cap").exec_cost;
  const Scalar train_cost = measured_training_seconds();
  bool ok = exec_cost >= kExecOverTrain * train_cost;
  std::vector<Scalar> dyn_all, rs_all;
  std::string per;
  for (const auto& name : kSubjects) {
    const Scalar d = stats(r, name, "SA_DYN").at("median_size");
    const Scalar b = stats(r, name, "RS").at("median_size");
    ok = ok && d >= kSizeFactor * b;
    per += fmt(" %s %.0f/%.0f", name.c_str(), d, b);
  }
  for (const auto& run : r.runs) {
    if (run.strategy == "SA_DYN") dyn_all.push_back(static_cast<Scalar>(run.dataset_size));
    if (run.strategy == "RS") rs_all.push_back(static_cast<Scalar>(run.dataset_size));
  }
  const Scalar ratio = median(dyn_all) / median(rs_all);
  ok = ok && ratio >= kSizeFactor;
  return {ok, fmt("median |SA_DYN|/|RS| = %.2f (need >= %.2f);%s; exec_cost %.0f s vs slowest fit %.4f s", ratio,
                  kSizeFactor, per.c_str(), exec_cost, train_cost)};
}

// -------------------------------------------------------- 6: rule recovery

Outcome criterion_rules() {
  const auto candidates = enumerate_sum_features(8).size();
  json j = {{"subjects", {"sum_cap"}},
            {"strategies", {"SA_DYN"}},
            {"seeds", {{"first", 1}, {"count", kSeeds}}},
            {"budget", {{"max_time", kSuiteTime}}},
            {"test_size", kRuleTests},
            {"tree_metrics", false}};
  auto plan = ExperimentPlan::from_json(j);
  plan.workers = std::max(1u, std::thread::hardware_concurrency());
  const auto catalog = builtin_catalog();
  const Subject& s = catalog.at("sum_cap");
  const auto q = s.params.at("subset").get<std::vector<std::size_t>>();
  const Scalar cap = s.params.at("cap");
  const auto report = run_experiment(plan, catalog);

  std::vector<Scalar> errors, accs;
  for (const auto& run : report.runs) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (const auto& rj : run.fail_rules_json) {
      const Rule rule = rule_from_json(rj);
      for (const auto& p : rule.condition) {
        const bool unit = p.feature.weights.empty() ||
                          std::all_of(p.feature.weights.begin(), p.feature.weights.end(), [](Scalar w) { return w == 1.0; });
        if (p.feature.kind == Feature::Kind::Sum && p.feature.indices == q && unit && (p.op == Op::Gt || p.op == Op::Ge))
          best = std::min(best, std::abs(p.constant - cap) / cap);
      }
    }
    errors.push_back(best);
    accs.push_back(run.rules ? run.rules->accuracy : 0.0);
  }
  const Scalar med_err = median(errors), med_acc = median(accs);
  const auto recovered = std::count_if(errors.begin(), errors.end(), [](Scalar e) { return e <= kCapRelError; });
  const bool ok = candidates == 248 && med_err <= kCapRelError && med_acc >= kRuleAccuracy;
  return {ok, fmt("%zu candidate sets; sum(Q) > c rule within %.0f%% of the cap in %ld of %zu seeds (median error %.4f); "
                  "median accuracy %.4f on %zu inputs",
                  candidates, kCapRelError * 100, static_cast<long>(recovered), errors.size(), med_err, med_acc, kRuleTests)};
}

// ---------------------------------------------------------------- 7: oracles

bool brute_force_front_matches(Rng& rng) {
  std::vector<ParetoPoint> pts;
  const std::size_t n = 1 + rng.below(40);
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back({"p" + std::to_string(i), static_cast<Scalar>(rng.below(15)), static_cast<Scalar>(rng.below(15))});
  std::vector<std::string> brute;
  for (std::size_t i = 0; i < n; ++i) {
    bool dominated = false;
    for (std::size_t k = 0; k < n && !dominated; ++k) {
      const auto &p = pts[k], &q = pts[i];
      dominated = p.errors <= q.errors && p.dataset_size >= q.dataset_size &&
                  (p.errors < q.errors || p.dataset_size > q.dataset_size);
    }
    if (!dominated) brute.push_back(pts[i].algorithm);
  }
  std::vector<std::string> fast;
  for (const auto& p : pareto_front(pts)) fast.push_back(p.algorithm);
  return fast == brute;
}

Rule random_rule(const InputSpace& space, Rng& rng) {
  Rule r;
  const std::size_t k = 1 + rng.below(3);
  for (std::size_t i = 0; i < k; ++i) {
    Predicate p;
    if (rng.below(3) == 0) {
      std::vector<std::size_t> idx = {0, 1, 2};
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(rng.below(3)));
      p.feature = Feature::sum(space, idx);
      p.constant = std::round(rng.uniform(2.0, 18.0));
    } else {
      p.feature = Feature::var(space, rng.below(3));
      p.constant = std::round(rng.uniform(1.0, 9.0));
    }
    p.op = static_cast<Op>(rng.below(4));
    r.condition.push_back(p);
  }
  return r;
}

// Pairs are biased towards implications: b often extends a with extra
// predicates or tightens one of a's constants.
std::pair<Rule, Rule> random_pair(const InputSpace& space, Rng& rng) {
  Rule a = random_rule(space, rng);
  Rule b = rng.below(4) == 0 ? random_rule(space, rng) : a;
  if (b == a) {
    if (rng.below(2)) {
      for (const auto& p : random_rule(space, rng).condition) b.condition.push_back(p);
    } else {
      auto& p = b.condition[rng.below(b.condition.size())];
      const Scalar shift = std::round(rng.uniform(0.0, 3.0));
      p.constant += (p.op == Op::Gt || p.op == Op::Ge) ? shift : -shift;
    }
  }
  return {a, b};
}

std::pair<std::size_t, std::size_t> implication_counterexamples(Rng& rng) {
  const InputSpace space({InputVariable::real("v1", 0, 10), InputVariable::real("v2", 0, 10), InputVariable::real("v3", 0, 10)});
  std::size_t accepted = 0, counterexamples = 0;
  for (int pair = 0; pair < 100; ++pair) {
    const auto [a, b] = random_pair(space, rng);
    if (!implies(a, b, space)) continue;
    ++accepted;
    for (int k = 0; k < 10000; ++k) {
      const TestInput t = sample_uniform(space, rng);
      counterexamples += b.matches(t) && !a.matches(t);
    }
  }
  return {accepted, counterexamples};
}

Scalar permutation_p(const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
  std::vector<Scalar> all = a;
  all.insert(all.end(), b.begin(), b.end());
  const std::size_t n = all.size(), n1 = a.size();
  std::vector<Scalar> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    Scalar less = 0, equal = 0;
    for (std::size_t k = 0; k < n; ++k) {
      less += all[k] < all[i];
      equal += all[k] == all[i];
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  const Scalar expected = static_cast<Scalar>(n1) * static_cast<Scalar>(n + 1) / 2.0;
  Scalar observed = 0;
  for (std::size_t i = 0; i < n1; ++i) observed += rank[i];
  const Scalar dev = std::abs(observed - expected);
  std::size_t extreme = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
    Scalar w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) w += rank[i];
    ++total;
    extreme += std::abs(w - expected) >= dev - 1e-9;
  }
  return static_cast<Scalar>(extreme) / static_cast<Scalar>(total);
}

Outcome criterion_oracles() {
  Rng rng(20240607);
  std::vector<std::string> parts;
  bool ok = true;

  // (a)
  std::size_t pareto_ok = 0;
  for (int i = 0; i < 100; ++i) pareto_ok += brute_force_front_matches(rng);
  ok = ok && pareto_ok == 100;
  parts.push_back(fmt("(a) %zu/100 fronts", pareto_ok));

  // (b)
  const auto [accepted, counter] = implication_counterexamples(rng);
  ok = ok && counter == 0 && accepted > 0;
  parts.push_back(fmt("(b) %zu implications, %zu counterexamples", accepted, counter));

  // (c)
  Scalar worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t n1 = 3; n1 <= 9; ++n1)
    for (std::size_t n2 = 3; n1 + n2 <= 12; ++n2)
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<Scalar> a(n1), b(n2);
        for (auto& x : a) x = static_cast<Scalar>(rng.below(8));
        for (auto& x : b) x = static_cast<Scalar>(rng.below(8));
        worst = std::max(worst, std::abs(wilcoxon_rank_sum(a, b) - permutation_p(a, b)));
        ++cases;
      }
  ok = ok && worst <= 1e-12;
  parts.push_back(fmt("(c) %zu samples, max |dp| %.1e", cases, worst));

  // (d)
  const std::vector<Scalar> x = {1.0, 2.0, 2.0, 5.0}, lo = {1, 2, 3}, hi = {10, 11, 12};
  const Scalar same = a12(x, x), sep = a12(hi, lo);
  ok = ok && same == 0.5 && sep == 1.0;
  parts.push_back(fmt("(d) A12(x,x)=%.2f, separated %.2f", same, sep));

  // (e)
  const InputSpace sp({InputVariable::real("a", 0, 10), InputVariable::real("b", -5, 5), InputVariable::real("c", 0, 1)});
  std::vector<TestInput> minority;
  for (int i = 0; i < 12; ++i) minority.push_back(sample_uniform(sp, rng));
  const std::size_t k = 5;
  const auto synth = smote_samples(sp, minority, k, 1000, rng);
  std::size_t on_segment = 0;
  for (const auto& s : synth) {
    const auto& base = minority[s.base];
    const auto& nb = minority[s.neighbor];
    std::vector<std::pair<Scalar, std::size_t>> dist;
    for (std::size_t i = 0; i < minority.size(); ++i)
      if (i != s.base) dist.emplace_back(normalized_distance(sp, base, minority[i]), i);
    std::sort(dist.begin(), dist.end());
    bool near = false;
    for (std::size_t i = 0; i < k; ++i) near = near || dist[i].second == s.neighbor;
    const TestInput expect = base + s.u * (nb - base);
    on_segment += near && s.u >= 0.0 && s.u <= 1.0 && (s.input - expect).cwiseAbs().maxCoeff() <= 1e-12;
  }
  ok = ok && on_segment == synth.size() && synth.size() == 1000;
  parts.push_back(fmt("(e) %zu/%zu synthetics on a neighbour segment", on_segment, synth.size()));

  // (f)
  Matrix X(200, 3);
  Vector y(200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (Eigen::Index c = 0; c < 3; ++c) X(i, c) = rng.uniform(-2, 2);
    y[i] = X(i, 0) - 0.5 * X(i, 1) + 0.3 * rng.normal() > 0 ? 1.0 : 0.0;
  }
  LogisticObjective obj{X, y, 0.1};
  Scalar grad_err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Vector theta(4);
    for (Eigen::Index c = 0; c < 4; ++c) theta[c] = rng.uniform(-1.5, 1.5);
    const Vector g = obj.gradient(theta);
    for (Eigen::Index c = 0; c < 4; ++c) {
      Vector up = theta, down = theta;
      up[c] += kFdStep;
      down[c] -= kFdStep;
      grad_err = std::max(grad_err, std::abs(g[c] - (obj.value(up) - obj.value(down)) / (2 * kFdStep)));
    }
  }
  ok = ok && grad_err < kGradTolerance;
  parts.push_back(fmt("(f) max gradient error %.1e", grad_err));

  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : "; ") + p;
  return {ok, detail};
}

// ------------------------------------------------------------- 8: trees

Outcome criterion_trees() {
  const auto& r = main_report();
  std::size_t wins = 0;
  std::string per;
  for (const auto& name : kSubjects) {
    const Scalar dyn = stats(r, name, "SA_DYN").at("mean_tree_accuracy");
    const Scalar sota = stats(r, name, "SOTA").at("mean_tree_accuracy");
    wins += dyn >= sota;
    per += fmt(" %s %.3f/%.3f", name.c_str(), dyn, sota);
  }
  return {wins >= kTreeMinSubjects, fmt("SA_DYN trees >= SOTA tree on %zu of 5 subjects (need %zu):%s", wins,
                                        kTreeMinSubjects, per.c_str())};
}

// ------------------------------------------------------- 9: determinism

int cli(std::vector<std::string> args) {
  std::vector<const char*> argv = {"failscope"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[std::filesystem::relative(e.path(), dir).string()] = read_text_file(e.path().string());
  return files;
}

Outcome criterion_determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "failscope_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::map<std::string, std::string>> snaps;
  for (int round = 0; round < 2; ++round) {
    const fs::path dir = root / ("round" + std::to_string(round));
    fs::create_directories(dir);
    const json plan = {{"subjects", {"sum_cap", "xor_regions"}},
                       {"strategies", {"SA_DYN", "RS", "SOTA"}},
                       {"seeds", {7, 8}},
                       {"budget", {{"max_time", 1500}}},
                       {"test_size", 500},
                       {"workers", 2}};
    write_text_file((dir / "plan.json").string(), plan.dump());
    int rc = 0;
    rc |= cli({"generate", "--subject", "sum_cap", "--strategy", "SA_DYN", "--seed", "5", "--budget-time", "1500", "--out",
               (dir / "gen").string()});
    rc |= cli({"generate", "--subject", "band", "--strategy", "SOTA", "--seed", "5", "--budget-time", "1500", "--out",
               (dir / "gen").string()});
    rc |= cli({"learn", (dir / "gen" / "sum_cap_SA_DYN_seed5.csv").string(), "--subject", "sum_cap", "--seed", "5",
               "--out", (dir / "learn").string()});
    rc |= cli({"evaluate", (dir / "learn" / "rules.json").string(), "--subject", "sum_cap", "--seed", "9", "--out",
               (dir / "eval").string()});
    rc |= cli({"compare", "--config", (dir / "plan.json").string(), "--out", (dir / "cmp").string()});
    if (rc != 0) return {false, "a command failed"};
    auto snap = snapshot(dir);
    snaps.push_back(std::move(snap));
  }
  const bool same = snaps[0] == snaps[1];
  fs::remove_all(root);
  return {same, fmt("%zu output files compared across two rounds of generate/learn/evaluate/compare: %s", snaps[0].size(),
                    same ? "byte-identical" : "DIFFERENT")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "gating fidelity", criterion_gating},
      {2, "range-reduction fidelity", criterion_ranges},
      {3, "dynamic-surrogate Pareto membership", criterion_pareto},
      {4, "accuracy ordering", criterion_accuracy},
      {5, "dataset-size gain", criterion_size},
      {6, "rule recovery on sum_cap", criterion_rules},
      {7, "oracle suites", criterion_oracles},
      {8, "tree baseline sanity", criterion_trees},
      {9, "determinism", criterion_determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
