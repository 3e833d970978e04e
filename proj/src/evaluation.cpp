#include "failscope/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace failscope {

// ------------------------------------------------------------------ metrics

MetricReport MetricReport::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  MetricReport m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  const std::size_t total = tp + fp + fn + tn;
  m.accuracy = total ? static_cast<Scalar>(tp + tn) / static_cast<Scalar>(total) : 0.0;
  if (tp + fp) m.precision_fail = static_cast<Scalar>(tp) / static_cast<Scalar>(tp + fp);
  if (tp + fn) m.recall_fail = static_cast<Scalar>(tp) / static_cast<Scalar>(tp + fn);
  return m;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j = {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"tn", tn}, {"accuracy", accuracy}};
  j["precision_fail"] = precision_fail ? nlohmann::json(*precision_fail) : nlohmann::json();
  j["recall_fail"] = recall_fail ? nlohmann::json(*recall_fail) : nlohmann::json();
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  return from_counts(j.at("tp"), j.at("fp"), j.at("fn"), j.at("tn"));
}

std::vector<TestCase> make_test_set(const Subject& s, std::size_t n, Rng& rng) {
  std::vector<TestCase> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TestInput t = sample_uniform(s.space, rng);
    const Verdict v = s.ground_truth ? s.ground_truth(t) : verdict(s.evaluate(t));
    out.push_back({std::move(t), v});
  }
  return out;
}

MetricReport evaluate_model(const Classifier& classify, std::span<const TestCase> tests) {
  if (tests.empty()) raise(ErrorCode::EmptySamples, "evaluation needs at least one test");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& tc : tests) {
    const bool predicted_fail = classify(tc.input) == Verdict::Fail;
    const bool actual_fail = tc.verdict == Verdict::Fail;
    if (predicted_fail && actual_fail) ++tp;
    else if (predicted_fail) ++fp;
    else if (actual_fail) ++fn;
    else ++tn;
  }
  return MetricReport::from_counts(tp, fp, fn, tn);
}

MetricReport evaluate_model(const RuleSet& rs, std::span<const TestCase> tests) {
  return evaluate_model([&](const TestInput& t) { return apply_ruleset(rs, t); }, tests);
}

MetricReport evaluate_model(const ClassTreeModel& tree, std::span<const TestCase> tests) {
  return evaluate_model([&](const TestInput& t) { return tree.classify(t); }, tests);
}

std::size_t mislabel_count(const LabeledDataset& ds, const Subject& s) {
  std::size_t n = 0;
  for (const auto& r : ds.rows())
    if (r.source == RowSource::Predicted) n += verdict(r.fitness) != verdict(s.evaluate(r.input));
  return n;
}

std::size_t mislabel_count(const GenerationResult& result, const Subject& s) { return mislabel_count(result.dataset, s); }

// ------------------------------------------------------------------- pareto

bool dominates(const ParetoPoint& p, const ParetoPoint& q) {
  return p.errors <= q.errors && p.dataset_size >= q.dataset_size &&
         (p.errors < q.errors || p.dataset_size > q.dataset_size);
}

std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points) {
  // Sorting by (errors asc, size desc) lets one sweep find the front.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].errors != points[b].errors) return points[a].errors < points[b].errors;
    return points[a].dataset_size > points[b].dataset_size;
  });
  std::vector<bool> on_front(points.size(), false);
  Scalar best_size = -std::numeric_limits<Scalar>::infinity();
  Scalar best_size_errors = 0.0;
  for (auto i : order) {
    const auto& p = points[i];
    const bool dominated =
        p.dataset_size < best_size || (p.dataset_size == best_size && p.errors > best_size_errors);
    if (!dominated) on_front[i] = true;
    if (p.dataset_size > best_size) {
      best_size = p.dataset_size;
      best_size_errors = p.errors;
    }
  }
  std::vector<ParetoPoint> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (on_front[i]) out.push_back(points[i]);
  return out;
}

// -------------------------------------------------------------- statistics

Scalar median(std::vector<Scalar> v) {
  if (v.empty()) return std::numeric_limits<Scalar>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

Scalar mean(std::span<const Scalar> v) {
  if (v.empty()) return std::numeric_limits<Scalar>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<Scalar>(v.size());
}

Scalar wilcoxon_rank_sum(std::span<const Scalar> a, std::span<const Scalar> b) {
  if (a.size() < 3 || b.size() < 3) raise(ErrorCode::TooFewSamples, "rank-sum test needs at least three values per sample");
  const std::size_t n1 = a.size(), n2 = b.size(), N = n1 + n2;
  std::vector<std::pair<Scalar, bool>> all;
  for (auto x : a) all.emplace_back(x, true);
  for (auto x : b) all.emplace_back(x, false);
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

  // Doubled mid-ranks are integers, which keeps the exact distribution exact.
  std::vector<long> rank2(N);
  Scalar tie_term = 0.0;
  for (std::size_t i = 0; i < N;) {
    std::size_t j = i;
    while (j + 1 < N && all[j + 1].first == all[i].first) ++j;
    const long r2 = static_cast<long>(i + j + 2);  // 2 * mean of ranks i+1 .. j+1
    for (std::size_t k = i; k <= j; ++k) rank2[k] = r2;
    const Scalar t = static_cast<Scalar>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long w2 = 0;
  for (std::size_t k = 0; k < N; ++k)
    if (all[k].second) w2 += rank2[k];
  const long e2 = static_cast<long>(n1 * (N + 1));  // twice the expected rank sum
  const long dev = std::labs(w2 - e2);

  if (N <= 20) {
    const long max_sum = std::accumulate(rank2.begin(), rank2.end(), 0L);
    // ways[k][s]: number of k-subsets of the pooled ranks with doubled sum s.
    std::vector<std::vector<Scalar>> ways(n1 + 1, std::vector<Scalar>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t item = 0; item < N; ++item) {
      const auto r = static_cast<std::size_t>(rank2[item]);
      for (std::size_t k = std::min(item + 1, n1); k >= 1; --k)
        for (std::size_t s = static_cast<std::size_t>(max_sum); s >= r; --s) ways[k][s] += ways[k - 1][s - r];
    }
    Scalar extreme = 0.0, total = 0.0;
    for (std::size_t s = 0; s <= static_cast<std::size_t>(max_sum); ++s) {
      total += ways[n1][s];
      if (std::labs(static_cast<long>(s) - e2) >= dev) extreme += ways[n1][s];
    }
    return std::min(1.0, extreme / total);
  }

  const Scalar u = static_cast<Scalar>(w2) / 2.0 - static_cast<Scalar>(n1 * (n1 + 1)) / 2.0;
  const Scalar mu = static_cast<Scalar>(n1 * n2) / 2.0;
  const Scalar var = static_cast<Scalar>(n1 * n2) / 12.0 *
                     (static_cast<Scalar>(N + 1) - tie_term / (static_cast<Scalar>(N) * static_cast<Scalar>(N - 1)));
  if (var <= 0.0) return 1.0;
  const Scalar z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

std::string_view to_string(Magnitude m) {
  switch (m) {
    case Magnitude::Negligible: return "negligible";
    case Magnitude::Small: return "small";
    case Magnitude::Medium: return "medium";
    case Magnitude::Large: return "large";
  }
  return "?";
}

Scalar a12(std::span<const Scalar> a, std::span<const Scalar> b) {
  if (a.empty() || b.empty()) raise(ErrorCode::EmptySamples, "A12 needs non-empty samples");
  Scalar wins = 0.0;
  for (auto x : a)
    for (auto y : b) wins += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return wins / (static_cast<Scalar>(a.size()) * static_cast<Scalar>(b.size()));
}

Magnitude a12_magnitude(Scalar v) {
  const Scalar d = std::abs(v - 0.5);
  if (d < 0.06) return Magnitude::Negligible;
  if (d < 0.14) return Magnitude::Small;
  if (d < 0.21) return Magnitude::Medium;
  return Magnitude::Large;
}

ComparisonResult compare_samples(std::span<const Scalar> a, std::span<const Scalar> b) {
  ComparisonResult r;
  r.p_value = wilcoxon_rank_sum(a, b);
  r.a12 = a12(a, b);
  r.magnitude = a12_magnitude(r.a12);
  return r;
}

// -------------------------------------------------------- feature selection

std::string_view to_string(FeaturePolicy p) {
  switch (p) {
    case FeaturePolicy::Individual: return "individual";
    case FeaturePolicy::SumSubsets: return "sum_subsets";
    case FeaturePolicy::AutoSelect: return "auto_select";
  }
  return "?";
}

FeaturePolicy feature_policy_from_string(std::string_view s) {
  if (s == "individual") return FeaturePolicy::Individual;
  if (s == "sum_subsets") return FeaturePolicy::SumSubsets;
  if (s == "auto_select") return FeaturePolicy::AutoSelect;
  raise(ErrorCode::InvalidConfig, "unknown feature policy '" + std::string(s) + "'");
}

nlohmann::json FeatureSelection::table() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::string name;
    for (const auto& f : candidates[i]) name += (name.empty() ? "" : ",") + f.name;
    const bool kept = std::find(retained.begin(), retained.end(), i) != retained.end();
    rows.push_back({{"features", name},
                    {"mean_accuracy", std::isnan(mean_accuracy[i]) ? nlohmann::json() : nlohmann::json(mean_accuracy[i])},
                    {"retained", kept}});
  }
  std::vector<std::string> chosen_names;
  for (const auto& f : chosen) chosen_names.push_back(f.name);
  return {{"candidates", rows}, {"chosen", chosen_names}};
}

FeatureSelection auto_select_features(const BinarizedDataset& data, std::span<const TestCase> tests,
                                      const FeatureSelectionOptions& opts, Rng& rng) {
  FeatureSelection sel;
  sel.candidates = enumerate_sum_features(data.space);
  sel.mean_accuracy.assign(sel.candidates.size(), std::numeric_limits<Scalar>::quiet_NaN());

  std::vector<BinarizedDataset> splits;
  for (std::size_t r = 0; r < opts.repetitions; ++r) {
    Rng split_rng = rng.split(r);
    const auto perm = split_rng.permutation(data.size());
    BinarizedDataset part{data.space, {}, {}, {}};
    const std::size_t keep = std::max<std::size_t>(2, (2 * data.size()) / 3);
    for (std::size_t k = 0; k < std::min(keep, perm.size()); ++k) {
      part.inputs.push_back(data.inputs[perm[k]]);
      part.labels.push_back(data.labels[perm[k]]);
      part.fitness.push_back(data.fitness[perm[k]]);
    }
    splits.push_back(std::move(part));
  }

  for (std::size_t c = 0; c < sel.candidates.size(); ++c) {
    std::vector<Scalar> accs;
    for (std::size_t r = 0; r < splits.size(); ++r) {
      try {
        Rng learn_rng = rng.split("learn").split(c * 131 + r);
        const auto rs = learn_ruleset(splits[r], sel.candidates[c], opts.params, learn_rng);
        accs.push_back(evaluate_model(rs, tests).accuracy);
      } catch (const Error&) {
        // A single-class split cannot be learned from; the candidate is scored on the others.
      }
    }
    if (!accs.empty()) sel.mean_accuracy[c] = mean(accs);
    if (!accs.empty() && sel.mean_accuracy[c] >= opts.threshold) sel.retained.push_back(c);
  }

  sel.chosen = sel.candidates.front();
  std::vector<std::size_t> sums;
  for (auto c : sel.retained)
    if (c != 0) sums.push_back(c);
  std::stable_sort(sums.begin(), sums.end(),
                   [&](std::size_t x, std::size_t y) { return sel.mean_accuracy[x] > sel.mean_accuracy[y]; });
  for (std::size_t k = 0; k < std::min(opts.top_sums, sums.size()); ++k)
    sel.chosen.push_back(sel.candidates[sums[k]].front());
  return sel;
}

FeatureSet features_for(FeaturePolicy policy, const Subject& s, const FeatureSelection* selection) {
  if (!s.sum_features || policy == FeaturePolicy::Individual) return individual_features(s.space);
  if (policy == FeaturePolicy::SumSubsets) {
    FeatureSet out;
    for (const auto& set : enumerate_sum_features(s.space))
      for (const auto& f : set) out.push_back(f);
    return out;
  }
  if (!selection) raise(ErrorCode::InvalidConfig, "auto_select needs a feature selection result");
  return selection->chosen;
}

// --------------------------------------------------------------- experiments

namespace {

nlohmann::json generator_to_json(const GeneratorConfig& g) {
  std::vector<std::string> dyn;
  for (auto t : g.dyn_types) dyn.emplace_back(to_string(t));
  return {{"initial_dataset_size", g.sampler.initial_dataset_size},
          {"smote_k", g.sampler.smote_k},
          {"adaptive_candidates", g.sampler.adaptive_candidates},
          {"adaptive_preprocessing", g.sampler.adaptive},
          {"preprocess_share", g.preprocess_share},
          {"margin_pct", g.margin_pct},
          {"lr_candidates", g.lr_candidates},
          {"retrain_tune_once", g.retrain_tune_once},
          {"tune_trials", g.tune_trials},
          {"sota_inputs_per_path", g.sota_inputs_per_path},
          {"dyn_types", dyn},
          {"class_tree", g.class_tree_hyperparams},
          {"logistic", g.logistic_hyperparams},
          {"costs",
           {{"train_seconds", g.costs.train_seconds},
            {"tune_seconds", g.costs.tune_seconds},
            {"predict_seconds", g.costs.predict_seconds},
            {"score_seconds", g.costs.score_seconds},
            {"concurrent_training", g.costs.concurrent_training},
            {"measured", g.costs.measured}}},
          {"max_iterations", g.max_iterations}};
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

// Every strategy of a (seed, subject) pair draws from the same streams, so
// runs are paired and differ only through the strategies themselves.
Rng run_rng(std::uint64_t seed, const std::string& subject) { return Rng(seed).split(subject).split("generate"); }

BinarizedDataset subsample(const BinarizedDataset& d, std::size_t cap, Rng& rng) {
  if (d.size() <= cap) return d;
  auto perm = rng.permutation(d.size());
  perm.resize(cap);
  std::sort(perm.begin(), perm.end());
  BinarizedDataset out{d.space, {}, {}, {}};
  for (auto i : perm) {
    out.inputs.push_back(d.inputs[i]);
    out.labels.push_back(d.labels[i]);
    out.fitness.push_back(d.fitness[i]);
  }
  return out;
}

std::string fmt(Scalar v, const char* spec = "%.3f") {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

GeneratorConfig generator_from_json(const nlohmann::json& j) {
  GeneratorConfig g;
  try {
    g.preprocess_share = j.contains("initial_dataset_size") ? 0.0 : 0.5;
    g.sampler.initial_dataset_size = j.value("initial_dataset_size", g.sampler.initial_dataset_size);
    g.sampler.smote_k = j.value("smote_k", g.sampler.smote_k);
    g.sampler.adaptive_candidates = j.value("adaptive_candidates", g.sampler.adaptive_candidates);
    g.sampler.adaptive = j.value("adaptive_preprocessing", g.sampler.adaptive);
    g.preprocess_share = j.value("preprocess_share", g.preprocess_share);
    g.margin_pct = j.value("margin_pct", g.margin_pct);
    g.lr_candidates = j.value("lr_candidates", g.lr_candidates);
    g.retrain_tune_once = j.value("retrain_tune_once", g.retrain_tune_once);
    g.tune_trials = j.value("tune_trials", g.tune_trials);
    g.sota_inputs_per_path = j.value("sota_inputs_per_path", g.sota_inputs_per_path);
    g.max_iterations = j.value("max_iterations", g.max_iterations);
    if (j.contains("dyn_types")) {
      g.dyn_types.clear();
      for (const auto& t : j.at("dyn_types")) g.dyn_types.push_back(model_type_from_string(t.get<std::string>()));
    }
    if (j.contains("class_tree"))
      for (const auto& [k, v] : j.at("class_tree").items()) g.class_tree_hyperparams[k] = v.get<Scalar>();
    if (j.contains("logistic"))
      for (const auto& [k, v] : j.at("logistic").items()) g.logistic_hyperparams[k] = v.get<Scalar>();
    if (j.contains("costs")) {
      const auto& c = j.at("costs");
      g.costs.train_seconds = c.value("train_seconds", g.costs.train_seconds);
      g.costs.tune_seconds = c.value("tune_seconds", g.costs.tune_seconds);
      g.costs.predict_seconds = c.value("predict_seconds", g.costs.predict_seconds);
      g.costs.score_seconds = c.value("score_seconds", g.costs.score_seconds);
      g.costs.concurrent_training = c.value("concurrent_training", g.costs.concurrent_training);
      g.costs.measured = c.value("measured", g.costs.measured);
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::InvalidConfig, std::string("bad generator settings: ") + e.what());
  }
  return g;
}

void ExperimentPlan::validate() const {
  if (subjects.empty()) raise(ErrorCode::InvalidConfig, "experiment plan lists no subjects");
  if (strategies.empty()) raise(ErrorCode::InvalidConfig, "experiment plan lists no strategies");
  if (seeds.empty()) raise(ErrorCode::InvalidConfig, "experiment plan lists no seeds");
  if (test_size == 0) raise(ErrorCode::InvalidConfig, "test_size must be positive");
  if (!(max_time > 0.0)) raise(ErrorCode::InvalidConfig, "max_time must be positive");
  if (exec_cost && !(*exec_cost > 0.0)) raise(ErrorCode::InvalidConfig, "exec_cost must be positive");
  for (const auto& g : strategies) g.validate();
}

nlohmann::json ExperimentPlan::to_json() const {
  std::vector<std::string> labels;
  for (const auto& g : strategies) labels.push_back(strategy_label(g));
  nlohmann::json budget = {{"max_executions", max_executions}, {"max_time", max_time}};
  if (exec_cost) budget["exec_cost"] = *exec_cost;
  return {{"subjects", subjects},
          {"subject_params", subject_overrides},
          {"strategies", labels},
          {"seeds", seeds},
          {"budget", budget},
          {"generator", strategies.empty() ? nlohmann::json::object() : generator_to_json(strategies.front())},
          {"feature_policy", to_string(feature_policy)},
          {"test_size", test_size},
          {"selection_test_size", selection_test_size},
          {"union_cap", union_cap},
          {"learn_rules", learn_rules},
          {"tree_metrics", tree_metrics}};
}

ExperimentPlan ExperimentPlan::from_json(const nlohmann::json& j) {
  ExperimentPlan p;
  try {
    if (!j.is_object()) raise(ErrorCode::InvalidConfig, "experiment plan must be a JSON object");
    p.subjects = j.value("subjects", std::vector<std::string>{});
    p.subject_overrides = j.value("subject_params", nlohmann::json::object());
    const GeneratorConfig base = generator_from_json(j.value("generator", nlohmann::json::object()));
    for (const auto& label : j.value("strategies", std::vector<std::string>{})) p.strategies.push_back(parse_strategy(label, base));
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_array()) {
        p.seeds = s.get<std::vector<std::uint64_t>>();
      } else {
        const auto first = s.at("first").get<std::uint64_t>();
        const auto count = s.at("count").get<std::uint64_t>();
        for (std::uint64_t k = 0; k < count; ++k) p.seeds.push_back(first + k);
      }
    }
    if (j.contains("budget")) {
      const auto& b = j.at("budget");
      p.max_executions = b.value("max_executions", p.max_executions);
      p.max_time = b.value("max_time", p.max_time);
      if (b.contains("exec_cost")) p.exec_cost = b.at("exec_cost").get<Scalar>();
    }
    p.feature_policy = feature_policy_from_string(j.value("feature_policy", std::string("auto_select")));
    p.test_size = j.value("test_size", p.test_size);
    p.selection_test_size = j.value("selection_test_size", p.selection_test_size);
    p.union_cap = j.value("union_cap", p.union_cap);
    p.workers = j.value("workers", p.workers);
    p.learn_rules = j.value("learn_rules", p.learn_rules);
    p.tree_metrics = j.value("tree_metrics", p.tree_metrics);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::InvalidConfig, std::string("bad experiment plan: ") + e.what());
  }
  return p;
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j = {{"subject", subject},
                      {"strategy", strategy},
                      {"seed", seed},
                      {"ok", ok},
                      {"dataset_size", dataset_size},
                      {"executed", executed},
                      {"predicted", predicted},
                      {"mislabels", mislabels},
                      {"consumed_time", consumed_time},
                      {"rule_count", rule_count},
                      {"fail_rules", fail_rules},
                      {"fail_rules_json", fail_rules_json}};
  if (!error.empty()) j["error"] = error;
  j["rules_metrics"] = rules ? rules->to_json() : nlohmann::json();
  j["tree_metrics"] = tree ? tree->to_json() : nlohmann::json();
  return j;
}

std::size_t ExperimentReport::failed_runs() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.ok; }));
}

namespace {

nlohmann::json points_json(const std::vector<ParetoPoint>& pts) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : pts) out.push_back({{"algorithm", p.algorithm}, {"errors", p.errors}, {"dataset_size", p.dataset_size}});
  return out;
}

std::vector<ParetoPoint> points_from_json(const nlohmann::json& j) {
  std::vector<ParetoPoint> out;
  for (const auto& p : j) out.push_back({p.at("algorithm"), p.at("errors"), p.at("dataset_size")});
  return out;
}

}  // namespace

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["plan"] = plan;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : runs) j["runs"].push_back(r.to_json());
  j["subjects"] = nlohmann::json::array();
  for (const auto& s : subjects) {
    nlohmann::json sj = {{"subject", s.subject},
                         {"points", points_json(s.points)},
                         {"pareto_front", points_json(s.front)},
                         {"strategies", s.strategy_stats},
                         {"rule_learner", s.rule_params.to_json()}};
    if (s.selection) sj["feature_selection"] = s.selection->table();
    j["subjects"].push_back(sj);
  }
  j["suite_accuracy"] = suite_accuracy;
  j["comparisons"] = nlohmann::json::array();
  for (const auto& c : comparisons)
    j["comparisons"].push_back(
        {{"a", c.a}, {"b", c.b}, {"p_value", c.p_value}, {"a12", c.a12}, {"magnitude", to_string(c.magnitude)}});
  j["failed_runs"] = failed_runs();
  return j;
}

std::string ExperimentReport::to_markdown() const {
  std::ostringstream os;
  os << "# Experiment report\n\n";
  os << runs.size() << " runs, " << failed_runs() << " failed.\n";
  for (const auto& s : subjects) {
    os << "\n## " << s.subject << "\n\n";
    os << "| strategy | median size | median executed | median mislabels | accuracy | precision | recall | tree accuracy | Pareto |\n";
    os << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& p : s.points) {
      const auto& st = s.strategy_stats.at(p.algorithm);
      auto num = [&](const char* key) { return st.at(key).is_null() ? std::string("n/a") : fmt(st.at(key).get<Scalar>()); };
      const bool front = std::any_of(s.front.begin(), s.front.end(), [&](const ParetoPoint& q) { return q.algorithm == p.algorithm; });
      os << "| " << p.algorithm << " | " << fmt(p.dataset_size, "%.1f") << " | " << num("median_executed") << " | "
         << fmt(p.errors, "%.1f") << " | " << num("mean_accuracy") << " | " << num("mean_precision") << " | "
         << num("mean_recall") << " | " << num("mean_tree_accuracy") << " | " << (front ? "yes" : "") << " |\n";
    }
    if (s.selection) {
      os << "\nFeature selection: " << s.selection->retained.size() << " of " << s.selection->candidates.size()
         << " candidate sets retained; chosen:";
      for (const auto& f : s.selection->chosen) os << " " << f.name;
      os << "\n";
    }
  }
  if (!comparisons.empty()) {
    os << "\n## Suite comparisons (per-seed mean accuracy)\n\n| A | B | p-value | A12 | magnitude |\n|---|---|---|---|---|\n";
    for (const auto& c : comparisons)
      os << "| " << c.a << " | " << c.b << " | " << fmt(c.p_value, "%.4g") << " | " << fmt(c.a12) << " | "
         << to_string(c.magnitude) << " |\n";
  }
  return os.str();
}

nlohmann::json pareto_from_report(const nlohmann::json& report) {
  nlohmann::json out = nlohmann::json::array();
  try {
    for (const auto& s : report.at("subjects")) {
      const auto pts = points_from_json(s.at("points"));
      out.push_back({{"subject", s.at("subject")}, {"pareto_front", points_json(pareto_front(pts))}});
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentPlan& plan, const SubjectCatalog& catalog) {
  plan.validate();
  for (const auto& name : plan.subjects)
    if (!catalog.count(name)) raise(ErrorCode::InvalidConfig, "unknown subject '" + name + "'");

  struct Task {
    std::size_t subject;
    std::size_t strategy;
    std::size_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < plan.subjects.size(); ++s)
    for (std::size_t g = 0; g < plan.strategies.size(); ++g)
      for (std::size_t k = 0; k < plan.seeds.size(); ++k) tasks.push_back({s, g, k});

  ExperimentReport report;
  report.plan = plan.to_json();
  report.runs.resize(tasks.size());
  std::vector<std::optional<GenerationResult>> results(tasks.size());

  // Phase 1: generation.
  parallel_for(tasks.size(), plan.workers, [&](std::size_t i) {
    const auto& task = tasks[i];
    const Subject& subject = catalog.at(plan.subjects[task.subject]);
    const auto& cfg = plan.strategies[task.strategy];
    RunRecord& rec = report.runs[i];
    rec.subject = subject.name;
    rec.strategy = strategy_label(cfg);
    rec.seed = plan.seeds[task.seed];
    try {
      ExecutionBudget budget(plan.max_executions, plan.max_time, plan.exec_cost.value_or(subject.exec_cost));
      Rng rng = run_rng(rec.seed, rec.subject);
      auto res = generate(subject, cfg, budget, rng);
      rec.dataset_size = res.dataset.size();
      rec.executed = res.dataset.count(RowSource::Executed);
      rec.predicted = res.dataset.count(RowSource::Predicted);
      rec.mislabels = mislabel_count(res, subject);
      rec.consumed_time = res.consumed_time;
      rec.ok = true;
      results[i] = std::move(res);
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  });

  // Phase 2: per-subject feature selection and rule-learner tuning on the union of datasets.
  report.subjects.resize(plan.subjects.size());
  std::vector<FeatureSet> features(plan.subjects.size());
  parallel_for(plan.subjects.size(), plan.workers, [&](std::size_t s) {
    const Subject& subject = catalog.at(plan.subjects[s]);
    SubjectSummary& sum = report.subjects[s];
    sum.subject = subject.name;
    features[s] = individual_features(subject.space);
    if (!plan.learn_rules) return;
    BinarizedDataset uni{subject.space, {}, {}, {}};
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].subject != s || !results[i]) continue;
      const auto b = binarize(results[i]->dataset);
      uni.inputs.insert(uni.inputs.end(), b.inputs.begin(), b.inputs.end());
      uni.labels.insert(uni.labels.end(), b.labels.begin(), b.labels.end());
      uni.fitness.insert(uni.fitness.end(), b.fitness.begin(), b.fitness.end());
    }
    Rng srng = Rng(plan.seeds.front()).split(subject.name).split("union");
    uni = subsample(uni, plan.union_cap, srng);
    const auto fails = std::count(uni.labels.begin(), uni.labels.end(), Verdict::Fail);
    if (fails == 0 || static_cast<std::size_t>(fails) == uni.size()) return;

    if (plan.feature_policy == FeaturePolicy::AutoSelect && subject.sum_features) {
      Rng trng = Rng(plan.seeds.front()).split(subject.name).split("selection_tests");
      const auto sel_tests = make_test_set(subject, plan.selection_test_size, trng);
      Rng sel_rng = Rng(plan.seeds.front()).split(subject.name).split("selection");
      sum.selection = auto_select_features(uni, sel_tests, {}, sel_rng);
    }
    features[s] = features_for(plan.feature_policy, subject, sum.selection ? &*sum.selection : nullptr);
    Rng tune_rng = Rng(plan.seeds.front()).split(subject.name).split("rule_tuning");
    sum.rule_params = tune_rule_learner(uni, features[s], 3, tune_rng).best;
  });

  // Phase 3: failure models and their metrics.
  parallel_for(tasks.size(), plan.workers, [&](std::size_t i) {
    RunRecord& rec = report.runs[i];
    if (!results[i]) return;
    const auto& task = tasks[i];
    const Subject& subject = catalog.at(plan.subjects[task.subject]);
    try {
      Rng test_rng = Rng(rec.seed).split(subject.name).split("tests");
      const auto tests = make_test_set(subject, plan.test_size, test_rng);
      const auto data = binarize(results[i]->dataset);
      if (plan.learn_rules) {
        const auto fails = static_cast<std::size_t>(std::count(data.labels.begin(), data.labels.end(), Verdict::Fail));
        RuleSet rs;
        if (fails == 0 || fails == data.size()) {
          // A single-class dataset yields the constant model.
          rs.default_prediction = fails ? Verdict::Fail : Verdict::Pass;
        } else {
          Rng learn_rng = Rng(rec.seed).split(rec.subject).split("rules");
          rs = learn_ruleset(data, features[task.subject], report.subjects[task.subject].rule_params, learn_rng);
        }
        rec.rules = evaluate_model(rs, tests);
        rec.rule_count = rs.rules.size();
        for (const auto& r : minimize_rules(extract_fail_rules(rs), subject.space)) {
          rec.fail_rules.push_back(render(r, subject.references));
          rec.fail_rules_json.push_back(to_json(r));
        }
      }
      if (plan.tree_metrics) {
        const auto& res = *results[i];
        const ClassTreeModel tree = res.final_tree ? *res.final_tree
                                                   : fit_class_tree(res.dataset, plan.strategies[task.strategy].class_tree_hyperparams);
        rec.tree = evaluate_model(tree, tests);
      }
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  // Aggregation.
  for (std::size_t s = 0; s < plan.subjects.size(); ++s) {
    SubjectSummary& sum = report.subjects[s];
    for (std::size_t g = 0; g < plan.strategies.size(); ++g) {
      const std::string label = strategy_label(plan.strategies[g]);
      std::vector<Scalar> sizes, executed, mislabels, acc, prec, rec, tree_acc;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].subject != s || tasks[i].strategy != g || !report.runs[i].ok) continue;
        const auto& r = report.runs[i];
        sizes.push_back(static_cast<Scalar>(r.dataset_size));
        executed.push_back(static_cast<Scalar>(r.executed));
        mislabels.push_back(static_cast<Scalar>(r.mislabels));
        if (r.rules) {
          acc.push_back(r.rules->accuracy);
          if (r.rules->precision_fail) prec.push_back(*r.rules->precision_fail);
          if (r.rules->recall_fail) rec.push_back(*r.rules->recall_fail);
        }
        if (r.tree) tree_acc.push_back(r.tree->accuracy);
      }
      auto opt = [](Scalar v) { return std::isnan(v) ? nlohmann::json() : nlohmann::json(v); };
      sum.strategy_stats[label] = {{"runs", sizes.size()},
                                   {"median_size", opt(median(sizes))},
                                   {"median_executed", opt(median(executed))},
                                   {"median_mislabels", opt(median(mislabels))},
                                   {"mean_accuracy", opt(mean(acc))},
                                   {"mean_precision", opt(mean(prec))},
                                   {"mean_recall", opt(mean(rec))},
                                   {"mean_tree_accuracy", opt(mean(tree_acc))}};
      if (!sizes.empty()) sum.points.push_back({label, median(mislabels), median(sizes)});
    }
    sum.front = pareto_front(sum.points);
  }

  for (std::size_t g = 0; g < plan.strategies.size(); ++g) {
    const std::string label = strategy_label(plan.strategies[g]);
    std::vector<Scalar> per_seed;
    for (std::size_t k = 0; k < plan.seeds.size(); ++k) {
      std::vector<Scalar> accs;
      for (std::size_t i = 0; i < tasks.size(); ++i)
        if (tasks[i].strategy == g && tasks[i].seed == k && report.runs[i].ok && report.runs[i].rules)
          accs.push_back(report.runs[i].rules->accuracy);
      if (accs.size() == plan.subjects.size()) per_seed.push_back(mean(accs));
    }
    report.suite_accuracy[label] = per_seed;
  }
  for (std::size_t x = 0; x < plan.strategies.size(); ++x)
    for (std::size_t y = x + 1; y < plan.strategies.size(); ++y) {
      const auto la = strategy_label(plan.strategies[x]);
      const auto lb = strategy_label(plan.strategies[y]);
      const auto& a = report.suite_accuracy[la];
      const auto& b = report.suite_accuracy[lb];
      if (a.size() < 3 || b.size() < 3) continue;
      auto c = compare_samples(a, b);
      c.a = la;
      c.b = lb;
      report.comparisons.push_back(c);
    }
  return report;
}

}  // namespace failscope
