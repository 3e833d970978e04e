#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "failscope/core.hpp"
#include "failscope/generators.hpp"
#include "failscope/rules.hpp"
#include "failscope/subjects.hpp"

namespace failscope {

// ------------------------------------------------------------------ metrics

/// Confusion counts with Fail as the positive class. Ratios with a zero
/// denominator are absent.
struct MetricReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  Scalar accuracy = 0.0;
  std::optional<Scalar> precision_fail;
  std::optional<Scalar> recall_fail;

  static MetricReport from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

struct TestCase {
  TestInput input;
  Verdict verdict = Verdict::Pass;
};

/// Fresh uniform inputs labelled by the subject's ground truth (or by its
/// fitness when no ground truth is declared). Never charged to a budget.
std::vector<TestCase> make_test_set(const Subject& s, std::size_t n, Rng& rng);

using Classifier = std::function<Verdict(const TestInput&)>;
MetricReport evaluate_model(const Classifier& classify, std::span<const TestCase> tests);
MetricReport evaluate_model(const RuleSet& rs, std::span<const TestCase> tests);
MetricReport evaluate_model(const ClassTreeModel& tree, std::span<const TestCase> tests);

/// Predicted rows whose verdict differs from the subject's actual verdict.
std::size_t mislabel_count(const GenerationResult& result, const Subject& s);
std::size_t mislabel_count(const LabeledDataset& ds, const Subject& s);

// ------------------------------------------------------------------- pareto

struct ParetoPoint {
  std::string algorithm;
  Scalar errors = 0.0;
  Scalar dataset_size = 0.0;
};

/// p dominates q: no more errors, no smaller dataset, and strictly better in one.
bool dominates(const ParetoPoint& p, const ParetoPoint& q);
/// Non-dominated points in input order.
std::vector<ParetoPoint> pareto_front(std::span<const ParetoPoint> points);

// -------------------------------------------------------------- statistics

/// Two-sided rank-sum p-value with mid-ranks for ties. Exact enumeration when
/// |a| + |b| <= 20, otherwise the normal approximation with tie correction and
/// continuity correction. Throws TooFewSamples below three values per sample.
Scalar wilcoxon_rank_sum(std::span<const Scalar> a, std::span<const Scalar> b);

enum class Magnitude { Negligible, Small, Medium, Large };
std::string_view to_string(Magnitude m);

/// Vargha-Delaney A12: P(x > y) + 0.5 P(x = y). Throws EmptySamples.
Scalar a12(std::span<const Scalar> a, std::span<const Scalar> b);
Magnitude a12_magnitude(Scalar a12_value);

struct ComparisonResult {
  std::string a;
  std::string b;
  Scalar p_value = 1.0;
  Scalar a12 = 0.5;
  Magnitude magnitude = Magnitude::Negligible;
};
ComparisonResult compare_samples(std::span<const Scalar> a, std::span<const Scalar> b);

Scalar median(std::vector<Scalar> values);
Scalar mean(std::span<const Scalar> values);

// -------------------------------------------------------- feature selection

enum class FeaturePolicy { Individual, SumSubsets, AutoSelect };
std::string_view to_string(FeaturePolicy p);
FeaturePolicy feature_policy_from_string(std::string_view s);

struct FeatureSelection {
  std::vector<FeatureSet> candidates;
  std::vector<Scalar> mean_accuracy;  // per candidate; NaN where learning failed
  std::vector<std::size_t> retained;  // candidates reaching the threshold
  FeatureSet chosen;

  nlohmann::json table() const;
};

struct FeatureSelectionOptions {
  Scalar threshold = 0.8;
  std::size_t repetitions = 3;
  std::size_t top_sums = 2;  // retained sum sets merged into the final feature set
  RuleLearnerParams params;
};

/// Learns one rule set per candidate set (individual variables and every
/// subset sum) on repeated 2/3 splits of `data`, scores it on `tests`, keeps
/// candidates whose mean accuracy reaches the threshold, and returns the
/// individual variables plus the best retained sums.
FeatureSelection auto_select_features(const BinarizedDataset& data, std::span<const TestCase> tests,
                                      const FeatureSelectionOptions& opts, Rng& rng);

/// Features for a policy. AutoSelect needs a selection result; subjects
/// without meaningful sums fall back to individual variables.
FeatureSet features_for(FeaturePolicy policy, const Subject& s, const FeatureSelection* selection = nullptr);

// --------------------------------------------------------------- experiments

struct ExperimentPlan {
  std::vector<std::string> subjects;
  nlohmann::json subject_overrides = nlohmann::json::object();
  std::vector<GeneratorConfig> strategies;
  std::vector<std::uint64_t> seeds;
  std::size_t max_executions = 1000000;
  Scalar max_time = 4500.0;
  std::optional<Scalar> exec_cost;  // default: the subject's
  FeaturePolicy feature_policy = FeaturePolicy::AutoSelect;
  std::size_t test_size = 2000;
  std::size_t selection_test_size = 1000;
  std::size_t union_cap = 3000;  // rows of the union dataset used for rule-learner tuning
  std::size_t workers = 1;
  bool learn_rules = true;
  bool tree_metrics = true;

  void validate() const;
  nlohmann::json to_json() const;
  /// Strategy labels, budget fields and generator settings; see README.
  static ExperimentPlan from_json(const nlohmann::json& j);
};

struct RunRecord {
  std::string subject;
  std::string strategy;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t dataset_size = 0;
  std::size_t executed = 0;
  std::size_t predicted = 0;
  std::size_t mislabels = 0;
  Scalar consumed_time = 0.0;
  std::optional<MetricReport> rules;
  std::optional<MetricReport> tree;  // decision tree on the generated dataset
  std::size_t rule_count = 0;
  std::vector<std::string> fail_rules;  // minimised 100%-confidence fail rules, rendered
  nlohmann::json fail_rules_json = nlohmann::json::array();

  nlohmann::json to_json() const;
};

struct SubjectSummary {
  std::string subject;
  std::vector<ParetoPoint> points;  // per strategy: median mislabels, median dataset size
  std::vector<ParetoPoint> front;
  std::map<std::string, nlohmann::json> strategy_stats;
  std::optional<FeatureSelection> selection;
  RuleLearnerParams rule_params;
};

struct ExperimentReport {
  nlohmann::json plan;
  std::vector<RunRecord> runs;
  std::vector<SubjectSummary> subjects;
  std::map<std::string, std::vector<Scalar>> suite_accuracy;  // strategy -> per-seed suite mean
  std::vector<ComparisonResult> comparisons;

  std::size_t failed_runs() const;
  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

/// Generator settings from a JSON object (keys as in the experiment plan's
/// "generator" block). Without "initial_dataset_size" the preprocessing share defaults to 0.5.
GeneratorConfig generator_from_json(const nlohmann::json& j);

ExperimentReport run_experiment(const ExperimentPlan& plan, const SubjectCatalog& catalog);

/// Recomputes the per-subject Pareto fronts of a serialized report.
nlohmann::json pareto_from_report(const nlohmann::json& report);

}  // namespace failscope
