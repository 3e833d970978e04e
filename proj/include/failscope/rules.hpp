#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "failscope/core.hpp"
#include "failscope/rng.hpp"
#include "failscope/subjects.hpp"

namespace failscope {

/// Sparse linear form over input variables: variable index -> weight.
using LinearForm = std::map<std::size_t, Scalar>;

struct Feature {
  enum class Kind { Var, Sum };

  Kind kind = Kind::Var;
  std::vector<std::size_t> indices;  // sorted
  std::vector<Scalar> weights;       // empty: unit weights
  std::string name;

  static Feature var(const InputSpace& space, std::size_t index);
  static Feature sum(const InputSpace& space, std::vector<std::size_t> indices, std::vector<Scalar> weights = {});

  Scalar value(const TestInput& t) const;
  LinearForm form() const;
  bool operator==(const Feature& other) const { return kind == other.kind && indices == other.indices && weights == other.weights; }
};

using FeatureSet = std::vector<Feature>;

enum class Op { Le, Gt, Ge, Lt };
std::string_view to_string(Op op);
Op op_from_string(std::string_view s);

struct Predicate {
  Feature feature;
  Op op = Op::Le;
  Scalar constant = 0.0;

  bool holds(const TestInput& t) const;
  bool operator==(const Predicate& o) const { return feature == o.feature && op == o.op && constant == o.constant; }
};

struct Rule {
  std::vector<Predicate> condition;
  Verdict prediction = Verdict::Fail;
  std::size_t correct = 0;  // matching training rows whose verdict equals the prediction
  std::size_t support = 0;  // matching training rows

  bool matches(const TestInput& t) const;
  Scalar confidence() const { return support ? static_cast<Scalar>(correct) / static_cast<Scalar>(support) : 0.0; }
  bool operator==(const Rule& o) const {
    return condition == o.condition && prediction == o.prediction && correct == o.correct && support == o.support;
  }
};

struct RuleSet {
  std::vector<std::string> variables;  // names of the space the rules were learned on
  std::vector<Rule> rules;
  Verdict default_prediction = Verdict::Pass;

  bool operator==(const RuleSet& o) const = default;
};

/// Rows as (input, verdict) pairs; fitness kept as an auxiliary column.
struct BinarizedDataset {
  InputSpace space;
  std::vector<TestInput> inputs;
  std::vector<Verdict> labels;
  std::vector<Scalar> fitness;

  std::size_t size() const noexcept { return labels.size(); }
};

BinarizedDataset binarize(const LabeledDataset& ds);

/// Individual variables of a space.
FeatureSet individual_features(const InputSpace& space);

/// One feature set per subset of two or more variables (holding that subset's
/// sum) plus, first, the set of all individual variables: 2^n - n - 1 + 1 sets.
/// Throws TooManyVariables above 16 variables.
std::vector<FeatureSet> enumerate_sum_features(const InputSpace& space);
std::vector<FeatureSet> enumerate_sum_features(std::size_t n_vars);

struct RuleLearnerParams {
  Scalar mdl_bits = 64.0;           // stop when description length exceeds the best by this much
  Scalar grow_fraction = 2.0 / 3.0;
  std::size_t max_conditions = 8;
  std::size_t max_thresholds = 1024;  // candidate cut points per feature (quantiles beyond this)
  bool optimize = false;            // one replacement pass over the learned rules

  nlohmann::json to_json() const;
  static RuleLearnerParams from_json(const nlohmann::json& j);
};

/// Sequential covering in the RIPPER family. Throws SingleClass.
RuleSet learn_ruleset(const BinarizedDataset& data, const FeatureSet& features, const RuleLearnerParams& params,
                      Rng& rng);

/// Recomputes correct/support on a dataset.
void score_rules(RuleSet& rs, const BinarizedDataset& data);

/// Fail rules whose confidence is exactly one.
std::vector<Rule> extract_fail_rules(const RuleSet& rs);

/// True when every input of the space satisfying b also satisfies a. Sound
/// but incomplete: forms other than those b constrains are bounded through b's
/// variable box only.
bool implies(const Rule& a, const Rule& b, const InputSpace& space);

/// Drops rules subsumed by another kept rule; only fail rules are compared.
/// Higher support wins between equivalent rules; output keeps input order.
std::vector<Rule> minimize_rules(const std::vector<Rule>& rules, const InputSpace& space);

Verdict apply_ruleset(const RuleSet& rs, const TestInput& t);

nlohmann::json to_json(const RuleSet& rs);
RuleSet ruleset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Rule& r);
Rule rule_from_json(const nlohmann::json& j);

/// "IF v5+v6+v7 > 15.02 THEN FAIL"; constants on features with a reference
/// value are shown relative to it ("91%·thresh6").
std::string render(const Rule& r, const std::vector<ReferenceValue>& refs = {});
std::string render(const RuleSet& rs, const std::vector<ReferenceValue>& refs = {});

/// Fraction of rows whose verdict the rule set reproduces.
Scalar accuracy(const RuleSet& rs, const BinarizedDataset& test);

/// Rule-learner settings chosen by k-fold cross-validated accuracy over a grid.
struct RuleTuneResult {
  RuleLearnerParams best;
  Scalar best_accuracy = 0.0;
};
RuleTuneResult tune_rule_learner(const BinarizedDataset& data, const FeatureSet& features, std::size_t folds, Rng& rng);

}  // namespace failscope
