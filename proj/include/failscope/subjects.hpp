#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "failscope/core.hpp"

namespace failscope {

/// A named reference value used to render rule constants relative to a known
/// threshold, e.g. "91%·thresh6".
struct ReferenceValue {
  std::vector<std::size_t> indices;  // one index for a variable, several for a sum
  std::string label;
  Scalar value = 0.0;
};

struct Subject {
  std::string name;
  InputSpace space;
  std::function<Scalar(const TestInput&)> fitness_fn;
  std::function<Verdict(const TestInput&)> ground_truth;  // empty when unknown
  FitnessBounds bounds;
  Scalar exec_cost = 1.0;
  bool sum_features = false;  // cumulative inputs, sums of subsets are meaningful features
  std::vector<ReferenceValue> references;
  nlohmann::json params;

  /// Fitness without budget accounting, clamped to the declared bounds.
  Scalar evaluate(const TestInput& t) const;
};

using SubjectCatalog = std::map<std::string, Subject>;

Scalar execute(const Subject& s, const TestInput& t, ExecutionBudget& budget);
Verdict ground_truth_verdict(const Subject& s, const TestInput& t);

// Parameterised constructors. Every params object is optional; missing keys
// take the catalog defaults.
Subject make_sum_cap(const nlohmann::json& params = {});
Subject make_threshold_mix(const nlohmann::json& params = {});
Subject make_band(const nlohmann::json& params = {});
Subject make_step_controller(const nlohmann::json& params = {});
Subject make_xor_regions(const nlohmann::json& params = {});

Subject make_subject(const std::string& name, const nlohmann::json& params = {});

/// The built-in subjects: sum_cap, threshold_mix, band, step_controller, xor_regions.
/// `overrides` maps subject names to parameter objects.
SubjectCatalog builtin_catalog(const nlohmann::json& overrides = {});

/// Output trajectory of the tracking loop; exposed for tests.
struct StepResponse {
  std::vector<Scalar> reference;
  std::vector<Scalar> output;
  Scalar max_overshoot = 0.0;
};
StepResponse simulate_step_controller(const TestInput& control_points, Scalar gain_dt, std::size_t steps);

}  // namespace failscope
