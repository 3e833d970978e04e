#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "failscope/core.hpp"
#include "failscope/models.hpp"
#include "failscope/rng.hpp"
#include "failscope/sampling.hpp"
#include "failscope/subjects.hpp"

namespace failscope {

enum class Strategy { SA, SA_DYN, RT_GUIDED, LR_GUIDED, SOTA, RS };

/// Simulated overhead charged against the time budget. The fixed charges make
/// runs reproducible across machines; `measured` charges wall-clock seconds instead.
struct CostModel {
  Scalar train_seconds = 0.3;    // per model fit
  Scalar tune_seconds = 3.0;     // per tuned model type
  Scalar predict_seconds = 1.0;  // per surrogate prediction, including proposing the input
  Scalar score_seconds = 0.01;   // per candidate scored by a guiding classifier
  /// Surrogate types of one retraining are fitted side by side, so the
  /// simulated charge is that of a single fit (and a single tuning).
  bool concurrent_training = true;
  bool measured = false;
};

struct GeneratorConfig {
  Strategy strategy = Strategy::RS;
  ModelType sa_type = ModelType::RT;
  std::vector<ModelType> dyn_types{kSurrogateTypes.begin(), kSurrogateTypes.end()};
  SamplerConfig sampler;
  /// Fraction of the budget given to preprocessing; 0 keeps sampler.initial_dataset_size.
  Scalar preprocess_share = 0.0;
  Scalar margin_pct = 0.05;
  std::size_t lr_candidates = 100;
  bool retrain_tune_once = true;  // tune at the first training only; false disables tuning
  std::size_t tune_trials = 4;
  std::size_t sota_inputs_per_path = 1;
  Hyperparams class_tree_hyperparams = default_hyperparams(ModelType::ClassTree);
  Hyperparams logistic_hyperparams = default_hyperparams(ModelType::LogReg);
  CostModel costs;
  std::size_t max_iterations = 200000;  // guard for budgets that never bind

  void validate() const;
};

std::string strategy_label(const GeneratorConfig& cfg);
/// Accepts SA_<type> (e.g. SA_RF), SA_DYN, RT_GUIDED, LR_GUIDED, SOTA, RS.
GeneratorConfig parse_strategy(const std::string& label, GeneratorConfig base = {});

struct TraceEvent {
  std::size_t iteration = 0;
  std::string action;  // train, predict, execute, shrink_range, pick_candidate
  nlohmann::json payload;
};

struct GenerationResult {
  LabeledDataset dataset;
  LabeledDataset executed;  // DS^l: executed rows only
  std::optional<TrainedModel> final_model;
  std::optional<ClassTreeModel> final_tree;
  std::vector<TraceEvent> trace;
  std::size_t preprocessing_rows = 0;
  bool preprocessing_truncated = false;
  std::size_t consumed_executions = 0;
  Scalar consumed_time = 0.0;
};

/// Replaces surrogate fitting, e.g. with a stub. Receives the executed rows.
using SurrogateTrainer = std::function<TrainedModel(ModelType, const LabeledDataset&, Rng&)>;

struct GeneratorHooks {
  SurrogateTrainer trainer;
};

GenerationResult generate(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng,
                          const GeneratorHooks& hooks = {});

GenerationResult run_surrogate_assisted(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget,
                                        Rng& rng, const GeneratorHooks& hooks = {});
GenerationResult run_dynamic_surrogate(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget,
                                       Rng& rng, const GeneratorHooks& hooks = {});
GenerationResult run_rt_guided(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng);
GenerationResult run_lr_guided(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng);
GenerationResult run_sota(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng);
GenerationResult run_random_search(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng);

// ------------------------------------------------------------- helpers

/// True when fbar, fbar - e and fbar + e all fall on the same side of zero
/// (>= 0 or < 0); the prediction can then stand in for an execution.
constexpr bool prediction_is_confident(Scalar fbar, Scalar e) noexcept {
  return (fbar >= 0 && fbar - e >= 0 && fbar + e >= 0) || (fbar < 0 && fbar - e < 0 && fbar + e < 0);
}

/// Leaves whose values are closest to zero from either side: the smallest
/// non-negative and the largest negative. Ties go to the shallower, then the
/// leftmost leaf. Empty when all leaves share a sign.
struct BoundaryLeaves {
  TreePath non_negative;
  TreePath negative;
};
std::optional<BoundaryLeaves> boundary_leaves(const DecisionTree& tree);

/// Narrows per-variable sampling ranges around the boundary predicates on the
/// two paths. `columns` maps tree features to variables (one-hot columns are
/// ignored). A candidate range replaces the current one only if it is not wider.
std::vector<RealRange> reduce_ranges(const BoundaryLeaves& leaves, const Encoder& encoder,
                                     const std::vector<RealRange>& original, const std::vector<RealRange>& current,
                                     Scalar margin_pct);

/// Per-variable ranges of a space (enumerated variables use their index range).
std::vector<RealRange> space_ranges(const InputSpace& space);

/// Uniform input with real variables drawn from `ranges`.
TestInput sample_in_ranges(const InputSpace& space, const std::vector<RealRange>& ranges, Rng& rng);

/// Uniform input satisfying every predicate of a classification-tree path.
/// Throws EmptyPathRegion when the predicates are contradictory.
TestInput sample_in_path(const Encoder& encoder, const TreePath& path, Rng& rng);

nlohmann::json trace_to_json(const std::vector<TraceEvent>& trace);

}  // namespace failscope
