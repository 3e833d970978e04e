#include "failscope/generators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace failscope {

void GeneratorConfig::validate() const {
  sampler.validate();
  if (!(margin_pct > 0.0 && margin_pct < 0.5)) raise(ErrorCode::InvalidConfig, "margin_pct must lie in (0, 0.5)");
  if (lr_candidates < 2) raise(ErrorCode::InvalidConfig, "lr_candidates must be at least 2");
  if (strategy == Strategy::SA_DYN && dyn_types.size() < 2)
    raise(ErrorCode::InvalidConfig, "dynamic surrogate selection needs at least two model types");
  for (auto t : dyn_types)
    if (!is_regression(t)) raise(ErrorCode::InvalidConfig, "dynamic surrogate types must be regressors");
  if (strategy == Strategy::SA && !is_regression(sa_type))
    raise(ErrorCode::InvalidConfig, "surrogate type must be a regressor");
  if (!(preprocess_share >= 0.0 && preprocess_share < 1.0))
    raise(ErrorCode::InvalidConfig, "preprocess_share must lie in [0, 1)");
  if (sota_inputs_per_path < 1) raise(ErrorCode::InvalidConfig, "sota_inputs_per_path must be at least 1");
  if (tune_trials < 1) raise(ErrorCode::InvalidConfig, "tune_trials must be at least 1");
  if (costs.train_seconds < 0 || costs.tune_seconds < 0 || costs.predict_seconds < 0 || costs.score_seconds < 0)
    raise(ErrorCode::InvalidConfig, "overhead costs must be non-negative");
}

std::string strategy_label(const GeneratorConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::SA: return "SA_" + std::string(to_string(cfg.sa_type));
    case Strategy::SA_DYN: return "SA_DYN";
    case Strategy::RT_GUIDED: return "RT_GUIDED";
    case Strategy::LR_GUIDED: return "LR_GUIDED";
    case Strategy::SOTA: return "SOTA";
    case Strategy::RS: return "RS";
  }
  return "?";
}

GeneratorConfig parse_strategy(const std::string& label, GeneratorConfig base) {
  if (label == "SA_DYN") {
    base.strategy = Strategy::SA_DYN;
  } else if (label.rfind("SA_", 0) == 0) {
    base.strategy = Strategy::SA;
    base.sa_type = model_type_from_string(label.substr(3));
    if (!is_regression(base.sa_type)) raise(ErrorCode::InvalidConfig, "'" + label + "' is not a surrogate strategy");
  } else if (label == "RT_GUIDED") {
    base.strategy = Strategy::RT_GUIDED;
  } else if (label == "LR_GUIDED") {
    base.strategy = Strategy::LR_GUIDED;
  } else if (label == "SOTA") {
    base.strategy = Strategy::SOTA;
  } else if (label == "RS") {
    base.strategy = Strategy::RS;
  } else {
    raise(ErrorCode::InvalidConfig, "unknown strategy '" + label + "'");
  }
  return base;
}

nlohmann::json trace_to_json(const std::vector<TraceEvent>& trace) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : trace) out.push_back({{"iteration", e.iteration}, {"action", e.action}, {"payload", e.payload}});
  return out;
}

// ------------------------------------------------------------- helpers

std::vector<RealRange> space_ranges(const InputSpace& space) {
  std::vector<RealRange> out;
  for (const auto& v : space.variables()) out.push_back(v.numeric_range());
  return out;
}

TestInput sample_in_ranges(const InputSpace& space, const std::vector<RealRange>& ranges, Rng& rng) {
  TestInput t(static_cast<Eigen::Index>(space.size()));
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& r = ranges[i];
    if (space[i].is_real()) {
      t[static_cast<Eigen::Index>(i)] = r.upper > r.lower ? rng.uniform(r.lower, r.upper) : r.lower;
    } else {
      const auto lo = static_cast<std::size_t>(std::ceil(r.lower));
      const auto hi = static_cast<std::size_t>(std::floor(r.upper));
      t[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(lo + rng.below(hi - lo + 1));
    }
  }
  return t;
}

std::optional<BoundaryLeaves> boundary_leaves(const DecisionTree& tree) {
  const auto paths = tree.paths();
  const TreePath* pos = nullptr;
  const TreePath* neg = nullptr;
  auto value = [&](const TreePath& p) { return tree.nodes[static_cast<std::size_t>(p.leaf)].value; };
  // Paths arrive leftmost first, so strict comparisons keep the leftmost on ties.
  for (const auto& p : paths) {
    const Scalar v = value(p);
    if (v >= 0) {
      if (!pos || v < value(*pos) || (v == value(*pos) && p.depth < pos->depth)) pos = &p;
    } else {
      if (!neg || v > value(*neg) || (v == value(*neg) && p.depth < neg->depth)) neg = &p;
    }
  }
  if (!pos || !neg) return std::nullopt;
  return BoundaryLeaves{*pos, *neg};
}

std::vector<RealRange> reduce_ranges(const BoundaryLeaves& leaves, const Encoder& encoder,
                                     const std::vector<RealRange>& original, const std::vector<RealRange>& current,
                                     Scalar margin_pct) {
  const std::size_t n = original.size();
  std::vector<std::optional<Scalar>> upper(n), lower(n);
  for (const auto* path : {&leaves.non_negative, &leaves.negative}) {
    for (const auto& pred : path->predicates) {
      const auto& col = encoder.columns()[pred.feature];
      if (col.symbol >= 0) continue;
      auto& slot = pred.greater ? lower[col.variable] : upper[col.variable];
      if (!slot) {
        slot = pred.threshold;
      } else {
        slot = pred.greater ? std::max(*slot, pred.threshold) : std::min(*slot, pred.threshold);
      }
    }
  }

  std::vector<RealRange> out = current;
  for (std::size_t v = 0; v < n; ++v) {
    if (!upper[v] && !lower[v]) continue;
    auto margin = [&](Scalar c) { return c != 0.0 ? margin_pct * std::abs(c) : margin_pct * original[v].width(); };
    Scalar lo_c, hi_c;
    if (upper[v] && lower[v]) {
      lo_c = std::min(*upper[v], *lower[v]);
      hi_c = std::max(*upper[v], *lower[v]);
    } else {
      lo_c = hi_c = upper[v] ? *upper[v] : *lower[v];
    }
    RealRange cand{std::max(original[v].lower, lo_c - margin(lo_c)), std::min(original[v].upper, hi_c + margin(hi_c))};
    if (cand.lower > cand.upper) continue;
    if (cand.width() <= current[v].width()) out[v] = cand;
  }
  return out;
}

TestInput sample_in_path(const Encoder& encoder, const TreePath& path, Rng& rng) {
  const auto& space = encoder.space();
  const std::size_t n = space.size();
  std::vector<RealRange> box = space_ranges(space);
  std::vector<bool> open_lower(n, false);
  std::vector<std::vector<bool>> allowed(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!space[i].is_real()) allowed[i].assign(space[i].symbols().size(), true);

  for (const auto& pred : path.predicates) {
    const auto& col = encoder.columns()[pred.feature];
    const std::size_t v = col.variable;
    if (col.symbol >= 0) {
      // One-hot column: "<= t" excludes the symbol when t < 1, "> t" selects it when t >= 0.
      const auto s = static_cast<std::size_t>(col.symbol);
      for (std::size_t k = 0; k < allowed[v].size(); ++k) {
        const Scalar x = k == s ? 1.0 : 0.0;
        if (pred.greater ? !(x > pred.threshold) : !(x <= pred.threshold)) allowed[v][k] = false;
      }
    } else if (pred.greater) {
      if (pred.threshold >= box[v].lower) {
        box[v].lower = pred.threshold;
        open_lower[v] = true;
      }
    } else {
      box[v].upper = std::min(box[v].upper, pred.threshold);
    }
  }

  TestInput t(static_cast<Eigen::Index>(n));
  for (std::size_t v = 0; v < n; ++v) {
    if (space[v].is_real()) {
      const auto& r = box[v];
      if (r.lower > r.upper || (open_lower[v] && r.lower >= r.upper))
        raise(ErrorCode::EmptyPathRegion, "tree path has an empty region for " + space[v].name());
      Scalar x = r.upper > r.lower ? rng.uniform(r.lower, r.upper) : r.lower;
      if (open_lower[v] && x <= r.lower) x = std::nextafter(r.lower, r.upper);
      t[static_cast<Eigen::Index>(v)] = x;
    } else {
      std::vector<std::size_t> ok;
      for (std::size_t k = 0; k < allowed[v].size(); ++k)
        if (allowed[v][k]) ok.push_back(k);
      if (ok.empty()) raise(ErrorCode::EmptyPathRegion, "tree path excludes every symbol of " + space[v].name());
      t[static_cast<Eigen::Index>(v)] = static_cast<Scalar>(ok[rng.below(ok.size())]);
    }
  }
  return t;
}

// ------------------------------------------------------- shared machinery

namespace {

using Clock = std::chrono::steady_clock;

// Runs `work` and charges its overhead. Returns false, without charging, when
// the budget cannot absorb the cost; with fixed costs the check precedes the work.
template <typename Work>
bool with_overhead(ExecutionBudget& budget, const CostModel& costs, Scalar fixed_seconds, Work&& work) {
  if (!costs.measured) {
    if (!budget.can_spend(fixed_seconds)) return false;
    budget.charge_overhead(fixed_seconds);
    work();
    return true;
  }
  const auto start = Clock::now();
  work();
  const Scalar spent = std::chrono::duration<Scalar>(Clock::now() - start).count();
  if (!budget.can_spend(spent)) return false;
  budget.charge_overhead(spent);
  return true;
}

GeneratorConfig effective_config(const GeneratorConfig& cfg, const ExecutionBudget& budget) {
  GeneratorConfig out = cfg;
  if (cfg.preprocess_share > 0.0) {
    const Scalar by_time = std::floor(budget.max_simulated_time() / budget.exec_cost());
    const Scalar capacity = std::min(static_cast<Scalar>(budget.max_executions()), by_time);
    const auto half = static_cast<std::size_t>(std::floor(cfg.preprocess_share * capacity / 2.0));
    out.sampler.initial_dataset_size = std::max<std::size_t>(4, 2 * half);
  }
  out.validate();
  return out;
}

struct Run {
  const Subject& subject;
  GeneratorConfig cfg;
  ExecutionBudget& budget;
  Rng& rng;
  GenerationResult result;
  std::size_t iteration = 0;

  Run(const Subject& s, const GeneratorConfig& c, ExecutionBudget& b, Rng& r)
      : subject(s), cfg(effective_config(c, b)), budget(b), rng(r),
        result{LabeledDataset(s.space), LabeledDataset(s.space), {}, {}, {}, 0, false, 0, 0.0} {}

  void preprocess_step() {
    Rng pre_rng = rng.split("preprocess");
    auto pre = preprocess(subject, cfg.sampler, budget, pre_rng);
    result.dataset = pre.dataset;
    result.executed = pre.dataset;
    result.preprocessing_rows = pre.dataset.size();
    result.preprocessing_truncated = pre.truncated;
    event("preprocess", {{"rows", pre.dataset.size()},
                         {"smote", pre.smote_count},
                         {"initial_pass", pre.initial_pass},
                         {"initial_fail", pre.initial_fail},
                         {"truncated", pre.truncated}});
  }

  void event(std::string action, nlohmann::json payload) {
    result.trace.push_back({iteration, std::move(action), std::move(payload)});
  }

  /// Executes and appends as an executed row. False when the budget is spent.
  bool execute_and_append(const TestInput& t, nlohmann::json payload = nlohmann::json::object()) {
    if (!budget.can_execute()) return false;
    const Scalar f = execute(subject, t, budget);
    LabeledRow row{t, f, RowSource::Executed};
    result.dataset.append(row);
    result.executed.append(row);
    payload["fitness"] = f;
    event("execute", std::move(payload));
    return true;
  }

  bool more_iterations() { return ++iteration <= cfg.max_iterations; }

  GenerationResult finish() {
    result.consumed_executions = budget.consumed_executions();
    result.consumed_time = budget.consumed_time();
    return std::move(result);
  }

  Matrix encoded(const Encoder& enc) const { return enc.encode(std::span<const LabeledRow>(result.dataset.rows())); }
};

// Fits surrogates, tuning each type once at its first training.
class SurrogateFitter {
 public:
  SurrogateFitter(const Subject& s, const GeneratorConfig& cfg, const GeneratorHooks& hooks)
      : subject_(s), cfg_(cfg), hooks_(hooks) {}

  Scalar overhead(std::span<const ModelType> types) const {
    std::size_t untuned = 0;
    if (!hooks_.trainer && cfg_.retrain_tune_once)
      for (auto t : types) untuned += !tuned_.count(t);
    const auto& c = cfg_.costs;
    if (c.concurrent_training)
      return c.train_seconds + (untuned ? c.tune_seconds : 0.0);
    return c.train_seconds * static_cast<Scalar>(types.size()) + c.tune_seconds * static_cast<Scalar>(untuned);
  }

  TrainedModel fit(ModelType t, const LabeledDataset& dsl, Rng& rng) {
    if (hooks_.trainer) return hooks_.trainer(t, dsl, rng);
    if (cfg_.retrain_tune_once && !tuned_.count(t)) {
      TuneOptions opts;
      opts.trials = cfg_.tune_trials;
      opts.bounds = subject_.bounds;
      Rng tune_rng = rng.split("tune");
      tuned_[t] = tune(t, dsl, opts, tune_rng).best;
    }
    TrainOptions opts;
    opts.bounds = subject_.bounds;
    if (auto it = tuned_.find(t); it != tuned_.end()) opts.hyperparams = it->second;
    return train(t, dsl, opts, rng);
  }

 private:
  const Subject& subject_;
  const GeneratorConfig& cfg_;
  const GeneratorHooks& hooks_;
  std::map<ModelType, Hyperparams> tuned_;
};

GenerationResult surrogate_loop(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng,
                                const GeneratorHooks& hooks, std::vector<ModelType> types) {
  Run run(s, cfg, budget, rng);
  run.preprocess_step();
  SurrogateFitter fitter(s, run.cfg, hooks);
  Rng loop_rng = rng.split("loop");
  Rng train_rng = rng.split("train");
  std::optional<TrainedModel> active;
  bool retrain = true;

  while (run.more_iterations()) {
    if (retrain) {
      std::vector<TrainedModel> fitted;
      Rng iter_rng = train_rng.split(run.iteration);
      const bool ok = with_overhead(budget, run.cfg.costs, fitter.overhead(types), [&] {
        for (auto t : types) {
          Rng type_rng = iter_rng.split(static_cast<std::uint64_t>(t));
          fitted.push_back(fitter.fit(t, run.result.executed, type_rng));
        }
      });
      if (!ok) break;
      std::size_t best = 0;
      for (std::size_t k = 1; k < fitted.size(); ++k) {
        const bool lower_mae = fitted[k].holdout_mae < fitted[best].holdout_mae;
        const bool tie_lower_type = fitted[k].holdout_mae == fitted[best].holdout_mae && fitted[k].type < fitted[best].type;
        if (lower_mae || tie_lower_type) best = k;
      }
      nlohmann::json maes = nlohmann::json::object();
      for (const auto& m : fitted) maes[std::string(to_string(m.type))] = m.holdout_mae;
      active = std::move(fitted[best]);
      run.event("train", {{"active", to_string(active->type)}, {"mae", active->holdout_mae}, {"candidates", maes},
                          {"rows", run.result.executed.size()}});
      retrain = false;
    }

    TestInput t = sample_uniform(s.space, loop_rng);
    Scalar fbar = 0.0;
    if (!with_overhead(budget, run.cfg.costs, run.cfg.costs.predict_seconds, [&] { fbar = active->predict(t); })) break;
    const Scalar e = active->holdout_mae;
    if (prediction_is_confident(fbar, e)) {
      run.result.dataset.append({t, fbar, RowSource::Predicted});
      run.event("predict", {{"fbar", fbar}, {"e", e}, {"model", to_string(active->type)}});
    } else {
      if (!run.execute_and_append(t, {{"fbar", fbar}, {"e", e}})) break;
      retrain = true;
    }
  }
  run.result.final_model = std::move(active);
  return run.finish();
}

TreeParams tree_params(const Hyperparams& hp) {
  TreeParams tp;
  if (auto it = hp.find("max_depth"); it != hp.end()) tp.max_depth = static_cast<int>(it->second);
  if (auto it = hp.find("min_leaf"); it != hp.end()) tp.min_leaf = static_cast<std::size_t>(it->second);
  return tp;
}

nlohmann::json ranges_json(const std::vector<RealRange>& ranges) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : ranges) out.push_back({r.lower, r.upper});
  return out;
}

}  // namespace

// ------------------------------------------------------------ strategies

GenerationResult run_surrogate_assisted(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget,
                                        Rng& rng, const GeneratorHooks& hooks) {
  return surrogate_loop(s, cfg, budget, rng, hooks, {cfg.sa_type});
}

GenerationResult run_dynamic_surrogate(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget,
                                       Rng& rng, const GeneratorHooks& hooks) {
  return surrogate_loop(s, cfg, budget, rng, hooks, cfg.dyn_types);
}

GenerationResult run_rt_guided(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng) {
  Run run(s, cfg, budget, rng);
  run.preprocess_step();
  const Encoder enc(s.space);
  const auto original = space_ranges(s.space);
  auto current = original;
  Rng loop_rng = rng.split("loop");
  Hyperparams hp = default_hyperparams(ModelType::RT);

  if (run.cfg.retrain_tune_once && run.result.dataset.size() >= 2) {
    const bool ok = with_overhead(budget, run.cfg.costs, run.cfg.costs.tune_seconds, [&] {
      TuneOptions opts;
      opts.trials = run.cfg.tune_trials;
      opts.bounds = s.bounds;
      Rng tune_rng = rng.split("tune");
      hp = tune(ModelType::RT, run.result.dataset, opts, tune_rng).best;
    });
    if (!ok) return run.finish();
  }

  while (run.more_iterations()) {
    DecisionTree tree;
    const bool ok = with_overhead(budget, run.cfg.costs, run.cfg.costs.train_seconds, [&] {
      Vector y(static_cast<Eigen::Index>(run.result.dataset.size()));
      for (std::size_t i = 0; i < run.result.dataset.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = run.result.dataset.rows()[i].fitness;
      tree = fit_regression_tree(run.encoded(enc), y, tree_params(hp));
    });
    if (!ok) break;
    run.event("train", {{"model", "RT"}, {"leaves", tree.leaf_count()}});
    if (auto leaves = boundary_leaves(tree)) {
      current = reduce_ranges(*leaves, enc, original, current, run.cfg.margin_pct);
      run.event("shrink_range", {{"ranges", ranges_json(current)}});
    }
    const TestInput t = sample_in_ranges(s.space, current, loop_rng);
    if (!run.execute_and_append(t)) break;
  }
  return run.finish();
}

GenerationResult run_lr_guided(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng) {
  Run run(s, cfg, budget, rng);
  run.preprocess_step();
  const Encoder enc(s.space);
  Rng loop_rng = rng.split("loop");

  while (run.more_iterations()) {
    const auto& rows = run.result.dataset.rows();
    std::vector<Verdict> labels;
    labels.reserve(rows.size());
    for (const auto& r : rows) labels.push_back(r.label());
    const std::size_t passes = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Verdict::Pass));

    TestInput pick;
    if (passes == 0 || passes == labels.size()) {
      pick = sample_uniform(s.space, loop_rng);
      run.event("pick_candidate", {{"fallback", "single_class"}});
    } else {
      LogisticModel lr;
      const bool ok = with_overhead(budget, run.cfg.costs, run.cfg.costs.train_seconds,
                                    [&] { lr = fit_logistic(run.encoded(enc), labels, run.cfg.logistic_hyperparams); });
      if (!ok) break;
      const Scalar p = std::clamp(static_cast<Scalar>(passes) / static_cast<Scalar>(labels.size()), 0.01, 0.99);
      const Scalar target = std::log(p / (1.0 - p));
      run.event("train", {{"model", "LogReg"}, {"iterations", lr.iterations}, {"p", p}});

      const auto cands = generate_tests(s.space, run.cfg.lr_candidates, loop_rng);
      const Scalar norm = lr.coef.norm();
      std::size_t best = 0;
      Scalar best_dist = 0.0;
      const Scalar scoring = run.cfg.costs.score_seconds * static_cast<Scalar>(cands.size());
      const bool scored = with_overhead(budget, run.cfg.costs, scoring, [&] {
        if (!(norm > 0.0)) {
          best = loop_rng.below(cands.size());
          return;
        }
        best_dist = std::numeric_limits<Scalar>::infinity();
        for (std::size_t k = 0; k < cands.size(); ++k) {
          const Scalar d = std::abs(lr.logit(enc.encode(cands[k])) - target) / norm;
          if (d < best_dist) {
            best_dist = d;
            best = k;
          }
        }
      });
      if (!scored) break;
      pick = cands[best];
      if (norm > 0.0) {
        run.event("pick_candidate", {{"distance", best_dist}, {"target_logit", target}});
      } else {
        run.event("pick_candidate", {{"fallback", "degenerate_model"}});
      }
    }
    if (!run.execute_and_append(pick)) break;
  }
  return run.finish();
}

GenerationResult run_sota(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng) {
  Run run(s, cfg, budget, rng);
  run.preprocess_step();
  Rng loop_rng = rng.split("loop");
  bool exhausted = false;

  while (!exhausted && run.more_iterations()) {
    ClassTreeModel tree;
    const bool ok = with_overhead(budget, run.cfg.costs, run.cfg.costs.train_seconds,
                                  [&] { tree = fit_class_tree(run.result.dataset, run.cfg.class_tree_hyperparams); });
    if (!ok) break;
    const auto paths = tree.tree.paths();
    run.event("train", {{"model", "ClassTree"}, {"leaves", paths.size()}});
    std::vector<TestInput> batch;
    for (const auto& path : paths)
      for (std::size_t k = 0; k < run.cfg.sota_inputs_per_path; ++k)
        batch.push_back(sample_in_path(tree.encoder, path, loop_rng));
    for (const auto& t : batch) {
      if (!run.execute_and_append(t)) {
        exhausted = true;
        break;
      }
    }
  }
  // The failure model is the tree fitted on everything the loop generated.
  if (run.result.dataset.count(Verdict::Pass) + run.result.dataset.count(Verdict::Fail) > 0)
    run.result.final_tree = fit_class_tree(run.result.dataset, run.cfg.class_tree_hyperparams);
  return run.finish();
}

GenerationResult run_random_search(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng) {
  Run run(s, cfg, budget, rng);
  run.preprocess_step();
  Rng loop_rng = rng.split("loop");
  std::vector<TestInput> existing;
  for (const auto& r : run.result.dataset.rows()) existing.push_back(r.input);
  while (run.more_iterations()) {
    if (!budget.can_execute()) break;
    TestInput t = adaptive_random(s.space, 1, existing, run.cfg.sampler.adaptive_candidates, loop_rng).front();
    if (!run.execute_and_append(t)) break;
    existing.push_back(std::move(t));
  }
  return run.finish();
}

GenerationResult generate(const Subject& s, const GeneratorConfig& cfg, ExecutionBudget& budget, Rng& rng,
                          const GeneratorHooks& hooks) {
  switch (cfg.strategy) {
    case Strategy::SA: return run_surrogate_assisted(s, cfg, budget, rng, hooks);
    case Strategy::SA_DYN: return run_dynamic_surrogate(s, cfg, budget, rng, hooks);
    case Strategy::RT_GUIDED: return run_rt_guided(s, cfg, budget, rng);
    case Strategy::LR_GUIDED: return run_lr_guided(s, cfg, budget, rng);
    case Strategy::SOTA: return run_sota(s, cfg, budget, rng);
    case Strategy::RS: return run_random_search(s, cfg, budget, rng);
  }
  raise(ErrorCode::InvalidConfig, "unknown strategy");
}

}  // namespace failscope
